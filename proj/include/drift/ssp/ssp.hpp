// Copyright 2026 drift authors. Apache 2.0 License.
//
// Structured scene perception: voxel downsampling of the merged LiDAR cloud,
// k-NN latent graph, stacked EdgeConv layers with coordinate-wise max
// aggregation, global max pooling, and fusion of the pooled scene feature
// with the encoded velocity history.
//
// The navigation goal is deliberately NOT an input to any function here:
// the fused context c_env must describe the environment only.

#pragma once

#include <map>
#include <utility>

#include "drift/numcore/ops.hpp"
#include "drift/simenv/episode.hpp"

namespace drift::ssp {

using numcore::Tensor;
using numcore::TensorPtr;

template <class S>
using NamedParams = std::vector<std::pair<std::string, TensorPtr<S>>>;

struct SspConfig {
    double voxel_size = 0.2;  // meters
    int k = 8;                // graph neighbors
    int depth = 2;            // EdgeConv layers
    int embed_dim = 64;       // D: node/pooled feature width
    int hidden = 64;          // edge-MLP hidden width
    int vel_channels = 32;    // D_v
    int vel_kernel = 3;
    bool use_range_channel = true;  // 4th input channel: centroid range
    double sentinel_range = 10.0;   // empty-cloud fallback node distance

    int node_input_dim() const { return use_range_channel ? 4 : 3; }
};

// ---- graph construction (no learned state) ----

struct SceneGraph {
    Eigen::MatrixX2d coords;          // N_v x 2 voxel centroids
    std::vector<int> density;         // points per voxel
    std::vector<std::vector<int>> edges;  // per node, neighbor indices
};

/// One node per occupied voxel: centroid + point count.  Points inside each
/// voxel are summed in a canonical sorted order and voxels emitted sorted by
/// index, so the result is independent of input ordering.
inline std::pair<Eigen::MatrixX2d, std::vector<int>> voxel_downsample(const PointSet& points,
                                                                      double voxel_size) {
    if (points.empty()) throw std::invalid_argument("voxel_downsample: empty point set");
    if (voxel_size <= 0) throw std::invalid_argument("voxel_downsample: voxel_size must be > 0");

    std::map<std::pair<long, long>, std::vector<Vec2>> bins;
    for (const auto& p : points) {
        const long ix = static_cast<long>(std::floor(p.x() / voxel_size));
        const long iy = static_cast<long>(std::floor(p.y() / voxel_size));
        bins[{ix, iy}].push_back(p);
    }
    Eigen::MatrixX2d coords(static_cast<int>(bins.size()), 2);
    std::vector<int> density;
    density.reserve(bins.size());
    int row = 0;
    for (auto& [key, pts] : bins) {
        std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
            return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
        });
        Vec2 sum{0, 0};
        for (const auto& p : pts) sum += p;
        coords.row(row++) = sum / static_cast<double>(pts.size());
        density.push_back(static_cast<int>(pts.size()));
    }
    return {coords, density};
}

/// min(k, N_v - 1) nearest neighbors per node, Euclidean on centroids, ties
/// broken toward the lower node index.
inline std::vector<std::vector<int>> knn_graph(const Eigen::MatrixX2d& coords, int k) {
    const int n = static_cast<int>(coords.rows());
    if (n < 1) throw std::invalid_argument("knn_graph: need at least one node");
    if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
    const int kk = std::min(k, n - 1);

    std::vector<std::vector<int>> edges(static_cast<std::size_t>(n));
    std::vector<std::pair<double, int>> cand;
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back((coords.row(i) - coords.row(j)).squaredNorm(), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        for (int j = 0; j < kk; ++j) edges[static_cast<std::size_t>(i)].push_back(cand[j].second);
    }
    return edges;
}

// ---- learned blocks ----

template <class S>
struct EdgeMlp {
    TensorPtr<S> w1, b1, w2, b2;  // [2*Din x H], [1 x H], [H x Dout], [1 x Dout]

    static EdgeMlp init(int d_in, int hidden, int d_out, std::uint64_t seed) {
        EdgeMlp m;
        m.w1 = Tensor<S>::param(2 * d_in, hidden, mix_seed(seed, 1));
        m.b1 = Tensor<S>::param_zeros(1, hidden);
        m.w2 = Tensor<S>::param(hidden, d_out, mix_seed(seed, 2));
        m.b2 = Tensor<S>::param_zeros(1, d_out);
        return m;
    }
    void collect(const std::string& prefix, NamedParams<S>& out) const {
        out.emplace_back(prefix + ".w1", w1);
        out.emplace_back(prefix + ".b1", b1);
        out.emplace_back(prefix + ".w2", w2);
        out.emplace_back(prefix + ".b2", b2);
    }
};

template <class S>
struct SspParams {
    std::vector<EdgeMlp<S>> layers;
    // structure-blind fallback encoder: shared per-node MLP (always
    // instantiated so checkpoints keep one format across variants)
    TensorPtr<S> point_w1, point_b1, point_w2, point_b2;
    // velocity encoder: two temporal convolutions, then max over time
    TensorPtr<S> vconv1_w, vconv1_b, vconv2_w, vconv2_b;
    // fusion MLP over c_lidar (+) c_vel
    TensorPtr<S> fuse_w1, fuse_b1, fuse_w2, fuse_b2;

    static SspParams init(const SspConfig& c, std::uint64_t seed) {
        SspParams p;
        int d_in = c.node_input_dim();
        for (int l = 0; l < c.depth; ++l) {
            p.layers.push_back(
                EdgeMlp<S>::init(d_in, c.hidden, c.embed_dim, mix_seed(seed, 10 + l)));
            d_in = c.embed_dim;
        }
        p.point_w1 = Tensor<S>::param(c.node_input_dim(), c.hidden, mix_seed(seed, 30));
        p.point_b1 = Tensor<S>::param_zeros(1, c.hidden);
        p.point_w2 = Tensor<S>::param(c.hidden, c.embed_dim, mix_seed(seed, 31));
        p.point_b2 = Tensor<S>::param_zeros(1, c.embed_dim);
        p.vconv1_w = Tensor<S>::param(2 * c.vel_kernel, c.vel_channels, mix_seed(seed, 20));
        p.vconv1_b = Tensor<S>::param_zeros(1, c.vel_channels);
        p.vconv2_w =
            Tensor<S>::param(c.vel_channels * c.vel_kernel, c.vel_channels, mix_seed(seed, 21));
        p.vconv2_b = Tensor<S>::param_zeros(1, c.vel_channels);
        const int fused_in = c.embed_dim + c.vel_channels;
        p.fuse_w1 = Tensor<S>::param(fused_in, c.hidden, mix_seed(seed, 22));
        p.fuse_b1 = Tensor<S>::param_zeros(1, c.hidden);
        p.fuse_w2 = Tensor<S>::param(c.hidden, c.embed_dim, mix_seed(seed, 23));
        p.fuse_b2 = Tensor<S>::param_zeros(1, c.embed_dim);
        return p;
    }

    void collect(NamedParams<S>& out) const {
        for (std::size_t l = 0; l < layers.size(); ++l)
            layers[l].collect("ssp.layer" + std::to_string(l), out);
        out.emplace_back("ssp.point.w1", point_w1);
        out.emplace_back("ssp.point.b1", point_b1);
        out.emplace_back("ssp.point.w2", point_w2);
        out.emplace_back("ssp.point.b2", point_b2);
        out.emplace_back("ssp.vconv1.w", vconv1_w);
        out.emplace_back("ssp.vconv1.b", vconv1_b);
        out.emplace_back("ssp.vconv2.w", vconv2_w);
        out.emplace_back("ssp.vconv2.b", vconv2_b);
        out.emplace_back("ssp.fuse.w1", fuse_w1);
        out.emplace_back("ssp.fuse.b1", fuse_b1);
        out.emplace_back("ssp.fuse.w2", fuse_w2);
        out.emplace_back("ssp.fuse.b2", fuse_b2);
    }
};

/// h_i' = max_j MLP(h_i (+) (h_j - h_i)).  Isolated nodes (only possible in
/// one-node graphs) fall back to a self-edge, zeroing the relative term.
template <class S>
TensorPtr<S> edgeconv_layer(const TensorPtr<S>& h, const std::vector<std::vector<int>>& edges,
                            const EdgeMlp<S>& mlp) {
    using namespace numcore;
    const int n = h->rows();
    if (static_cast<int>(edges.size()) != n)
        throw std::invalid_argument("edgeconv_layer: edge table size mismatch");
    const int deg = edges[0].empty() ? 1 : static_cast<int>(edges[0].size());

    std::vector<int> src, dst;
    src.reserve(static_cast<std::size_t>(n) * deg);
    dst.reserve(static_cast<std::size_t>(n) * deg);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(edges[static_cast<std::size_t>(i)].size()) != (edges[0].empty() ? 0 : deg))
            throw std::invalid_argument("edgeconv_layer: ragged edge table");
        if (edges[static_cast<std::size_t>(i)].empty()) {
            src.push_back(i);
            dst.push_back(i);
        } else {
            for (int j : edges[static_cast<std::size_t>(i)]) {
                src.push_back(i);
                dst.push_back(j);
            }
        }
    }
    auto h_i = gather_rows(h, src);
    auto h_j = gather_rows(h, dst);
    auto edge_in = concat_cols<S>({h_i, sub(h_j, h_i)});
    auto z = relu(add(matmul(edge_in, mlp.w1), mlp.b1));
    auto per_edge = add(matmul(z, mlp.w2), mlp.b2);
    return group_max_rows(per_edge, deg);
}

struct SceneEncodingT {
    // kept per scalar type below; this empty tag only names the concept
};

template <class S>
struct SceneEncoding {
    SceneGraph graph;
    TensorPtr<S> e_node;   // N_v x D
    TensorPtr<S> c_lidar;  // 1 x D
};

/// Merge scans, build the latent graph, run the EdgeConv stack, pool.  With
/// `use_graph = false` the EdgeConv stack is replaced by the shared per-node
/// MLP (structure-blind ablation); the graph is still built so downstream
/// attention keeps its node coordinates.
template <class S>
SceneEncoding<S> encode_scene(const SspParams<S>& params, const std::vector<PointSet>& scans,
                              const SspConfig& cfg, bool use_graph = true) {
    using namespace numcore;
    PointSet merged;
    for (const auto& s : scans) merged.insert(merged.end(), s.begin(), s.end());
    if (merged.empty()) merged.push_back({cfg.sentinel_range, 0.0});  // sentinel ahead

    SceneEncoding<S> enc;
    auto [coords, density] = voxel_downsample(merged, cfg.voxel_size);
    enc.graph.coords = coords;
    enc.graph.density = density;
    enc.graph.edges = knn_graph(coords, cfg.k);

    const int n = static_cast<int>(coords.rows());
    const double total = static_cast<double>(merged.size());
    auto x0 = Tensor<S>::zeros(n, cfg.node_input_dim());
    for (int i = 0; i < n; ++i) {
        x0->at(i, 0) = static_cast<S>(coords(i, 0));
        x0->at(i, 1) = static_cast<S>(coords(i, 1));
        x0->at(i, 2) = static_cast<S>(density[static_cast<std::size_t>(i)] / total);
        if (cfg.use_range_channel) x0->at(i, 3) = static_cast<S>(coords.row(i).norm());
    }

    TensorPtr<S> h;
    if (use_graph) {
        h = x0;
        for (const auto& layer : params.layers) h = edgeconv_layer(h, enc.graph.edges, layer);
    } else {
        auto z = relu(add(matmul(x0, params.point_w1), params.point_b1));
        h = add(matmul(z, params.point_w2), params.point_b2);
    }
    enc.e_node = h;
    enc.c_lidar = colwise_max(h);
    return enc;
}

/// Temporal convolution stack over the velocity history, max-pooled to D_v.
template <class S>
TensorPtr<S> encode_velocity(const SspParams<S>& params, const Eigen::MatrixX2d& vel,
                             const SspConfig& cfg) {
    using namespace numcore;
    const int t = static_cast<int>(vel.rows());
    if (t < cfg.vel_kernel)
        throw std::invalid_argument("encode_velocity: history shorter than kernel");

    auto v = Tensor<S>::zeros(t, 2);
    for (int i = 0; i < t; ++i) {
        v->at(i, 0) = static_cast<S>(vel(i, 0));
        v->at(i, 1) = static_cast<S>(vel(i, 1));
    }

    // im2col convolution: window rows concatenated column-wise
    auto conv = [&](const TensorPtr<S>& x, const TensorPtr<S>& w, const TensorPtr<S>& b) {
        const int len = x->rows() - cfg.vel_kernel + 1;
        std::vector<TensorPtr<S>> taps;
        for (int o = 0; o < cfg.vel_kernel; ++o) {
            std::vector<int> idx(static_cast<std::size_t>(len));
            for (int i = 0; i < len; ++i) idx[static_cast<std::size_t>(i)] = i + o;
            taps.push_back(gather_rows(x, idx));
        }
        return add(matmul(concat_cols<S>(taps), w), b);
    };

    auto h1 = relu(conv(v, params.vconv1_w, params.vconv1_b));
    auto h2 = relu(conv(h1, params.vconv2_w, params.vconv2_b));
    return colwise_max(h2);
}

/// c_env from c_lidar (+) c_vel through the fusion MLP.  The goal never
/// enters here by design.
template <class S>
TensorPtr<S> fuse_context(const SspParams<S>& params, const TensorPtr<S>& c_lidar,
                          const TensorPtr<S>& c_vel) {
    using namespace numcore;
    auto cat = concat_cols<S>({c_lidar, c_vel});
    auto z = relu(add(matmul(cat, params.fuse_w1), params.fuse_b1));
    return add(matmul(z, params.fuse_w2), params.fuse_b2);
}

}  // namespace drift::ssp
