// Copyright 2026 drift authors. Apache 2.0 License.
//
// Recurrent denoising generator: a graph-conditioned, time-aware GRU that
// walks the M noisy waypoints, retrieves local scene features with sparse
// cross-attention, and emits the predicted noise-free trajectory.
//
// Conditioning persists through every gate: each of z, r and the candidate
// receives the step input, the hidden state, the attended scene feature d_m
// and the fused conditioning vector c_cond through its own weight matrix.

#pragma once

#include <algorithm>
#include <cmath>

#include "drift/diffusion/diffusion.hpp"
#include "drift/numcore/ops.hpp"
#include "drift/ssp/ssp.hpp"

namespace drift::gtgru {

using numcore::Tensor;
using numcore::TensorPtr;
using ssp::NamedParams;

struct GtgruConfig {
    int d_h = 128;      // hidden state width
    int d_scene = 64;   // node-embedding width (must equal ssp embed_dim)
    int d_g = 32;       // target encoding width
    int d_t = 32;       // timestep embedding width
    int d_cond = 64;    // fused conditioning width
    int d_x = 64;       // step-input width (point embed + target proj)
    int attn_dim = 64;  // query/key/value width; equals d_scene so the
                        // pooled scene feature can stand in for d_m when
                        // attention is disabled
    int out_hidden = 64;
    int target_hidden = 32;
    int cond_hidden = 128;
    int k_env = 8;      // attention neighborhood size
};

template <class S>
struct GateParams {
    TensorPtr<S> w, u, v, c, b;  // input, hidden, attention, conditioning, bias

    static GateParams init(const GtgruConfig& cfg, std::uint64_t seed) {
        GateParams g;
        g.w = Tensor<S>::param(cfg.d_x, cfg.d_h, mix_seed(seed, 1));
        g.u = Tensor<S>::param(cfg.d_h, cfg.d_h, mix_seed(seed, 2));
        g.v = Tensor<S>::param(cfg.attn_dim, cfg.d_h, mix_seed(seed, 3));
        g.c = Tensor<S>::param(cfg.d_cond, cfg.d_h, mix_seed(seed, 4));
        g.b = Tensor<S>::param_zeros(1, cfg.d_h);
        return g;
    }
    void collect(const std::string& prefix, NamedParams<S>& out) const {
        out.emplace_back(prefix + ".w", w);
        out.emplace_back(prefix + ".u", u);
        out.emplace_back(prefix + ".v", v);
        out.emplace_back(prefix + ".c", c);
        out.emplace_back(prefix + ".b", b);
    }
};

template <class S>
struct GtgruParams {
    // target encoder (2 -> d_g)
    TensorPtr<S> target_w1, target_b1, target_w2, target_b2;
    // conditioning fusion ((d_scene + d_g + d_t) -> d_cond)
    TensorPtr<S> cond_w1, cond_b1, cond_w2, cond_b2;
    // step input: PointEmbed(w_prev) + TargetProj(c_target)
    TensorPtr<S> point_w, point_b, targetproj_w;
    // attention projections
    TensorPtr<S> attn_q, attn_k, attn_v;
    // gates
    GateParams<S> gate_z, gate_r, gate_h;
    // h_0 from c_cond; output head (d_h -> 2)
    TensorPtr<S> h0_w;
    TensorPtr<S> out_w1, out_b1, out_w2, out_b2;

    static GtgruParams init(const GtgruConfig& cfg, std::uint64_t seed) {
        GtgruParams p;
        p.target_w1 = Tensor<S>::param(2, cfg.target_hidden, mix_seed(seed, 10));
        p.target_b1 = Tensor<S>::param_zeros(1, cfg.target_hidden);
        p.target_w2 = Tensor<S>::param(cfg.target_hidden, cfg.d_g, mix_seed(seed, 11));
        p.target_b2 = Tensor<S>::param_zeros(1, cfg.d_g);

        const int cond_in = cfg.d_scene + cfg.d_g + cfg.d_t;
        p.cond_w1 = Tensor<S>::param(cond_in, cfg.cond_hidden, mix_seed(seed, 12));
        p.cond_b1 = Tensor<S>::param_zeros(1, cfg.cond_hidden);
        p.cond_w2 = Tensor<S>::param(cfg.cond_hidden, cfg.d_cond, mix_seed(seed, 13));
        p.cond_b2 = Tensor<S>::param_zeros(1, cfg.d_cond);

        p.point_w = Tensor<S>::param(2, cfg.d_x, mix_seed(seed, 14));
        p.point_b = Tensor<S>::param_zeros(1, cfg.d_x);
        p.targetproj_w = Tensor<S>::param(cfg.d_g, cfg.d_x, mix_seed(seed, 15));

        p.attn_q = Tensor<S>::param(cfg.d_h, cfg.attn_dim, mix_seed(seed, 16));
        p.attn_k = Tensor<S>::param(cfg.d_scene, cfg.attn_dim, mix_seed(seed, 17));
        p.attn_v = Tensor<S>::param(cfg.d_scene, cfg.attn_dim, mix_seed(seed, 18));

        p.gate_z = GateParams<S>::init(cfg, mix_seed(seed, 19));
        p.gate_r = GateParams<S>::init(cfg, mix_seed(seed, 20));
        p.gate_h = GateParams<S>::init(cfg, mix_seed(seed, 21));

        p.h0_w = Tensor<S>::param(cfg.d_cond, cfg.d_h, mix_seed(seed, 22));
        p.out_w1 = Tensor<S>::param(cfg.d_h, cfg.out_hidden, mix_seed(seed, 23));
        p.out_b1 = Tensor<S>::param_zeros(1, cfg.out_hidden);
        p.out_w2 = Tensor<S>::param(cfg.out_hidden, 2, mix_seed(seed, 24));
        p.out_b2 = Tensor<S>::param_zeros(1, 2);
        return p;
    }

    void collect(NamedParams<S>& out) const {
        out.emplace_back("gtgru.target.w1", target_w1);
        out.emplace_back("gtgru.target.b1", target_b1);
        out.emplace_back("gtgru.target.w2", target_w2);
        out.emplace_back("gtgru.target.b2", target_b2);
        out.emplace_back("gtgru.cond.w1", cond_w1);
        out.emplace_back("gtgru.cond.b1", cond_b1);
        out.emplace_back("gtgru.cond.w2", cond_w2);
        out.emplace_back("gtgru.cond.b2", cond_b2);
        out.emplace_back("gtgru.point.w", point_w);
        out.emplace_back("gtgru.point.b", point_b);
        out.emplace_back("gtgru.targetproj.w", targetproj_w);
        out.emplace_back("gtgru.attn.q", attn_q);
        out.emplace_back("gtgru.attn.k", attn_k);
        out.emplace_back("gtgru.attn.v", attn_v);
        gate_z.collect("gtgru.gate_z", out);
        gate_r.collect("gtgru.gate_r", out);
        gate_h.collect("gtgru.gate_h", out);
        out.emplace_back("gtgru.h0.w", h0_w);
        out.emplace_back("gtgru.out.w1", out_w1);
        out.emplace_back("gtgru.out.b1", out_b1);
        out.emplace_back("gtgru.out.w2", out_w2);
        out.emplace_back("gtgru.out.b2", out_b2);
    }
};

// ---- conditioning ----

/// Small MLP embedding of the (normalized) goal vector.
template <class S>
TensorPtr<S> encode_target(const GtgruParams<S>& p, const TensorPtr<S>& goal) {
    using namespace numcore;
    auto z = relu(add(matmul(goal, p.target_w1), p.target_b1));
    return add(matmul(z, p.target_w2), p.target_b2);
}

/// c_cond = MLP(c_env (+) c_target (+) t_embed); recomputed per diffusion
/// step because t_embed varies with k.
template <class S>
TensorPtr<S> build_conditioning(const GtgruParams<S>& p, const TensorPtr<S>& c_env,
                                const TensorPtr<S>& c_target, const TensorPtr<S>& t_embed) {
    using namespace numcore;
    auto cat = concat_cols<S>({c_env, c_target, t_embed});
    auto z = relu(add(matmul(cat, p.cond_w1), p.cond_b1));
    return add(matmul(z, p.cond_w2), p.cond_b2);
}

// ---- sparse cross-attention ----

/// Indices of the k_env nodes whose centroids are nearest the anchor;
/// ties break toward the lower index, all nodes used when fewer exist.
inline std::vector<int> select_attention_nodes(const Eigen::MatrixX2d& coords,
                                               const Vec2& anchor, int k_env) {
    const int n = static_cast<int>(coords.rows());
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        cand.emplace_back((coords.row(i).transpose() - anchor).squaredNorm(), i);
    const int kk = std::min(k_env, n);
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    std::vector<int> idx(static_cast<std::size_t>(kk));
    for (int i = 0; i < kk; ++i) idx[static_cast<std::size_t>(i)] = cand[static_cast<std::size_t>(i)].second;
    return idx;
}

/// Scaled-dot-product attention of the hidden-state query over the k_env
/// scene nodes nearest the anchor coordinate.
template <class S>
TensorPtr<S> sparse_cross_attention(const GtgruParams<S>& p, const TensorPtr<S>& h_prev,
                                    const Vec2& anchor, const TensorPtr<S>& e_node,
                                    const Eigen::MatrixX2d& node_coords, int k_env) {
    using namespace numcore;
    if (e_node->rows() < 1)
        throw std::invalid_argument("sparse_cross_attention: empty node set");
    const std::vector<int> idx = select_attention_nodes(node_coords, anchor, k_env);

    auto nodes = gather_rows(e_node, idx);
    auto q = matmul(h_prev, p.attn_q);                       // 1 x A
    auto kt = transpose(matmul(nodes, p.attn_k));            // A x k
    auto v = matmul(nodes, p.attn_v);                        // k x A
    const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(q->cols())));
    auto weights = softmax_rows(scale(matmul(q, kt), inv_sqrt));  // 1 x k
    return matmul(weights, v);                               // 1 x A
}

// ---- the recurrent cell ----

template <class S>
struct CellOutput {
    TensorPtr<S> h;       // 1 x d_h
    TensorPtr<S> w0_hat;  // 1 x 2
};

template <class S>
TensorPtr<S> gate_preact(const GateParams<S>& g, const TensorPtr<S>& x_in,
                         const TensorPtr<S>& h, const TensorPtr<S>& d_m,
                         const TensorPtr<S>& c_cond) {
    using namespace numcore;
    auto s = add(matmul(x_in, g.w), matmul(h, g.u));
    s = add(s, matmul(d_m, g.v));
    s = add(s, matmul(c_cond, g.c));
    return add(s, g.b);
}

/// One GRU step with attention and conditioning injected into every gate:
///   x_in = PointEmbed(w_prev) + TargetProj(c_target)
///   z = sigma(W_z x_in + U_z h + V_z d_m + C_z c_cond + b_z)   (r likewise)
///   cand = tanh(W_h x_in + U_h (r . h) + V_h d_m + C_h c_cond + b_h)
///   h' = (1 - z) . h + z . cand ;  w0_hat = MLP_out(h')
template <class S>
CellOutput<S> gtgru_cell(const GtgruParams<S>& p, const TensorPtr<S>& h,
                         const TensorPtr<S>& w_prev, const TensorPtr<S>& d_m,
                         const TensorPtr<S>& c_cond, const TensorPtr<S>& c_target) {
    using namespace numcore;
    auto x_in = add(add(matmul(w_prev, p.point_w), p.point_b),
                    matmul(c_target, p.targetproj_w));

    auto z = sigmoid(gate_preact(p.gate_z, x_in, h, d_m, c_cond));
    auto r = sigmoid(gate_preact(p.gate_r, x_in, h, d_m, c_cond));

    auto cand_pre = add(matmul(x_in, p.gate_h.w), matmul(mul(r, h), p.gate_h.u));
    cand_pre = add(cand_pre, matmul(d_m, p.gate_h.v));
    cand_pre = add(cand_pre, matmul(c_cond, p.gate_h.c));
    auto cand = tanh_op(add(cand_pre, p.gate_h.b));

    CellOutput<S> out;
    auto one_minus_z = sub(Tensor<S>::full(1, z->cols(), S(1)), z);
    out.h = add(mul(one_minus_z, h), mul(z, cand));
    auto y = relu(add(matmul(out.h, p.out_w1), p.out_b1));
    out.w0_hat = add(matmul(y, p.out_w2), p.out_b2);
    return out;
}

// ---- full denoising pass ----

struct DenoiseInputs {
    Eigen::MatrixX2d node_coords;  // meters; attention anchors compare here
    double traj_scale = 15.0;      // normalized-unit -> meter factor
    bool use_attention = true;     // false reproduces the no-attention ablation
};

/// Map the noisy trajectory x_k (normalized units) to the predicted clean
/// trajectory, unrolling the cell across all M waypoints.  The hidden state
/// starts fresh (h_0 = linear(c_cond)) on every diffusion step.
template <class S>
TensorPtr<S> denoise_trajectory(const GtgruParams<S>& p, const Trajectory& x_k, int k,
                                const TensorPtr<S>& e_node, const TensorPtr<S>& c_lidar,
                                const TensorPtr<S>& c_env, const TensorPtr<S>& goal_norm,
                                const GtgruConfig& cfg, const DenoiseInputs& in) {
    using namespace numcore;
    const int M = static_cast<int>(x_k.rows());

    auto c_target = encode_target(p, goal_norm);
    const Eigen::VectorXd emb = diffusion::timestep_embedding(k, cfg.d_t);
    auto t_embed = Tensor<S>::zeros(1, cfg.d_t);
    for (int i = 0; i < cfg.d_t; ++i) t_embed->at(0, i) = static_cast<S>(emb[i]);
    auto c_cond = build_conditioning(p, c_env, c_target, t_embed);

    auto h = matmul(c_cond, p.h0_w);
    std::vector<TensorPtr<S>> rows;
    rows.reserve(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        auto w_prev = Tensor<S>::make(1, 2, {static_cast<S>(x_k(m, 0)), static_cast<S>(x_k(m, 1))});
        TensorPtr<S> d_m;
        if (in.use_attention) {
            const Vec2 anchor = x_k.row(m).transpose() * in.traj_scale;
            d_m = sparse_cross_attention(p, h, anchor, e_node, in.node_coords, cfg.k_env);
        } else {
            d_m = c_lidar;  // pooled scene feature, constant across steps
        }
        auto step = gtgru_cell(p, h, w_prev, d_m, c_cond, c_target);
        h = step.h;
        rows.push_back(step.w0_hat);
    }
    return concat_rows<S>(rows);
}

}  // namespace drift::gtgru
