// Copyright 2026 drift authors. Apache 2.0 License.
//
// Compound training objective: smooth imitation surrogates (soft-Hausdorff,
// soft-DTW, endpoint), velocity-cosine smoothness, hinge collision penalty,
// and the two-stage curriculum weighting.  Exact Hausdorff/DTW live here
// too; the evaluation path and the tests use those.

#pragma once

#include <cmath>

#include "drift/numcore/ops.hpp"

namespace drift::losses {

using numcore::Tensor;
using numcore::TensorPtr;

// ---- exact metrics (evaluation path) ----

/// Symmetric Hausdorff distance between waypoint sets.
inline double exact_hausdorff(const Trajectory& a, const Trajectory& b) {
    if (a.rows() == 0 || b.rows() == 0)
        throw std::invalid_argument("exact_hausdorff: empty trajectory");
    const auto directed = [](const Trajectory& u, const Trajectory& v) {
        double worst = 0;
        for (int i = 0; i < u.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < v.rows(); ++j)
                best = std::min(best, (u.row(i) - v.row(j)).norm());
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

/// Classic DTW with Euclidean ground metric and {match, insert, delete}.
inline double exact_dtw(const Trajectory& a, const Trajectory& b) {
    const int m = static_cast<int>(a.rows()), n = static_cast<int>(b.rows());
    if (m == 0 || n == 0) throw std::invalid_argument("exact_dtw: empty trajectory");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(m, n, kInf);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = (a.row(i) - b.row(j)).norm();
            if (i == 0 && j == 0)
                r(i, j) = d;
            else {
                double best = kInf;
                if (i > 0) best = std::min(best, r(i - 1, j));
                if (j > 0) best = std::min(best, r(i, j - 1));
                if (i > 0 && j > 0) best = std::min(best, r(i - 1, j - 1));
                r(i, j) = d + best;
            }
        }
    return r(m - 1, n - 1);
}

// ---- differentiable surrogates (training path) ----

/// Smooth symmetric Hausdorff: softmin over the opposite set, softmax over
/// the directed values, softmax over the two directions, all at inverse
/// temperature beta.  The softmax levels use the mean-normalized form
/// (log-sum-exp minus log count) so identical inputs score ~0 instead of
/// inheriting a log(M)/beta bias.
template <class S>
TensorPtr<S> soft_hausdorff(const TensorPtr<S>& a, const TensorPtr<S>& b, S beta) {
    using namespace numcore;
    const auto smax = [beta](const TensorPtr<S>& row) {
        const S shift = std::log(static_cast<S>(row->cols())) / beta;
        return add_const(logsumexp_rows(row, beta), -shift);
    };
    auto d = pairwise_dist(a, b);                          // M x N
    auto min_ab = logsumexp_rows(d, -beta);                // M x 1 (softmin per row)
    auto dir_ab = smax(transpose(min_ab));                 // 1 x 1
    auto min_ba = logsumexp_rows(transpose(d), -beta);     // N x 1
    auto dir_ba = smax(transpose(min_ba));                 // 1 x 1
    return smax(concat_cols<S>({dir_ab, dir_ba}));         // 1 x 1
}

namespace detail {

/// Soft-DTW over a precomputed distance matrix: the smoothed DP
///   R(i,j) = d_ij + softmin_gamma(R(i-1,j), R(i,j-1), R(i-1,j-1))
/// with the standard reverse-mode E-matrix recursion as the gradient.
template <class S>
TensorPtr<S> soft_dtw_from_dist(const TensorPtr<S>& d, S gamma) {
    using namespace numcore;
    if (gamma <= S(0)) throw std::invalid_argument("soft_dtw: gamma must be positive");
    const int m = d->rows(), n = d->cols();
    constexpr S kInf = std::numeric_limits<S>::infinity();

    auto R = std::make_shared<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>(m + 1, n + 1);
    R->setConstant(kInf);
    (*R)(0, 0) = S(0);
    const auto softmin3 = [gamma](S x, S y, S z) {
        const S mn = std::min(x, std::min(y, z));
        if (std::isinf(mn)) return mn;
        S sum = S(0);
        if (!std::isinf(x)) sum += std::exp(-(x - mn) / gamma);
        if (!std::isinf(y)) sum += std::exp(-(y - mn) / gamma);
        if (!std::isinf(z)) sum += std::exp(-(z - mn) / gamma);
        return mn - gamma * std::log(sum);
    };
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= n; ++j)
            (*R)(i, j) = d->at(i - 1, j - 1) +
                         softmin3((*R)(i - 1, j), (*R)(i, j - 1), (*R)(i - 1, j - 1));

    auto out = Tensor<S>::scalar((*R)(m, n));
    check_finite("soft_dtw", out);
    Tensor<S>* o = out.get();
    numcore::detail::attach(out, {d}, [o, d, R, gamma, m, n] {
        if (!d->requires_grad) return;
        // reverse recursion (E-matrix): E(i,j) = sum over successors of
        // E * exp((R_succ - R(i,j) - d_succ) / gamma)
        Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> E =
            Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(m + 2, n + 2);
        E(m, n) = S(1);
        const auto w = [&](int si, int sj, int i, int j) -> S {
            if (si > m || sj > n) return S(0);
            const S rs = (*R)(si, sj);
            if (std::isinf(rs) || std::isinf((*R)(i, j))) return S(0);
            return std::exp((rs - (*R)(i, j) - d->at(si - 1, sj - 1)) / gamma);
        };
        for (int i = m; i >= 1; --i)
            for (int j = n; j >= 1; --j) {
                if (i == m && j == n) continue;
                E(i, j) = E(i + 1, j) * w(i + 1, j, i, j) + E(i, j + 1) * w(i, j + 1, i, j) +
                          E(i + 1, j + 1) * w(i + 1, j + 1, i, j);
            }
        const S g = o->grad[0];
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) d->grad_mat()(i, j) += g * E(i + 1, j + 1);
    });
    return out;
}

}  // namespace detail

/// Smooth DTW between two waypoint tensors (temperature gamma).
template <class S>
TensorPtr<S> soft_dtw(const TensorPtr<S>& a, const TensorPtr<S>& b, S gamma) {
    return detail::soft_dtw_from_dist(numcore::pairwise_dist(a, b), gamma);
}

/// Squared distance between the final waypoint and the goal.
template <class S>
TensorPtr<S> endpoint_loss(const TensorPtr<S>& traj, const Vec2& goal) {
    using namespace numcore;
    auto last = gather_rows(traj, {traj->rows() - 1});
    auto g = Tensor<S>::make(1, 2, {static_cast<S>(goal.x()), static_cast<S>(goal.y())});
    auto diff = sub(last, g);
    return sum_all(mul(diff, diff));
}

/// Mean of (1 - cos angle) between consecutive velocity vectors;
/// xi keeps the quotient finite for zero-length segments.
template <class S>
TensorPtr<S> smoothness_loss(const TensorPtr<S>& traj, S xi = S(1e-8)) {
    using namespace numcore;
    const int m = traj->rows();
    if (m < 3) throw std::invalid_argument("smoothness_loss: need at least 3 waypoints");
    std::vector<int> head(static_cast<std::size_t>(m - 1)), tail(static_cast<std::size_t>(m - 1));
    for (int i = 0; i < m - 1; ++i) {
        head[static_cast<std::size_t>(i)] = i + 1;
        tail[static_cast<std::size_t>(i)] = i;
    }
    auto v = sub(gather_rows(traj, head), gather_rows(traj, tail));  // (M-1) x 2
    std::vector<int> cur(static_cast<std::size_t>(m - 2)), nxt(static_cast<std::size_t>(m - 2));
    for (int i = 0; i < m - 2; ++i) {
        cur[static_cast<std::size_t>(i)] = i;
        nxt[static_cast<std::size_t>(i)] = i + 1;
    }
    auto a = gather_rows(v, cur);
    auto b = gather_rows(v, nxt);
    auto dot = rowwise_sum(mul(a, b));                               // (M-2) x 1
    auto na = sqrt_op(rowwise_sum(mul(a, a)));
    auto nb = sqrt_op(rowwise_sum(mul(b, b)));
    auto cosine = div(dot, add_const(mul(na, nb), xi));
    return mean_all(sub(Tensor<S>::full(m - 2, 1, S(1)), cosine));
}

/// Hinge penalty: sum over (waypoint, obstacle point) of
/// max(0, r_safe - distance)^2.
template <class S>
TensorPtr<S> collision_loss(const TensorPtr<S>& traj, const PointSet& obstacles, S r_safe) {
    using namespace numcore;
    if (r_safe <= S(0)) throw std::invalid_argument("collision_loss: r_safe must be positive");
    if (obstacles.empty()) return Tensor<S>::scalar(S(0));
    auto obs = Tensor<S>::zeros(static_cast<int>(obstacles.size()), 2);
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        obs->at(static_cast<int>(i), 0) = static_cast<S>(obstacles[i].x());
        obs->at(static_cast<int>(i), 1) = static_cast<S>(obstacles[i].y());
    }
    auto d = pairwise_dist(traj, obs);
    auto hinge = relu(sub(Tensor<S>::full(d->rows(), d->cols(), r_safe), d));
    return sum_all(mul(hinge, hinge));
}

// ---- curriculum ----

struct LossConfig {
    double beta_h = 50.0;     // soft-Hausdorff inverse temperature
    double gamma = 0.1;       // soft-DTW temperature
    double xi = 1e-8;         // smoothness stabilizer
    double r_safe = 0.3;      // collision radius, meters
    double lambda_simple = 1.0;
    double lambda_hausdorff = 1.0;
    double lambda_dtw = 1.0;
    double lambda_endpoint = 1.0;
    double lambda_smooth = 0.1;
    double lambda_coll = 0.5;
    double stage2_coll_factor = 3.0;    // refinement phase: collision x3
    double stage2_smooth_factor = 2.0;  // refinement phase: smoothness raised
    double stage1_fraction = 0.5;       // imitation phase length
};

struct LossWeights {
    double simple = 0, hausdorff = 0, dtw = 0, endpoint = 0, smooth = 0, coll = 0;
};

/// Piecewise-constant schedule with one switch at E_stage1.
inline LossWeights weights_at(int epoch, int total_epochs, const LossConfig& c) {
    if (epoch < 0) throw std::invalid_argument("weights_at: epoch must be >= 0");
    LossWeights w;
    w.simple = c.lambda_simple;
    w.hausdorff = c.lambda_hausdorff;
    w.dtw = c.lambda_dtw;
    w.endpoint = c.lambda_endpoint;
    w.smooth = c.lambda_smooth;
    w.coll = c.lambda_coll;
    const int e_stage1 = static_cast<int>(total_epochs * c.stage1_fraction);
    if (epoch >= e_stage1) {
        w.coll *= c.stage2_coll_factor;
        w.smooth *= c.stage2_smooth_factor;
    }
    return w;
}

struct LossBreakdown {
    double simple = 0, hausdorff = 0, dtw = 0, endpoint = 0, smooth = 0, collision = 0,
           total = 0;
};

template <class S>
struct LossResult {
    TensorPtr<S> total;  // scalar, differentiable
    LossBreakdown parts;
};

/// Full objective.  The denoising ("simple") term compares normalized
/// trajectories; every geometric component runs in meters on the
/// denormalized prediction.
template <class S>
LossResult<S> total_loss(const TensorPtr<S>& x0_hat_norm, const Trajectory& x0_norm,
                         const Trajectory& expert_m, const Vec2& goal_m,
                         const PointSet& obstacles, double traj_scale, int epoch,
                         int total_epochs, const LossConfig& cfg) {
    using namespace numcore;
    const LossWeights w = weights_at(epoch, total_epochs, cfg);

    auto x0_t = Tensor<S>::zeros(static_cast<int>(x0_norm.rows()), 2);
    for (int i = 0; i < x0_norm.rows(); ++i) {
        x0_t->at(i, 0) = static_cast<S>(x0_norm(i, 0));
        x0_t->at(i, 1) = static_cast<S>(x0_norm(i, 1));
    }
    auto expert_t = Tensor<S>::zeros(static_cast<int>(expert_m.rows()), 2);
    for (int i = 0; i < expert_m.rows(); ++i) {
        expert_t->at(i, 0) = static_cast<S>(expert_m(i, 0));
        expert_t->at(i, 1) = static_cast<S>(expert_m(i, 1));
    }

    auto pred_m = scale(x0_hat_norm, static_cast<S>(traj_scale));
    auto simple = mse(x0_hat_norm, x0_t);
    auto haus = soft_hausdorff(pred_m, expert_t, static_cast<S>(cfg.beta_h));
    auto dtw_t = soft_dtw(pred_m, expert_t, static_cast<S>(cfg.gamma));
    auto endp = endpoint_loss(pred_m, goal_m);
    auto smooth = smoothness_loss(pred_m, static_cast<S>(cfg.xi));
    auto coll = collision_loss(pred_m, obstacles, static_cast<S>(cfg.r_safe));

    auto total = add(scale(simple, static_cast<S>(w.simple)),
                     scale(haus, static_cast<S>(w.hausdorff)));
    total = add(total, scale(dtw_t, static_cast<S>(w.dtw)));
    total = add(total, scale(endp, static_cast<S>(w.endpoint)));
    total = add(total, scale(smooth, static_cast<S>(w.smooth)));
    total = add(total, scale(coll, static_cast<S>(w.coll)));

    LossResult<S> res;
    res.total = total;
    res.parts.simple = static_cast<double>(simple->value());
    res.parts.hausdorff = static_cast<double>(haus->value());
    res.parts.dtw = static_cast<double>(dtw_t->value());
    res.parts.endpoint = static_cast<double>(endp->value());
    res.parts.smooth = static_cast<double>(smooth->value());
    res.parts.collision = static_cast<double>(coll->value());
    res.parts.total = static_cast<double>(total->value());
    return res;
}

}  // namespace drift::losses
