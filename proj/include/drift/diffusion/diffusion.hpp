// Copyright 2026 drift authors. Apache 2.0 License.
//
// DDPM machinery over fixed-length waypoint arrays: linear variance
// schedule, forward noising q(x_k | x_0), sinusoidal timestep embedding,
// and the posterior reverse step driven by a clean-trajectory prediction
// (x0-parameterization).  The noisy state lives in a normalized coordinate
// space; callers scale by the world extent before/after.

#pragma once

#include <cmath>
#include <vector>

#include "drift/common.hpp"

namespace drift::diffusion {

struct NoiseSchedule {
    int K = 0;
    std::vector<double> betas;       // index 0 == step k=1
    std::vector<double> alphas;      // 1 - beta
    std::vector<double> alpha_bars;  // cumulative product

    double beta(int k) const { return betas[static_cast<std::size_t>(k - 1)]; }
    double alpha(int k) const { return alphas[static_cast<std::size_t>(k - 1)]; }
    /// alpha_bar at step k; k = 0 is the identity limit (no noise).
    double alpha_bar(int k) const {
        return k == 0 ? 1.0 : alpha_bars[static_cast<std::size_t>(k - 1)];
    }
};

inline NoiseSchedule make_schedule(int K, double beta_start, double beta_end) {
    if (K < 1) throw std::invalid_argument("make_schedule: K must be >= 1");
    if (!(beta_start > 0 && beta_start <= beta_end && beta_end < 1))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.K = K;
    double prod = 1.0;
    for (int i = 0; i < K; ++i) {
        const double b =
            K == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (K - 1);
        s.betas.push_back(b);
        s.alphas.push_back(1.0 - b);
        prod *= 1.0 - b;
        s.alpha_bars.push_back(prod);
    }
    return s;
}

/// x_k = sqrt(alpha_bar_k) x0 + sqrt(1 - alpha_bar_k) eps ; k=0 is identity.
inline Trajectory forward_noise(const Trajectory& x0, int k, const Trajectory& eps,
                                const NoiseSchedule& s) {
    if (k < 0 || k > s.K) throw std::invalid_argument("forward_noise: k out of [0, K]");
    if (eps.rows() != x0.rows()) throw std::invalid_argument("forward_noise: shape mismatch");
    const double ab = s.alpha_bar(k);
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

/// Sinusoidal position encoding: pairs (sin, cos) over a geometric
/// frequency ladder, matching the usual transformer recipe.
inline Eigen::VectorXd timestep_embedding(int k, int d_t) {
    if (d_t <= 0 || d_t % 2 != 0)
        throw std::invalid_argument("timestep_embedding: D_t must be positive and even");
    Eigen::VectorXd e(d_t);
    const int half = d_t / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        e[2 * i] = std::sin(k * freq);
        e[2 * i + 1] = std::cos(k * freq);
    }
    return e;
}

/// One DDPM posterior step: mean
///   mu = (sqrt(alpha_bar_{k-1}) beta_k x0_hat + sqrt(alpha_k)(1 - alpha_bar_{k-1}) x_k)
///        / (1 - alpha_bar_k)
/// plus sigma_k * noise, with sigma_k^2 = beta_k (1-alpha_bar_{k-1})/(1-alpha_bar_k).
/// The final step (k=1) is the posterior mean exactly; `noise` is ignored.
inline Trajectory reverse_step(const Trajectory& x_k, const Trajectory& x0_hat, int k,
                               const NoiseSchedule& s, const Trajectory& noise) {
    if (k < 1 || k > s.K) throw std::invalid_argument("reverse_step: k out of [1, K]");
    if (x0_hat.rows() != x_k.rows() || noise.rows() != x_k.rows())
        throw std::invalid_argument("reverse_step: shape mismatch");
    if (!x_k.allFinite() || !x0_hat.allFinite())
        throw NonFiniteError("reverse_step: non-finite input state");

    const double ab_k = s.alpha_bar(k);
    const double ab_prev = s.alpha_bar(k - 1);
    const double beta_k = s.beta(k);
    const double alpha_k = s.alpha(k);

    const double c0 = std::sqrt(ab_prev) * beta_k / (1.0 - ab_k);
    const double ck = std::sqrt(alpha_k) * (1.0 - ab_prev) / (1.0 - ab_k);
    Trajectory mean = c0 * x0_hat + ck * x_k;
    if (k == 1) return mean;

    const double sigma = std::sqrt(beta_k * (1.0 - ab_prev) / (1.0 - ab_k));
    return mean + sigma * noise;
}

/// Standard-normal trajectory noise, deterministic in the rng state.
inline Trajectory gaussian_like(int rows, std::mt19937_64& rng) {
    Trajectory n(rows, 2);
    for (int i = 0; i < rows; ++i) {
        n(i, 0) = rnorm(rng);
        n(i, 1) = rnorm(rng);
    }
    return n;
}

/// Full reverse chain from pure noise, with the clean-trajectory prediction
/// supplied by `predict(x_k, k)`.  Pure function of (predict, M, seed).
template <class PredictFn>
Trajectory sample_chain(const PredictFn& predict, int M, const NoiseSchedule& s,
                        std::uint64_t seed) {
    auto rng = make_rng(mix_seed(seed, 0xD1FFull));
    Trajectory x = gaussian_like(M, rng);
    for (int k = s.K; k >= 1; --k) {
        const Trajectory x0_hat = predict(x, k);
        if (!x0_hat.allFinite()) throw NonFiniteError("sample_chain: non-finite prediction");
        const Trajectory noise = gaussian_like(M, rng);
        x = reverse_step(x, x0_hat, k, s, noise);
    }
    return x;
}

}  // namespace drift::diffusion
