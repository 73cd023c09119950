// Copyright 2026 drift authors. Apache 2.0 License.

#include <gtest/gtest.h>

#include <random>

#include "drift/losses/losses.hpp"
#include "drift/numcore/gradcheck.hpp"

using namespace drift;
using namespace drift::losses;
using numcore::Tensor;
using numcore::TensorPtr;
using TD = Tensor<double>;
using PD = TensorPtr<double>;

namespace {

Trajectory random_traj(int m, std::mt19937_64& rng, double span = 3.0) {
    Trajectory t(m, 2);
    for (int i = 0; i < m; ++i) t.row(i) = Vec2{runif(rng, -span, span), runif(rng, -span, span)};
    return t;
}

PD to_tensor(const Trajectory& t, bool needs_grad = false) {
    auto out = TD::zeros(static_cast<int>(t.rows()), 2);
    for (int i = 0; i < t.rows(); ++i) {
        out->at(i, 0) = t(i, 0);
        out->at(i, 1) = t(i, 1);
    }
    out->requires_grad = needs_grad;
    return out;
}

// Brute-force re-derivation of the symmetric Hausdorff distance.
double hausdorff_oracle(const Trajectory& a, const Trajectory& b) {
    double h = 0;
    for (int pass = 0; pass < 2; ++pass) {
        const Trajectory& u = pass == 0 ? a : b;
        const Trajectory& v = pass == 0 ? b : a;
        for (int i = 0; i < u.rows(); ++i) {
            double best = 1e300;
            for (int j = 0; j < v.rows(); ++j)
                best = std::min(best, (u.row(i) - v.row(j)).norm());
            h = std::max(h, best);
        }
    }
    return h;
}

// Exhaustive enumeration of monotone alignments (steps right/down/diag),
// valid for tiny sequences only.
double dtw_enumeration_oracle(const Trajectory& a, const Trajectory& b) {
    const int m = static_cast<int>(a.rows()), n = static_cast<int>(b.rows());
    double best = 1e300;
    struct Frame {
        int i, j;
        double cost;
    };
    std::vector<Frame> stack{{0, 0, (a.row(0) - b.row(0)).norm()}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.i == m - 1 && f.j == n - 1) {
            best = std::min(best, f.cost);
            continue;
        }
        const auto push = [&](int ni, int nj) {
            if (ni < m && nj < n)
                stack.push_back({ni, nj, f.cost + (a.row(ni) - b.row(nj)).norm()});
        };
        push(f.i + 1, f.j);
        push(f.i, f.j + 1);
        push(f.i + 1, f.j + 1);
    }
    return best;
}

}  // namespace

// ---- exact hausdorff ----

TEST(Hausdorff, IdenticalIsZeroAndSinglePairIsDistance) {
    std::mt19937_64 rng(1);
    const Trajectory t = random_traj(16, rng);
    EXPECT_DOUBLE_EQ(exact_hausdorff(t, t), 0.0);

    Trajectory a(1, 2), b(1, 2);
    a << 0, 0;
    b << 3, 4;
    EXPECT_DOUBLE_EQ(exact_hausdorff(a, b), 5.0);
}

TEST(Hausdorff, MatchesBruteForceOracle) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const Trajectory a = random_traj(16, rng);
        const Trajectory b = random_traj(16, rng);
        EXPECT_DOUBLE_EQ(exact_hausdorff(a, b), hausdorff_oracle(a, b));
        EXPECT_GE(exact_hausdorff(a, b), 0.0);
    }
}

// ---- exact dtw ----

TEST(Dtw, IdenticalIsZero) {
    std::mt19937_64 rng(3);
    const Trajectory t = random_traj(10, rng);
    EXPECT_NEAR(exact_dtw(t, t), 0.0, 1e-12);
}

TEST(Dtw, PointAgainstRepeatsAccumulates) {
    Trajectory a(1, 2);
    a << 1, 1;
    Trajectory b(5, 2);
    for (int i = 0; i < 5; ++i) b.row(i) = Vec2{4, 5};  // |p-q| = 5
    EXPECT_DOUBLE_EQ(exact_dtw(a, b), 25.0);
}

TEST(Dtw, MatchesExhaustiveEnumerationOracle) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 25; ++trial) {
        const int m = 2 + static_cast<int>(rint(rng, 0, 4));
        const int n = 2 + static_cast<int>(rint(rng, 0, 4));
        const Trajectory a = random_traj(m, rng);
        const Trajectory b = random_traj(n, rng);
        EXPECT_NEAR(exact_dtw(a, b), dtw_enumeration_oracle(a, b), 1e-10);
    }
}

// ---- smooth surrogates converge to the exact metrics ----

TEST(SoftMetrics, HausdorffErrorShrinksWithTemperature) {
    std::mt19937_64 rng(5);
    const Trajectory a = random_traj(12, rng);
    const Trajectory b = random_traj(12, rng);
    const double exact = exact_hausdorff(a, b);
    double prev = 1e300;
    for (double beta : {10.0, 50.0, 200.0}) {
        const double soft = soft_hausdorff(to_tensor(a), to_tensor(b), beta)->value();
        const double err = std::abs(soft - exact);
        EXPECT_LT(err, prev) << "beta=" << beta;
        prev = err;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(SoftMetrics, DtwErrorShrinksWithTemperature) {
    std::mt19937_64 rng(6);
    const Trajectory a = random_traj(8, rng);
    const Trajectory b = random_traj(8, rng);
    const double exact = exact_dtw(a, b);
    double prev = 1e300;
    for (double gamma : {0.5, 0.1, 0.02}) {
        const double soft = soft_dtw(to_tensor(a), to_tensor(b), gamma)->value();
        const double err = std::abs(soft - exact);
        EXPECT_LT(err, prev) << "gamma=" << gamma;
        prev = err;
    }
    EXPECT_LT(prev, 0.05);
}

// ---- endpoint ----

TEST(Endpoint, ValueAndClosedFormGradient) {
    std::mt19937_64 rng(7);
    Trajectory t = random_traj(16, rng);
    const Vec2 goal = t.row(15).transpose();
    EXPECT_NEAR(endpoint_loss(to_tensor(t), goal)->value(), 0.0, 1e-12);

    Trajectory off = t;
    off.row(15) = goal.transpose() + Eigen::RowVector2d{0.3, 0.4};
    EXPECT_NEAR(endpoint_loss(to_tensor(off), goal)->value(), 0.25, 1e-12);

    auto traj = to_tensor(off, true);
    numcore::backward(endpoint_loss(traj, goal));
    for (int i = 0; i < 15; ++i) {
        EXPECT_DOUBLE_EQ(traj->grad_mat()(i, 0), 0.0);
        EXPECT_DOUBLE_EQ(traj->grad_mat()(i, 1), 0.0);
    }
    EXPECT_NEAR(traj->grad_mat()(15, 0), 2 * 0.3, 1e-12);
    EXPECT_NEAR(traj->grad_mat()(15, 1), 2 * 0.4, 1e-12);
}

// ---- smoothness ----

TEST(Smoothness, CanonicalAngles) {
    Trajectory line(5, 2);
    for (int i = 0; i < 5; ++i) line.row(i) = Vec2{2.0 * i, -i * 1.0};
    // the small angle regularizer leaves an O(1e-8) floor
    EXPECT_NEAR(smoothness_loss(to_tensor(line))->value(), 0.0, 1e-7);

    // right angle at every interior step
    Trajectory zig(4, 2);
    zig << 0, 0, 1, 0, 1, 1, 2, 1;
    EXPECT_NEAR(smoothness_loss(to_tensor(zig))->value(), 1.0, 1e-6);

    Trajectory back(3, 2);
    back << 0, 0, 1, 0, 0, 0;  // full reversal
    EXPECT_NEAR(smoothness_loss(to_tensor(back))->value(), 2.0, 1e-6);
}

// ---- collision ----

TEST(Collision, HingeCases) {
    std::mt19937_64 rng(8);
    const Trajectory t = random_traj(8, rng, 1.0);
    PointSet far{{50, 50}, {-40, 20}};
    EXPECT_DOUBLE_EQ(collision_loss(to_tensor(t), far, 0.3)->value(), 0.0);

    PointSet on{{t(3, 0), t(3, 1)}, {90, 90}};
    EXPECT_NEAR(collision_loss(to_tensor(t), on, 0.3)->value(), 0.09, 1e-9);

    EXPECT_DOUBLE_EQ(collision_loss(to_tensor(t), {}, 0.3)->value(), 0.0);
}

TEST(Collision, MatchesDoubleLoopOracle) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Trajectory t = random_traj(16, rng, 2.0);
        PointSet obs;
        for (int i = 0; i < 40; ++i) obs.push_back({runif(rng, -2, 2), runif(rng, -2, 2)});
        double expect = 0;
        for (int i = 0; i < t.rows(); ++i)
            for (const auto& o : obs) {
                const double gap = 0.3 - (t.row(i).transpose() - o).norm();
                if (gap > 0) expect += gap * gap;
            }
        EXPECT_NEAR(collision_loss(to_tensor(t), obs, 0.3)->value(), expect, 1e-9);
    }
}

// ---- gradients of every component ----

TEST(LossGradients, AllComponentsPassFiniteDifferenceChecks) {
    std::mt19937_64 rng(10);
    const Trajectory a_m = random_traj(6, rng);
    const Trajectory b_m = random_traj(6, rng);
    PointSet obs;
    for (int i = 0; i < 10; ++i) obs.push_back({runif(rng, -3, 3), runif(rng, -3, 3)});

    auto a = to_tensor(a_m, true);
    auto b = to_tensor(b_m, true);

    EXPECT_LT(numcore::gradient_check<double>([&] { return soft_hausdorff(a, b, 50.0); },
                                              {a, b}),
              1e-4);
    EXPECT_LT(numcore::gradient_check<double>([&] { return soft_dtw(a, b, 0.1); }, {a, b}),
              1e-4);
    EXPECT_LT(numcore::gradient_check<double>([&] { return endpoint_loss(a, Vec2{1, 2}); },
                                              {a}),
              1e-4);
    EXPECT_LT(numcore::gradient_check<double>([&] { return smoothness_loss(a); }, {a}), 1e-4);
    EXPECT_LT(numcore::gradient_check<double>([&] { return collision_loss(a, obs, 0.5); },
                                              {a}),
              1e-4);
}

// ---- curriculum ----

TEST(Curriculum, SingleSwitchWithExactTripling) {
    LossConfig cfg;
    const int total = 200;
    const int e1 = 100;
    const LossWeights before = weights_at(e1 - 1, total, cfg);
    const LossWeights after = weights_at(e1, total, cfg);
    EXPECT_DOUBLE_EQ(after.coll / before.coll, 3.0);
    EXPECT_DOUBLE_EQ(after.smooth / before.smooth, 2.0);
    EXPECT_DOUBLE_EQ(after.hausdorff, before.hausdorff);
    EXPECT_DOUBLE_EQ(after.dtw, before.dtw);
    EXPECT_DOUBLE_EQ(after.endpoint, before.endpoint);

    // piecewise constant: no other discontinuity anywhere
    for (int e = 1; e < total; ++e) {
        if (e == e1) continue;
        const LossWeights w0 = weights_at(e - 1, total, cfg);
        const LossWeights w1 = weights_at(e, total, cfg);
        EXPECT_DOUBLE_EQ(w0.coll, w1.coll) << "epoch " << e;
        EXPECT_DOUBLE_EQ(w0.smooth, w1.smooth) << "epoch " << e;
    }
    EXPECT_THROW(weights_at(-1, total, cfg), std::invalid_argument);
}

// ---- total loss ----

TEST(TotalLoss, PerfectPredictionNearZero) {
    LossConfig cfg;
    Trajectory expert(16, 2);
    for (int i = 0; i < 16; ++i) expert.row(i) = Vec2{1.0 * i, 0.0};  // straight
    const double scale = 15.0;
    const Trajectory x0_norm = expert / scale;
    auto x0_hat = to_tensor(x0_norm, true);

    const auto res = total_loss(x0_hat, x0_norm, expert, expert.row(15).transpose(), {}, scale,
                                0, 200, cfg);
    EXPECT_DOUBLE_EQ(res.parts.simple, 0.0);
    EXPECT_NEAR(res.parts.endpoint, 0.0, 1e-12);
    EXPECT_NEAR(res.parts.smooth, 0.0, 1e-7);
    EXPECT_DOUBLE_EQ(res.parts.collision, 0.0);
    // smooth relaxations carry a small temperature bias only
    EXPECT_NEAR(res.parts.hausdorff, 0.0, 2e-3);
    EXPECT_NEAR(res.parts.dtw, 0.0, 2e-3);
    EXPECT_NEAR(res.parts.total, 0.0, 5e-3);
}

TEST(TotalLoss, BreakdownRecombinationOracle) {
    std::mt19937_64 rng(11);
    LossConfig cfg;
    const double scale = 15.0;
    for (int epoch : {10, 150}) {
        const Trajectory expert = random_traj(16, rng, 6.0);
        const Trajectory x0_norm = expert / scale;
        const Trajectory pred = random_traj(16, rng, 6.0) / scale;
        PointSet obs;
        for (int i = 0; i < 30; ++i) obs.push_back({runif(rng, -6, 6), runif(rng, -6, 6)});

        auto x0_hat = to_tensor(pred, true);
        const auto res = total_loss(x0_hat, x0_norm, expert, expert.row(15).transpose(), obs,
                                    scale, epoch, 200, cfg);
        const LossWeights w = weights_at(epoch, 200, cfg);
        const double recombined = w.simple * res.parts.simple +
                                  w.hausdorff * res.parts.hausdorff + w.dtw * res.parts.dtw +
                                  w.endpoint * res.parts.endpoint + w.smooth * res.parts.smooth +
                                  w.coll * res.parts.collision;
        EXPECT_NEAR(res.parts.total, recombined, 1e-6);
        numcore::backward(res.total);  // whole objective is differentiable
        EXPECT_GT(x0_hat->grad_mat().norm(), 0.0);
    }
}

TEST(TotalLoss, CollisionTermTriplesAcrossStageBoundary) {
    std::mt19937_64 rng(12);
    LossConfig cfg;
    const double scale = 15.0;
    const Trajectory expert = random_traj(16, rng, 4.0);
    const Trajectory pred = random_traj(16, rng, 4.0) / scale;
    PointSet obs;
    for (int i = 0; i < 60; ++i) obs.push_back({runif(rng, -4, 4), runif(rng, -4, 4)});

    const auto at = [&](int epoch) {
        auto x0_hat = to_tensor(pred);
        return total_loss(x0_hat, expert / scale, expert, expert.row(15).transpose(), obs,
                          scale, epoch, 200, cfg);
    };
    const auto r1 = at(99), r2 = at(100);
    ASSERT_GT(r1.parts.collision, 0.0);
    // identical component values, tripled weight in the combination
    EXPECT_DOUBLE_EQ(r1.parts.collision, r2.parts.collision);
    const double contrib1 = r1.parts.total - r1.parts.simple - r1.parts.hausdorff -
                            r1.parts.dtw - r1.parts.endpoint - 0.1 * r1.parts.smooth;
    const double contrib2 = r2.parts.total - r2.parts.simple - r2.parts.hausdorff -
                            r2.parts.dtw - r2.parts.endpoint - 0.2 * r2.parts.smooth;
    EXPECT_NEAR(contrib2 / contrib1, 3.0, 1e-9);
}
