// Copyright 2026 drift authors. Apache 2.0 License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "drift/numcore/adam.hpp"
#include "drift/numcore/checkpoint.hpp"
#include "drift/numcore/gradcheck.hpp"
#include "drift/numcore/ops.hpp"
#include "drift/numcore/tensor.hpp"

using namespace drift::numcore;
using TD = Tensor<double>;
using PD = TensorPtr<double>;

namespace {

PD random_tensor(int r, int c, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0,
                 bool needs_grad = true) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(r) * c);
    for (auto& x : v) x = u(rng);
    auto t = TD::make(r, c, std::move(v));
    t->requires_grad = needs_grad;
    return t;
}

// Weighted total with fixed constant weights, so a scalar loss sees every
// output coordinate.  Weights depend only on the shape: repeated calls
// inside a finite-difference probe must evaluate the same function.
PD weighted_total(const PD& x) {
    std::mt19937_64 wrng(1234u + 31u * static_cast<unsigned>(x->rows()) +
                         static_cast<unsigned>(x->cols()));
    auto w = random_tensor(x->rows(), x->cols(), wrng, 0.1, 1.0, false);
    return sum_all(mul(x, w));
}

// Independent oracle: triple-loop matrix product.
std::vector<double> matmul_oracle(const PD& a, const PD& b) {
    std::vector<double> out(static_cast<std::size_t>(a->rows()) * b->cols(), 0.0);
    for (int i = 0; i < a->rows(); ++i)
        for (int j = 0; j < b->cols(); ++j)
            for (int k = 0; k < a->cols(); ++k)
                out[static_cast<std::size_t>(i) * b->cols() + j] += a->at(i, k) * b->at(k, j);
    return out;
}

// Independent oracle: central finite differences on a single input, written
// directly in the test rather than through gradient_check.
std::vector<double> finite_difference(const std::function<double()>& f, PD& x, double h = 1e-5) {
    std::vector<double> g(x->data.size());
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        double orig = x->data[i];
        x->data[i] = orig + h;
        double fp = f();
        x->data[i] = orig - h;
        double fm = f();
        x->data[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST(ForwardOps, TanhAtOrigin) {
    auto x = TD::scalar(0.0);
    EXPECT_DOUBLE_EQ(tanh_op(x)->value(), 0.0);
}

TEST(ForwardOps, SoftmaxUniformUnderConstantInput) {
    for (double c : {-3.0, 0.0, 7.5}) {
        auto x = TD::row({c, c, c});
        auto y = softmax_rows(x);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(y->data[j], 1.0 / 3.0, 1e-15);
    }
}

TEST(ForwardOps, MatmulMatchesTripleLoopOracle) {
    std::mt19937_64 rng(42);
    auto a = random_tensor(2, 3, rng);
    auto b = random_tensor(3, 2, rng);
    auto c = matmul(a, b);
    auto expect = matmul_oracle(a, b);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(c->data[i], expect[i], 1e-12);
}

TEST(ForwardOps, ShapeMismatchThrows) {
    std::mt19937_64 rng(1);
    auto a = random_tensor(2, 3, rng);
    auto b = random_tensor(2, 3, rng);
    EXPECT_THROW(matmul(a, b), std::invalid_argument);
    auto c = random_tensor(3, 2, rng);
    EXPECT_THROW(add(a, c), std::invalid_argument);
    EXPECT_THROW(mse(a, c), std::invalid_argument);
}

TEST(ForwardOps, NonFiniteOutputThrows) {
    auto x = TD::scalar(-1.0);
    EXPECT_THROW(log_op(x), drift::NonFiniteError);
    auto big = TD::scalar(1e308);
    EXPECT_THROW(mul(big, big), drift::NonFiniteError);
}

TEST(Backward, SquarePolynomial) {
    auto x = TD::scalar(3.0);
    x->requires_grad = true;
    auto y = mul(x, x);
    backward(y);
    EXPECT_NEAR(x->grad[0], 6.0, 1e-12);
}

TEST(Backward, MseTanhChainMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    auto w = random_tensor(4, 3, rng);
    auto x = random_tensor(3, 1, rng, -1.0, 1.0, false);
    auto y = random_tensor(4, 1, rng, -0.5, 0.5, false);

    auto loss_fn = [&] { return mse(tanh_op(matmul(w, x)), y); };
    auto loss = loss_fn();
    backward(loss);
    std::vector<double> analytic(w->grad.begin(), w->grad.end());
    w->grad.clear();

    bool saved = w->requires_grad;
    w->requires_grad = false;
    auto numeric = finite_difference([&] { return loss_fn()->value(); }, w);
    w->requires_grad = saved;

    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double rel = std::abs(analytic[i] - numeric[i]) / (std::abs(numeric[i]) + 1e-6);
        EXPECT_LT(rel, 1e-4);
    }
}

TEST(Backward, MaxReduceTieBreaksToLowestIndex) {
    auto x = TD::make(3, 1, {1.0, 5.0, 5.0});
    x->requires_grad = true;
    auto y = sum_all(colwise_max(x));
    backward(y);
    EXPECT_DOUBLE_EQ(x->grad[0], 0.0);
    EXPECT_DOUBLE_EQ(x->grad[1], 1.0);
    EXPECT_DOUBLE_EQ(x->grad[2], 0.0);
}

TEST(Backward, MaxReduceForwardMatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_tensor(6, 4, rng);
        auto y = colwise_max(x);
        for (int c = 0; c < 4; ++c) {
            double best = x->at(0, c);
            for (int r = 1; r < 6; ++r) best = std::max(best, x->at(r, c));
            EXPECT_DOUBLE_EQ(y->data[c], best);
        }
        // one-hot gradient
        auto x2 = TD::make(6, 4, x->data);
        x2->requires_grad = true;
        backward(sum_all(colwise_max(x2)));
        for (int c = 0; c < 4; ++c) {
            double col_sum = 0;
            for (int r = 0; r < 6; ++r) col_sum += x2->grad[static_cast<std::size_t>(r) * 4 + c];
            EXPECT_DOUBLE_EQ(col_sum, 1.0);
        }
    }
}

TEST(Backward, NonScalarLossThrows) {
    std::mt19937_64 rng(3);
    auto x = random_tensor(2, 2, rng);
    auto y = tanh_op(x);
    EXPECT_THROW(backward(y), std::invalid_argument);
}

TEST(Backward, GraphConsumedOnSecondCall) {
    auto x = TD::scalar(2.0);
    x->requires_grad = true;
    auto y = mul(x, x);
    backward(y);
    EXPECT_THROW(backward(y), std::invalid_argument);
}

TEST(Backward, SumOfLossesIsLinear) {
    std::mt19937_64 rng(17);
    auto w = random_tensor(3, 3, rng);
    auto x = random_tensor(3, 1, rng, -1, 1, false);
    auto y = random_tensor(3, 1, rng, -1, 1, false);

    auto la = [&] { return mse(tanh_op(matmul(w, x)), y); };
    auto lb = [&] { return sum_all(sigmoid(matmul(w, x))); };

    backward(la());
    std::vector<double> ga(w->grad.begin(), w->grad.end());
    w->grad.clear();
    backward(lb());
    std::vector<double> gb(w->grad.begin(), w->grad.end());
    w->grad.clear();
    backward(add(la(), lb()));
    for (std::size_t i = 0; i < ga.size(); ++i)
        EXPECT_NEAR(w->grad[i], ga[i] + gb[i], 1e-10);
}

TEST(Optimizer, FirstStepMovesByLearningRate) {
    auto p = TD::scalar(1.0);
    p->requires_grad = true;
    AdamConfig<double> cfg;
    cfg.lr = 0.1;
    Adam<double> opt({p}, cfg);
    p->ensure_grad();
    p->grad[0] = 1.0;
    opt.step();
    // bias-corrected first step has magnitude lr / (1 + eps-ish)
    EXPECT_NEAR(p->data[0], 1.0 - 0.1, 1e-6);
    EXPECT_TRUE(p->grad.empty());  // grads cleared
}

TEST(Optimizer, ConvergesOnQuadratic) {
    auto x = TD::scalar(0.0);
    x->requires_grad = true;
    AdamConfig<double> cfg;
    cfg.lr = 0.1;
    Adam<double> opt({x}, cfg);
    for (int i = 0; i < 100; ++i) {
        auto loss = mul(sub(x, TD::scalar(2.0)), sub(x, TD::scalar(2.0)));
        backward(loss);
        opt.step();
    }
    EXPECT_LT(std::abs(x->data[0] - 2.0), 0.05);
}

TEST(Optimizer, ZeroGradientLeavesParameterUnchanged) {
    auto p = TD::scalar(5.0);
    p->requires_grad = true;
    Adam<double> opt({p});
    p->ensure_grad();
    opt.step();
    EXPECT_DOUBLE_EQ(p->data[0], 5.0);
}

TEST(Optimizer, MissingGradientThrows) {
    auto p = TD::scalar(5.0);
    p->requires_grad = true;
    Adam<double> opt({p});
    EXPECT_THROW(opt.step(), std::invalid_argument);
}

TEST(Optimizer, BitReproducibleAcrossRuns) {
    auto run = [] {
        std::mt19937_64 rng(99);
        auto w = random_tensor(4, 4, rng);
        auto x = random_tensor(4, 1, rng, -1, 1, false);
        Adam<double> opt({w});
        for (int i = 0; i < 25; ++i) {
            backward(sum_all(tanh_op(matmul(w, x))));
            opt.step();
        }
        return w->data;
    };
    auto a = run();
    auto b = run();
    EXPECT_EQ(a, b);  // exact bit equality
}

TEST(GradientCheck, IdentityScalar) {
    auto x = TD::scalar(1.7);
    x->requires_grad = true;
    double err = gradient_check<double>([&] { return add_const(x, 0.0); }, {x});
    EXPECT_LT(err, 1e-9);
}

TEST(GradientCheck, EveryRegisteredOpOnRandomSmallShapes) {
    std::mt19937_64 rng(123);
    auto check = [&](const char* name, const std::function<PD()>& f,
                     std::vector<PD> inputs) {
        double err = gradient_check<double>(f, inputs);
        EXPECT_LT(err, 1e-4) << "op: " << name;
    };

    for (int trial = 0; trial < 3; ++trial) {
        std::uniform_int_distribution<int> ext(1, 5);
        int m = ext(rng), k = ext(rng), n = ext(rng);

        auto a = random_tensor(m, k, rng);
        auto b = random_tensor(k, n, rng);
        check("matmul", [&] { return weighted_total(matmul(a, b)); }, {a, b});

        auto c = random_tensor(m, k, rng);
        auto d = random_tensor(m, k, rng);
        check("add", [&] { return weighted_total(add(c, d)); }, {c, d});
        check("sub", [&] { return weighted_total(sub(c, d)); }, {c, d});
        check("mul", [&] { return weighted_total(mul(c, d)); }, {c, d});

        auto row = random_tensor(1, k, rng);
        check("add_rowbcast", [&] { return weighted_total(add(c, row)); }, {c, row});
        auto s = random_tensor(1, 1, rng, 0.5, 2.0);
        check("add_scalar", [&] { return weighted_total(add(c, s)); }, {c, s});
        check("mul_scalar", [&] { return weighted_total(mul(c, s)); }, {c, s});
        check("div_scalar", [&] { return weighted_total(div(c, s)); }, {c, s});

        auto pos = random_tensor(m, k, rng, 0.5, 3.0);
        check("div", [&] { return weighted_total(div(c, pos)); }, {c, pos});
        check("log", [&] { return weighted_total(log_op(pos)); }, {pos});
        check("sqrt", [&] { return weighted_total(sqrt_op(pos)); }, {pos});
        check("exp", [&] { return weighted_total(exp_op(c)); }, {c});
        check("tanh", [&] { return weighted_total(tanh_op(c)); }, {c});
        check("sigmoid", [&] { return weighted_total(sigmoid(c)); }, {c});
        check("relu", [&] { return weighted_total(relu(c)); }, {c});
        check("scale", [&] { return weighted_total(scale(c, -1.7)); }, {c});
        check("add_const", [&] { return weighted_total(add_const(c, 0.3)); }, {c});
        check("softmax", [&] { return weighted_total(softmax_rows(c)); }, {c});
        check("colwise_max", [&] { return weighted_total(colwise_max(c)); }, {c});
        check("rowwise_sum", [&] { return weighted_total(rowwise_sum(c)); }, {c});
        check("sum_all", [&] { return sum_all(c); }, {c});
        check("mean_all", [&] { return mean_all(c); }, {c});
        check("mse", [&] { return mse(c, d); }, {c, d});
        check("concat", [&] { return weighted_total(concat_cols<double>({c, d})); },
              {c, d});
        check("concat_rows", [&] { return weighted_total(concat_rows<double>({c, d})); },
              {c, d});
        check("transpose", [&] { return weighted_total(transpose(c)); }, {c});
        check("logsumexp_pos", [&] { return weighted_total(logsumexp_rows(c, 3.0)); }, {c});
        check("logsumexp_neg", [&] { return weighted_total(logsumexp_rows(c, -3.0)); }, {c});

        std::vector<int> idx;
        std::uniform_int_distribution<int> pick(0, m - 1);
        for (int i = 0; i < 4; ++i) idx.push_back(pick(rng));
        check("gather_rows", [&] { return weighted_total(gather_rows(c, idx)); }, {c});

        auto grouped = random_tensor(2 * m, k, rng);
        check("group_max", [&] { return weighted_total(group_max_rows(grouped, 2)); },
              {grouped});

        auto pa = random_tensor(m, 2, rng);
        auto pb = random_tensor(n, 2, rng);
        check("pairwise_dist", [&] { return weighted_total(pairwise_dist(pa, pb)); },
              {pa, pb});
    }
}

TEST(Checkpoint, RoundTripAndMismatchRejection) {
    std::mt19937_64 rng(5);
    auto w = random_tensor(3, 4, rng);
    Checkpoint ck;
    ck.config_json = "{\"k\":8}";
    ck.records.push_back(to_record("layer.w", *w));

    std::string path = testing::TempDir() + "drift_ckpt_test.bin";
    save_checkpoint(path, ck);
    auto back = load_checkpoint(path);
    EXPECT_EQ(back.config_json, ck.config_json);
    ASSERT_EQ(back.records.size(), 1u);
    EXPECT_EQ(back.records[0].name, "layer.w");
    for (std::size_t i = 0; i < w->data.size(); ++i)
        EXPECT_FLOAT_EQ(back.records[0].values[i], static_cast<float>(w->data[i]));

    auto target = TD::zeros(3, 4);
    load_record_into(back.records[0], *target);
    EXPECT_NEAR(target->data[5], w->data[5], 1e-6);

    auto wrong = TD::zeros(4, 3);
    EXPECT_THROW(load_record_into(back.records[0], *wrong), std::invalid_argument);
    EXPECT_EQ(back.find("no.such.name"), nullptr);
}
