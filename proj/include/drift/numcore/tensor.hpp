// Copyright 2026 drift authors. Apache 2.0 License.
//
// Dense rank-2 tensor with reverse-mode automatic differentiation.
//
// Every tensor is a row-major (rows x cols) matrix; vectors are 1xN rows and
// scalars are 1x1. A forward pass dynamically records a DAG of shared_ptr
// nodes; backward() walks it once in reverse topological order, accumulates
// gradients into leaves, and frees the graph. Instantiate with double for
// gradient checks and float for training throughput.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "drift/common.hpp"

namespace drift::numcore {

template <class S>
class Tensor;

template <class S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
class Tensor : public std::enable_shared_from_this<Tensor<S>> {
public:
    using Ptr = TensorPtr<S>;

    std::vector<S> data;
    std::vector<S> grad;  // empty until backward touches this node
    bool requires_grad = false;

    // recorded computation graph; cleared once backward consumes it
    std::vector<Ptr> parents;
    std::function<void()> backward_fn;
    bool consumed = false;

    Tensor(int rows, int cols, std::vector<S> values)
        : data(std::move(values)), rows_(rows), cols_(cols) {
        if (rows <= 0 || cols <= 0)
            throw std::invalid_argument("Tensor: extents must be positive");
        if (static_cast<std::size_t>(rows) * cols != data.size())
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }
    std::vector<int> shape() const { return {rows_, cols_}; }

    S& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols_ + c]; }
    S at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols_ + c]; }

    /// Scalar value of a 1x1 tensor.
    S value() const {
        if (size() != 1) throw std::invalid_argument("Tensor::value: not a scalar");
        return data[0];
    }

    Eigen::Map<EMat<S>> mat() { return {data.data(), rows_, cols_}; }
    Eigen::Map<const EMat<S>> mat() const { return {data.data(), rows_, cols_}; }

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), S(0));
    }

    Eigen::Map<EMat<S>> grad_mat() {
        ensure_grad();
        return {grad.data(), rows_, cols_};
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), S(0));
    }

    bool is_leaf() const { return parents.empty() && !backward_fn; }

    static Ptr make(int rows, int cols, std::vector<S> values) {
        return std::make_shared<Tensor<S>>(rows, cols, std::move(values));
    }

    static Ptr zeros(int rows, int cols) {
        return make(rows, cols, std::vector<S>(static_cast<std::size_t>(rows) * cols, S(0)));
    }

    static Ptr full(int rows, int cols, S v) {
        return make(rows, cols, std::vector<S>(static_cast<std::size_t>(rows) * cols, v));
    }

    static Ptr scalar(S v) { return make(1, 1, {v}); }

    static Ptr row(const std::vector<S>& values) {
        return make(1, static_cast<int>(values.size()), values);
    }

    /// Trainable leaf with Glorot-uniform init, deterministic per seed.
    static Ptr param(int rows, int cols, std::uint64_t seed) {
        auto rng = drift::make_rng(seed);
        double bound = std::sqrt(6.0 / (rows + cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        std::vector<S> v(static_cast<std::size_t>(rows) * cols);
        for (auto& x : v) x = static_cast<S>(u(rng));
        auto t = make(rows, cols, std::move(v));
        t->requires_grad = true;
        return t;
    }

    /// Trainable leaf initialised to zero (biases).
    static Ptr param_zeros(int rows, int cols) {
        auto t = zeros(rows, cols);
        t->requires_grad = true;
        return t;
    }

private:
    int rows_;
    int cols_;
};

template <class S>
inline void check_finite(const char* op, const TensorPtr<S>& t) {
    for (S v : t->data)
        if (!std::isfinite(static_cast<double>(v)))
            throw NonFiniteError(std::string(op) + ": non-finite output");
}

/// Reverse-mode sweep from a scalar loss. Accumulates dLoss/dLeaf into the
/// grad of every requires_grad leaf, then frees the recorded graph; a second
/// backward through the same graph throws.
template <class S>
inline void backward(const TensorPtr<S>& loss) {
    if (loss->size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    if (loss->consumed)
        throw std::invalid_argument("backward: graph already consumed");
    if (!loss->requires_grad)
        throw std::invalid_argument("backward: loss does not require grad");

    // iterative post-order DFS
    std::vector<Tensor<S>*> order;
    std::unordered_set<Tensor<S>*> seen;
    std::vector<std::pair<Tensor<S>*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Tensor<S>* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor<S>* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn();
        }
    }

    // free the graph; leaf grads survive for the optimizer
    for (Tensor<S>* node : order) {
        bool was_intermediate = static_cast<bool>(node->backward_fn);
        node->consumed = true;
        node->backward_fn = nullptr;
        node->parents.clear();
        if (was_intermediate) node->grad.clear();
    }
}

}  // namespace drift::numcore
