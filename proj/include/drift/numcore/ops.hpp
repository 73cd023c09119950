// Copyright 2026 drift authors. Apache 2.0 License.
//
// Differentiable operations on Tensor. Each op computes its result eagerly,
// validates finiteness, and (when any input requires grad) records a closure
// that accumulates into the parents' grads.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "drift/numcore/tensor.hpp"

namespace drift::numcore {

namespace detail {

template <class S>
inline bool same_shape(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    return a->rows() == b->rows() && a->cols() == b->cols();
}

template <class S>
inline void attach(const TensorPtr<S>& out, std::vector<TensorPtr<S>> parents,
                   std::function<void()> fn) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (!needs) return;
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward_fn = std::move(fn);
}

}  // namespace detail

template <class S>
TensorPtr<S> matmul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (a->cols() != b->rows())
        throw std::invalid_argument("matmul: inner extents disagree");
    auto out = Tensor<S>::zeros(a->rows(), b->cols());
    out->mat().noalias() = a->mat() * b->mat();
    check_finite("matmul", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b] {
        if (a->requires_grad) a->grad_mat().noalias() += o->grad_mat() * b->mat().transpose();
        if (b->requires_grad) b->grad_mat().noalias() += a->mat().transpose() * o->grad_mat();
    });
    return out;
}

/// Elementwise sum; b may also broadcast as a 1xC row or a 1x1 scalar.
template <class S>
TensorPtr<S> add(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    const bool full = detail::same_shape(a, b);
    const bool rowb = !full && b->rows() == 1 && b->cols() == a->cols();
    const bool scalb = !full && !rowb && b->size() == 1;
    if (!full && !rowb && !scalb) throw std::invalid_argument("add: shape mismatch");
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    if (full) {
        out->mat() += b->mat();
    } else if (rowb) {
        out->mat().rowwise() += b->mat().row(0);
    } else {
        out->mat().array() += b->data[0];
    }
    check_finite("add", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b, full, rowb] {
        if (a->requires_grad) a->grad_mat() += o->grad_mat();
        if (b->requires_grad) {
            if (full)
                b->grad_mat() += o->grad_mat();
            else if (rowb)
                b->grad_mat().row(0) += o->grad_mat().colwise().sum();
            else
                b->grad_mat()(0, 0) += o->grad_mat().sum();
        }
    });
    return out;
}

template <class S>
TensorPtr<S> sub(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    const bool full = detail::same_shape(a, b);
    const bool scalb = !full && b->size() == 1;
    if (!full && !scalb) throw std::invalid_argument("sub: shape mismatch");
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    if (full)
        out->mat() -= b->mat();
    else
        out->mat().array() -= b->data[0];
    check_finite("sub", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b, full] {
        if (a->requires_grad) a->grad_mat() += o->grad_mat();
        if (b->requires_grad) {
            if (full)
                b->grad_mat() -= o->grad_mat();
            else
                b->grad_mat()(0, 0) -= o->grad_mat().sum();
        }
    });
    return out;
}

/// Hadamard product; b may broadcast as a 1x1 scalar.
template <class S>
TensorPtr<S> mul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    const bool full = detail::same_shape(a, b);
    const bool scalb = !full && b->size() == 1;
    if (!full && !scalb) throw std::invalid_argument("mul: shape mismatch");
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    if (full)
        out->mat().array() *= b->mat().array();
    else
        out->mat().array() *= b->data[0];
    check_finite("mul", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b, full] {
        if (full) {
            if (a->requires_grad) a->grad_mat().array() += o->grad_mat().array() * b->mat().array();
            if (b->requires_grad) b->grad_mat().array() += o->grad_mat().array() * a->mat().array();
        } else {
            if (a->requires_grad) a->grad_mat().array() += o->grad_mat().array() * b->data[0];
            if (b->requires_grad)
                b->grad_mat()(0, 0) += (o->grad_mat().array() * a->mat().array()).sum();
        }
    });
    return out;
}

/// Elementwise quotient; b may broadcast as a 1x1 scalar.
template <class S>
TensorPtr<S> div(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    const bool full = detail::same_shape(a, b);
    const bool scalb = !full && b->size() == 1;
    if (!full && !scalb) throw std::invalid_argument("div: shape mismatch");
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    if (full)
        out->mat().array() /= b->mat().array();
    else
        out->mat().array() /= b->data[0];
    check_finite("div", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b, full] {
        if (full) {
            if (a->requires_grad) a->grad_mat().array() += o->grad_mat().array() / b->mat().array();
            if (b->requires_grad)
                b->grad_mat().array() -= o->grad_mat().array() * a->mat().array() /
                                         (b->mat().array() * b->mat().array());
        } else {
            S bv = b->data[0];
            if (a->requires_grad) a->grad_mat().array() += o->grad_mat().array() / bv;
            if (b->requires_grad)
                b->grad_mat()(0, 0) -=
                    (o->grad_mat().array() * a->mat().array()).sum() / (bv * bv);
        }
    });
    return out;
}

template <class S>
TensorPtr<S> scale(const TensorPtr<S>& a, double c) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat() *= static_cast<S>(c);
    check_finite("scale", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a, c] {
        if (a->requires_grad) a->grad_mat() += o->grad_mat() * static_cast<S>(c);
    });
    return out;
}

template <class S>
TensorPtr<S> add_const(const TensorPtr<S>& a, double c) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat().array() += static_cast<S>(c);
    check_finite("add_const", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad) a->grad_mat() += o->grad_mat();
    });
    return out;
}

template <class S>
TensorPtr<S> tanh_op(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat() = out->mat().array().tanh().matrix();
    check_finite("tanh", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad)
            a->grad_mat().array() +=
                o->grad_mat().array() * (S(1) - o->mat().array() * o->mat().array());
    });
    return out;
}

template <class S>
TensorPtr<S> sigmoid(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    for (S& v : out->data) {
        // overflow-safe logistic
        if (v >= S(0)) {
            S e = std::exp(-v);
            v = S(1) / (S(1) + e);
        } else {
            S e = std::exp(v);
            v = e / (S(1) + e);
        }
    }
    check_finite("sigmoid", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad)
            a->grad_mat().array() +=
                o->grad_mat().array() * o->mat().array() * (S(1) - o->mat().array());
    });
    return out;
}

template <class S>
TensorPtr<S> relu(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    for (S& v : out->data) v = v > S(0) ? v : S(0);
    check_finite("relu", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (!a->requires_grad) return;
        auto ga = a->grad_mat();
        for (int i = 0; i < a->size(); ++i)
            if (a->data[i] > S(0)) ga.data()[i] += o->grad[i];
    });
    return out;
}

template <class S>
TensorPtr<S> exp_op(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat() = out->mat().array().exp().matrix();
    check_finite("exp", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad)
            a->grad_mat().array() += o->grad_mat().array() * o->mat().array();
    });
    return out;
}

template <class S>
TensorPtr<S> log_op(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat() = out->mat().array().log().matrix();
    check_finite("log", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad)
            a->grad_mat().array() += o->grad_mat().array() / a->mat().array();
    });
    return out;
}

/// Elementwise square root. Gradient convention at exactly 0: contribute 0
/// instead of Inf, so degenerate zero-length differences cannot poison a
/// whole batch.
template <class S>
TensorPtr<S> sqrt_op(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    out->mat() = out->mat().array().sqrt().matrix();
    check_finite("sqrt", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (!a->requires_grad) return;
        auto ga = a->grad_mat();
        for (int i = 0; i < a->size(); ++i)
            if (o->data[i] > S(0)) ga.data()[i] += o->grad[i] / (S(2) * o->data[i]);
    });
    return out;
}

/// Concatenate along the last axis; all inputs share the row count.
template <class S>
TensorPtr<S> concat_cols(const std::vector<TensorPtr<S>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    int rows = parts[0]->rows();
    int cols = 0;
    for (const auto& p : parts) {
        if (p->rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += p->cols();
    }
    auto out = Tensor<S>::zeros(rows, cols);
    int off = 0;
    for (const auto& p : parts) {
        out->mat().middleCols(off, p->cols()) = p->mat();
        off += p->cols();
    }
    check_finite("concat_cols", out);
    Tensor<S>* o = out.get();
    detail::attach(out, parts, [o, parts] {
        int off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad)
                p->grad_mat() += o->grad_mat().middleCols(off, p->cols());
            off += p->cols();
        }
    });
    return out;
}

template <class S>
TensorPtr<S> softmax_rows(const TensorPtr<S>& a) {
    auto out = Tensor<S>::make(a->rows(), a->cols(), a->data);
    for (int r = 0; r < a->rows(); ++r) {
        auto row = out->mat().row(r);
        S m = row.maxCoeff();
        row = (row.array() - m).exp().matrix();
        row /= row.sum();
    }
    check_finite("softmax_rows", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (!a->requires_grad) return;
        for (int r = 0; r < a->rows(); ++r) {
            auto y = o->mat().row(r);
            auto go = o->grad_mat().row(r);
            S dot = (go.array() * y.array()).sum();
            a->grad_mat().row(r).array() += y.array() * (go.array() - dot);
        }
    });
    return out;
}

/// Column-wise maximum over rows; [N x C] -> [1 x C]. The gradient routes to
/// the arg-max row per column, ties broken toward the lowest row index.
template <class S>
TensorPtr<S> colwise_max(const TensorPtr<S>& a) {
    auto out = Tensor<S>::zeros(1, a->cols());
    std::vector<int> argmax(a->cols(), 0);
    for (int c = 0; c < a->cols(); ++c) {
        S best = a->at(0, c);
        int bi = 0;
        for (int r = 1; r < a->rows(); ++r)
            if (a->at(r, c) > best) {
                best = a->at(r, c);
                bi = r;
            }
        out->data[c] = best;
        argmax[c] = bi;
    }
    check_finite("colwise_max", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a, argmax = std::move(argmax)] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (int c = 0; c < a->cols(); ++c)
            a->grad[static_cast<std::size_t>(argmax[c]) * a->cols() + c] += o->grad[c];
    });
    return out;
}

/// Max over fixed-size row groups; [G*g x C] -> [G x C], one-hot gradient with
/// lowest-index tie break inside each group.
template <class S>
TensorPtr<S> group_max_rows(const TensorPtr<S>& a, int group) {
    if (group <= 0 || a->rows() % group != 0)
        throw std::invalid_argument("group_max_rows: rows not divisible by group");
    int out_rows = a->rows() / group;
    auto out = Tensor<S>::zeros(out_rows, a->cols());
    std::vector<int> argmax(static_cast<std::size_t>(out_rows) * a->cols());
    for (int gr = 0; gr < out_rows; ++gr) {
        for (int c = 0; c < a->cols(); ++c) {
            S best = a->at(gr * group, c);
            int bi = gr * group;
            for (int r = gr * group + 1; r < (gr + 1) * group; ++r)
                if (a->at(r, c) > best) {
                    best = a->at(r, c);
                    bi = r;
                }
            out->at(gr, c) = best;
            argmax[static_cast<std::size_t>(gr) * a->cols() + c] = bi;
        }
    }
    check_finite("group_max_rows", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a, argmax = std::move(argmax)] {
        if (!a->requires_grad) return;
        a->ensure_grad();
        for (std::size_t i = 0; i < argmax.size(); ++i) {
            int c = static_cast<int>(i % a->cols());
            a->grad[static_cast<std::size_t>(argmax[i]) * a->cols() + c] += o->grad[i];
        }
    });
    return out;
}

/// Row gather; duplicate indices accumulate on the way back.
template <class S>
TensorPtr<S> gather_rows(const TensorPtr<S>& a, std::vector<int> idx) {
    for (int i : idx)
        if (i < 0 || i >= a->rows()) throw std::invalid_argument("gather_rows: index out of range");
    auto out = Tensor<S>::zeros(static_cast<int>(idx.size()), a->cols());
    for (std::size_t r = 0; r < idx.size(); ++r)
        out->mat().row(static_cast<int>(r)) = a->mat().row(idx[r]);
    check_finite("gather_rows", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a, idx = std::move(idx)] {
        if (!a->requires_grad) return;
        for (std::size_t r = 0; r < idx.size(); ++r)
            a->grad_mat().row(idx[r]) += o->grad_mat().row(static_cast<int>(r));
    });
    return out;
}

/// Sum along the last axis; [R x C] -> [R x 1].
template <class S>
TensorPtr<S> rowwise_sum(const TensorPtr<S>& a) {
    auto out = Tensor<S>::zeros(a->rows(), 1);
    out->mat().col(0) = a->mat().rowwise().sum();
    check_finite("rowwise_sum", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad)
            a->grad_mat().colwise() += o->grad_mat().col(0);
    });
    return out;
}

template <class S>
TensorPtr<S> sum_all(const TensorPtr<S>& a) {
    auto out = Tensor<S>::scalar(a->mat().sum());
    check_finite("sum_all", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad) a->grad_mat().array() += o->grad[0];
    });
    return out;
}

template <class S>
TensorPtr<S> mean_all(const TensorPtr<S>& a) {
    return scale(sum_all(a), 1.0 / a->size());
}

/// Mean squared error over all entries -> scalar.
template <class S>
TensorPtr<S> mse(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (!detail::same_shape(a, b)) throw std::invalid_argument("mse: shape mismatch");
    S acc = (a->mat() - b->mat()).array().square().sum() / static_cast<S>(a->size());
    auto out = Tensor<S>::scalar(acc);
    check_finite("mse", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b] {
        S c = S(2) * o->grad[0] / static_cast<S>(a->size());
        if (a->requires_grad) a->grad_mat() += c * (a->mat() - b->mat());
        if (b->requires_grad) b->grad_mat() -= c * (a->mat() - b->mat());
    });
    return out;
}

/// Pairwise Euclidean distances between two planar point lists;
/// [M x 2], [N x 2] -> [M x N].
template <class S>
TensorPtr<S> pairwise_dist(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (a->cols() != 2 || b->cols() != 2)
        throw std::invalid_argument("pairwise_dist: inputs must be Nx2");
    const int m = a->rows(), n = b->rows();
    auto out = Tensor<S>::zeros(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            S dx = a->at(i, 0) - b->at(j, 0);
            S dy = a->at(i, 1) - b->at(j, 1);
            out->at(i, j) = std::sqrt(dx * dx + dy * dy);
        }
    check_finite("pairwise_dist", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a, b}, [o, a, b, m, n] {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                S d = o->at(i, j);
                if (d <= S(0)) continue;  // zero-distance subgradient: 0
                S g = o->grad[static_cast<std::size_t>(i) * n + j] / d;
                S dx = (a->at(i, 0) - b->at(j, 0)) * g;
                S dy = (a->at(i, 1) - b->at(j, 1)) * g;
                if (a->requires_grad) {
                    a->grad_mat()(i, 0) += dx;
                    a->grad_mat()(i, 1) += dy;
                }
                if (b->requires_grad) {
                    b->grad_mat()(j, 0) -= dx;
                    b->grad_mat()(j, 1) -= dy;
                }
            }
    });
    return out;
}

/// Constant (detached) copy: same values, no history, no gradient flow.
template <class S>
TensorPtr<S> detach(const TensorPtr<S>& a) {
    return Tensor<S>::make(a->rows(), a->cols(), a->data);
}

/// Per-row scaled log-sum-exp: out_r = (1/alpha) log sum_j exp(alpha a_rj).
/// alpha > 0 gives a smooth maximum, alpha < 0 a smooth minimum; stabilized
/// by the row extremum so any magnitude of alpha is safe.
template <class S>
TensorPtr<S> logsumexp_rows(const TensorPtr<S>& a, S alpha) {
    if (alpha == S(0)) throw std::invalid_argument("logsumexp_rows: alpha must be nonzero");
    const int rows = a->rows(), cols = a->cols();
    auto out = Tensor<S>::zeros(rows, 1);
    for (int r = 0; r < rows; ++r) {
        S m = alpha * a->at(r, 0);
        for (int c = 1; c < cols; ++c) m = std::max(m, alpha * a->at(r, c));
        S sum = S(0);
        for (int c = 0; c < cols; ++c) sum += std::exp(alpha * a->at(r, c) - m);
        out->at(r, 0) = (m + std::log(sum)) / alpha;
    }
    check_finite("logsumexp_rows", out);
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a, alpha, rows, cols] {
        if (!a->requires_grad) return;
        for (int r = 0; r < rows; ++r) {
            const S g = o->grad[static_cast<std::size_t>(r)];
            const S v = o->at(r, 0);
            // d out_r / d a_rc = softmax weight exp(alpha(a_rc - out_r))
            for (int c = 0; c < cols; ++c)
                a->grad_mat()(r, c) += g * std::exp(alpha * (a->at(r, c) - v));
        }
    });
    return out;
}

template <class S>
TensorPtr<S> transpose(const TensorPtr<S>& a) {
    auto out = Tensor<S>::zeros(a->cols(), a->rows());
    out->mat() = a->mat().transpose();
    Tensor<S>* o = out.get();
    detail::attach(out, {a}, [o, a] {
        if (a->requires_grad) a->grad_mat() += o->grad_mat().transpose();
    });
    return out;
}

/// Vertical stack: [R1 x C], [R2 x C], ... -> [(R1+R2+...) x C].
template <class S>
TensorPtr<S> concat_rows(const std::vector<TensorPtr<S>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const int cols = parts[0]->cols();
    int rows = 0;
    for (const auto& p : parts) {
        if (p->cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
        rows += p->rows();
    }
    auto out = Tensor<S>::zeros(rows, cols);
    int at = 0;
    for (const auto& p : parts) {
        out->mat().middleRows(at, p->rows()) = p->mat();
        at += p->rows();
    }
    check_finite("concat_rows", out);
    Tensor<S>* o = out.get();
    std::vector<TensorPtr<S>> parents(parts.begin(), parts.end());
    detail::attach(out, parents, [o, parts] {
        int at = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) p->grad_mat() += o->grad_mat().middleRows(at, p->rows());
            at += p->rows();
        }
    });
    return out;
}

}  // namespace drift::numcore
