// Copyright 2026 drift authors. Apache 2.0 License.
//
// Adaptive-moment optimizer over a fixed, ordered parameter list.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "drift/numcore/tensor.hpp"

namespace drift::numcore {

template <class S>
struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class S>
class Adam {
public:
    Adam(std::vector<TensorPtr<S>> params, AdamConfig<S> cfg = {})
        : cfg_(cfg), params_(std::move(params)) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->data.size(), S(0));
            v_[i].assign(params_[i]->data.size(), S(0));
        }
    }

    /// One bias-corrected update; requires every parameter to carry a fresh
    /// gradient and clears them afterwards.
    void step() {
        ++step_count_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            if (p.grad.empty())
                throw std::invalid_argument("Adam::step: missing gradient");
            const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
            for (std::size_t j = 0; j < p.data.size(); ++j) {
                S g = p.grad[j];
                m_[i][j] = b1 * m_[i][j] + (S(1) - b1) * g;
                v_[i][j] = b2 * v_[i][j] + (S(1) - b2) * g * g;
                double mhat = static_cast<double>(m_[i][j]) / bc1;
                double vhat = static_cast<double>(v_[i][j]) / bc2;
                p.data[j] -= static_cast<S>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
            p.grad.clear();
        }
    }

    void zero_grad() {
        for (auto& p : params_) p->grad.clear();
    }

    std::int64_t step_count() const { return step_count_; }
    const std::vector<TensorPtr<S>>& params() const { return params_; }
    std::vector<S>& first_moment(std::size_t i) { return m_[i]; }
    std::vector<S>& second_moment(std::size_t i) { return v_[i]; }
    void set_step_count(std::int64_t t) { step_count_ = t; }

private:
    AdamConfig<S> cfg_;
    std::vector<TensorPtr<S>> params_;
    std::vector<std::vector<S>> m_, v_;
    std::int64_t step_count_ = 0;
};

}  // namespace drift::numcore
