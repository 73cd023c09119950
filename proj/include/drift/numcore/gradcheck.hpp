// Copyright 2026 drift authors. Apache 2.0 License.
//
// Central-finite-difference validation of reverse-mode gradients.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "drift/numcore/ops.hpp"
#include "drift/numcore/tensor.hpp"

namespace drift::numcore {

/// Compares analytic gradients of a scalar-valued closure against central
/// differences, coordinate by coordinate, over the given inputs. Returns the
/// max of |analytic - numeric| / (|numeric| + eps). The closure must rebuild
/// its graph from the inputs' current values on every call.
template <class S>
double gradient_check(const std::function<TensorPtr<S>()>& f,
                      const std::vector<TensorPtr<S>>& inputs,
                      double h = 1e-5, double eps = 1e-6) {
    for (auto& in : inputs) in->grad.clear();

    auto loss = f();
    if (loss->size() != 1)
        throw std::invalid_argument("gradient_check: closure must return a scalar");
    backward(loss);

    std::vector<std::vector<double>> analytic(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        analytic[i].assign(inputs[i]->data.size(), 0.0);
        if (!inputs[i]->grad.empty())
            for (std::size_t j = 0; j < inputs[i]->grad.size(); ++j)
                analytic[i][j] = static_cast<double>(inputs[i]->grad[j]);
        inputs[i]->grad.clear();
    }

    // forward-only probes: disable recording for speed
    std::vector<bool> saved;
    for (auto& in : inputs) {
        saved.push_back(in->requires_grad);
        in->requires_grad = false;
    }

    double max_rel = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!saved[i]) continue;
        auto& x = inputs[i]->data;
        for (std::size_t j = 0; j < x.size(); ++j) {
            S orig = x[j];
            x[j] = orig + static_cast<S>(h);
            double fp = static_cast<double>(f()->value());
            x[j] = orig - static_cast<S>(h);
            double fm = static_cast<double>(f()->value());
            x[j] = orig;
            double numeric = (fp - fm) / (2.0 * h);
            double rel = std::abs(analytic[i][j] - numeric) / (std::abs(numeric) + eps);
            if (rel > max_rel) max_rel = rel;
        }
    }

    for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i]->requires_grad = saved[i];
    return max_rel;
}

}  // namespace drift::numcore
