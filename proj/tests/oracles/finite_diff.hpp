#pragma once

// Central finite differences over a named-parameter store, for checking
// analytic gradients of the model stack.

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "bhcsum/autograd.hpp"

namespace oracles {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// loss_fn evaluates the scalar loss for the current parameter values.
inline GradCheckResult finite_difference_check(std::map<std::string, bhcsum::Matrix>& params,
                                               const std::map<std::string, bhcsum::Matrix>& analytic,
                                               const std::function<double()>& loss_fn, double delta = 1e-5) {
    GradCheckResult result;
    for (auto& [name, tensor] : params) {
        auto git = analytic.find(name);
        if (git == analytic.end()) continue;
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double saved = tensor.d[i];
            tensor.d[i] = saved + delta;
            const double up = loss_fn();
            tensor.d[i] = saved - delta;
            const double down = loss_fn();
            tensor.d[i] = saved;
            const double numeric = (up - down) / (2.0 * delta);
            const double exact = git->second.d[i];
            // The floor keeps cancellation noise on near-zero gradients from
            // registering as a large relative error.
            const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            const double rel = std::abs(numeric - exact) / denom;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = name;
                result.worst_index = i;
            }
            ++result.checked;
        }
    }
    return result;
}

}  // namespace oracles
