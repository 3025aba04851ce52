#pragma once

#include <functional>
#include <string>
#include <vector>

#include "grucap/tensor.hpp"

namespace grucap {

/// Central finite-difference gradient check.
///
/// `loss_value` must recompute the scalar loss from the current contents of
/// `params` (fresh tape each call); it is evaluated 2x per parameter element
/// and never touches gradients, so it is an oracle independent of the
/// backward pass under test.
///
/// The denominator floor sits at the step size: a double-precision central
/// difference on an O(1..10) loss carries ~1e-10 of absolute noise at
/// h = 1e-5 (it scales as 1/h), so gradients below ~1e-5 cannot be certified
/// to a 1e-4 relative tolerance by this oracle and are compared against the
/// floor instead.
struct GradCheck {
    double step = 1e-5;
    double denom_floor = 1e-5;

    struct Result {
        double max_rel_err = 0.0;
        std::string worst_block;
        std::size_t worst_index = 0;
    };

    Result run(const std::vector<std::pair<std::string, Tensor>>& params,
               const std::function<double()>& loss_value,
               const std::function<void()>& backward_pass) const;
};

/// rel = |a - b| / max(floor, |a|, |b|)
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace grucap
