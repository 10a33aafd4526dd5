#pragma once

#include "inpaint/tensor.hpp"

#include <functional>

namespace inpaint {

struct GradReport {
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    bool passed = false;
};

/// f: scalar function of a tensor. analytic_grad: gradient of f at `point`.
/// Compares against central differences (f(x+h)-f(x-h))/(2h) per coordinate.
/// Relative error denominator is max(|analytic|,|numeric|,1e-8).
GradReport grad_check(const std::function<double(const Tensor&)>& f, const Tensor& point,
                      const Tensor& analytic_grad, double step, double tol);

/// Convenience overload: the function supplies its own gradient at `point`.
GradReport grad_check(const std::function<double(const Tensor&)>& f,
                      const std::function<Tensor(const Tensor&)>& grad_fn, const Tensor& point,
                      double step, double tol);

}  // namespace inpaint
