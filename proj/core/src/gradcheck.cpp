#include "inpaint/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace inpaint {

GradReport grad_check(const std::function<double(const Tensor&)>& f, const Tensor& point,
                      const Tensor& analytic_grad, double step, double tol) {
    if (!point.same_shape(analytic_grad))
        throw dim_error("grad_check: gradient shape " + shape_str(analytic_grad.shape()) +
                        " does not match point " + shape_str(point.shape()));
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be > 0");

    GradReport rep;
    Tensor x = point;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double fp = f(x);
        x[i] = orig - step;
        const double fm = f(x);
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw finite_error("grad_check: non-finite function value during probe");
        const double numeric = (fp - fm) / (2.0 * step);
        const double analytic = analytic_grad[i];
        const double abs_err = std::abs(numeric - analytic);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double rel_err = abs_err / denom;
        if (abs_err > rep.max_abs_err) rep.max_abs_err = abs_err;
        if (rel_err > rep.max_rel_err) {
            rep.max_rel_err = rel_err;
            rep.worst_index = i;
        }
    }
    rep.passed = rep.max_rel_err <= tol;
    return rep;
}

GradReport grad_check(const std::function<double(const Tensor&)>& f,
                      const std::function<Tensor(const Tensor&)>& grad_fn, const Tensor& point,
                      double step, double tol) {
    return grad_check(f, point, grad_fn(point), step, tol);
}

}  // namespace inpaint
