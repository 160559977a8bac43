#ifndef BMC_NUMERICS_HPP
#define BMC_NUMERICS_HPP

#include <cmath>
#include <functional>
#include <stdexcept>

namespace bmc {

/// Adaptive Simpson quadrature with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double abs_tol = 1e-10, int max_depth = 40);

/// Locates a sign change of f on [lo, hi] by bisection with a secant
/// refinement. Throws std::runtime_error("no event") when f(lo) and f(hi)
/// have the same sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double t_tol = 1e-10);

} // namespace bmc

#endif
