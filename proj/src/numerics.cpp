#include "bmc/numerics.hpp"

namespace bmc {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
           + adaptive_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double abs_tol, int max_depth) {
    if (lo == hi) return 0.0;
    const double fa = f(lo);
    const double fm = f(0.5 * (lo + hi));
    const double fb = f(hi);
    const double whole = simpson(fa, fm, fb, hi - lo);
    return adaptive_step(f, lo, hi, fa, fm, fb, whole, abs_tol, max_depth);
}

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double t_tol) {
    double fa = f(lo);
    double fb = f(hi);
    if (fa == 0.0) return lo;
    if (fb == 0.0) return hi;
    if ((fa > 0.0) == (fb > 0.0)) throw std::runtime_error("no event");
    double a = lo, b = hi;
    while (b - a > t_tol) {
        // Secant candidate, falling back to bisection when it leaves the bracket.
        double m = a - fa * (b - a) / (fb - fa);
        const double mid = 0.5 * (a + b);
        if (!(m > a && m < b)) m = mid;
        // Keep the bracket shrinking geometrically.
        if (std::min(m - a, b - m) < 0.1 * (b - a)) m = mid;
        const double fmv = f(m);
        if (fmv == 0.0) return m;
        if ((fmv > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fmv;
        } else {
            b = m;
            fb = fmv;
        }
    }
    return 0.5 * (a + b);
}

} // namespace bmc
