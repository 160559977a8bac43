#include "bmc/constraints.hpp"

#include <cmath>
#include <stdexcept>

namespace bmc {

namespace {

void require_positive_b(double b) {
    if (!(b > 0.0)) throw std::domain_error("mu_dot_plus: b must be > 0");
}

} // namespace

double mu_dot_plus_paper(double a, double b, double kappa) {
    require_positive_b(b);
    const double k2 = kappa * kappa;
    const double om = 1.0 - k2;
    return (a * a * a) / (b * b * b) * kappa * om * om / (om + kappa);
}

double mu_dot_plus_derived(double a, double b, double kappa) {
    require_positive_b(b);
    const double k2 = kappa * kappa;
    const double om = 1.0 - k2;
    return (a * a * a) / (b * b * b) * om * om * (2.0 - kappa) / (om + kappa);
}

double mu_dot_plus(MuDotFormula f, double a, double b, double kappa) {
    return f == MuDotFormula::Paper ? mu_dot_plus_paper(a, b, kappa)
                                    : mu_dot_plus_derived(a, b, kappa);
}

std::pair<double, double> mu_ode_residuals(double mu, double mudot, double muddot,
                                           double a, double b, double kappa) {
    if (!(b > 0.0)) throw std::domain_error("mu_ode_residuals: b must be > 0");
    const double om = 1.0 - kappa * kappa;
    const double a4b3 = (a * a * a * a) / (b * b * b);
    const double res1 = a4b3 * om * om + muddot * b - (a * a / b) * mu * om - mu * a * kappa;
    const double res2 = a * mudot * om + mudot * a * kappa - muddot * b * kappa
                        - 2.0 * a4b3 * om * om;
    return {res1, res2};
}

namespace {

// One-sided limit at 0 from samples at h, 2h, 4h (quadratic extrapolation).
Vec2 richardson_limit(const Vec2& fh, const Vec2& f2h, const Vec2& f4h) {
    return fh * (8.0 / 3.0) - f2h * 2.0 + f4h * (1.0 / 3.0);
}

std::vector<double> tangency_at(const TrajectorySampler& sampler, int g_order_q,
                                const ReferenceTrajectory& ref,
                                const BarycentricSpec& spec, double t) {
    const TrajectorySample s = sampler(t);
    const RelativeState rel = relative_state(s.state, ref, t);
    const ConstraintCase c =
        g_order_q >= 2 ? ConstraintCase::CaseII : ConstraintCase::CaseI;
    return tangency(rel, spec, c).entries;
}

} // namespace

Theorem1Report check_theorem1(const TrajectorySampler& sampler, int g_order_q,
                              const ReferenceTrajectory& ref,
                              const BarycentricSpec& spec, double t1, double h) {
    if (!(h > 0.0)) throw std::domain_error("check_theorem1: h must be > 0");
    if (g_order_q < 1 || g_order_q > 2)
        throw std::domain_error("check_theorem1: only constraint orders q <= 2 are supported");

    const Vec2 u_minus = richardson_limit(sampler(t1 - h).u, sampler(t1 - 2 * h).u,
                                          sampler(t1 - 4 * h).u);
    const Vec2 u_plus = richardson_limit(sampler(t1 + h).u, sampler(t1 + 2 * h).u,
                                         sampler(t1 + 4 * h).u);

    Theorem1Report report;
    report.gap = junction_gap(u_minus, u_plus);

    // Right derivative of N, one level of step-halving extrapolation on the
    // offset difference quotient (N(t1+2h) - N(t1+h)) / h.
    auto quotient = [&](double step) {
        const auto n1 = tangency_at(sampler, g_order_q, ref, spec, t1 + step);
        const auto n2 = tangency_at(sampler, g_order_q, ref, spec, t1 + 2 * step);
        std::vector<double> d(n1.size());
        for (std::size_t i = 0; i < n1.size(); ++i) d[i] = (n2[i] - n1[i]) / step;
        return d;
    };
    const auto dh = quotient(h);
    const auto dh2 = quotient(h / 2);
    double sq = 0.0;
    for (std::size_t i = 0; i < dh.size(); ++i) {
        const double v = 2.0 * dh2[i] - dh[i];
        sq += v * v;
    }
    report.dndt_plus_norm = std::sqrt(sq);
    return report;
}

} // namespace bmc
