#ifndef BMC_CONSTRAINTS_HPP
#define BMC_CONSTRAINTS_HPP

#include <functional>
#include <utility>
#include <vector>

#include "bmc/core.hpp"

namespace bmc {

/// Case I: outside the disk (b > D), spiral approach constraint.
/// Case II: inside the disk (b <= D), fixed-distance constraint.
enum class ConstraintCase { CaseI, CaseII };

/// Tangency conditions: the constraint and its derivatives up to order q-1.
/// One entry for Case I, two for Case II. All entries vanish on an active
/// constrained arc.
struct TangencyVector {
    std::vector<double> entries;
};

/// Evaluates the two-case constraint; feasible iff the value is <= 0.
inline std::pair<ConstraintCase, double> eval_g(const RelativeState& rel,
                                                const BarycentricSpec& spec) {
    if (rel.b > spec.D) {
        return {ConstraintCase::CaseI, beta(rel, spec) + dot(rel.r, rel.rdot)};
    }
    return {ConstraintCase::CaseII, dot(rel.r, rel.r) - spec.D * spec.D};
}

inline TangencyVector tangency(const RelativeState& rel, const BarycentricSpec& spec,
                               ConstraintCase c) {
    if (c == ConstraintCase::CaseI) {
        return {{beta(rel, spec) + dot(rel.r, rel.rdot)}};
    }
    return {{dot(rel.r, rel.r) - spec.D * spec.D, 2.0 * dot(rel.r, rel.rdot)}};
}

/// The paper's closed form for mu_dot just after a barycentric entry and the
/// variant obtained by eliminating mu_ddot from the two mu ODEs at mu = 0.
/// The two disagree algebraically; both are kept first-class and the oracle
/// experiment adjudicates between them.
enum class MuDotFormula { Paper, Derived };

/// mu_dot(t+) = a^3/b^3 * kappa (1-kappa^2)^2 / (1 - kappa^2 + kappa).
double mu_dot_plus_paper(double a, double b, double kappa);

/// mu_dot(t+) = a^3/b^3 * (1-kappa^2)^2 (2-kappa) / (1 - kappa^2 + kappa).
double mu_dot_plus_derived(double a, double b, double kappa);

double mu_dot_plus(MuDotFormula f, double a, double b, double kappa);

/// Residuals of the two ODEs governing mu along the spiral:
///   res1 = a^4/b^3 (1-k^2)^2 + mu_ddot b - a^2/b mu (1-k^2) - mu a k
///   res2 = a mu_dot (1-k^2) + mu_dot a k - mu_ddot b k - 2 a^4/b^3 (1-k^2)^2
std::pair<double, double> mu_ode_residuals(double mu, double mudot, double muddot,
                                           double a, double b, double kappa);

struct TrajectorySample {
    AgentState state;
    Vec2 u;
};
using TrajectorySampler = std::function<TrajectorySample(double)>;

struct Theorem1Report {
    double gap = 0.0;            // junction gap of the h->0 control limits
    double dndt_plus_norm = 0.0; // ||d/dt N(t1+)|| extrapolated to h->0
};

/// Numeric verification of the control-continuity condition at a junction t1.
/// Controls on both sides are extrapolated to t1 with one-sided 3-point
/// Richardson limits; the right derivative of the tangency vector is
/// estimated by extrapolated one-sided differences. g_order_q selects the
/// constraint case (1 -> Case I, 2 -> Case II).
Theorem1Report check_theorem1(const TrajectorySampler& sampler, int g_order_q,
                              const ReferenceTrajectory& ref,
                              const BarycentricSpec& spec, double t1, double h);

} // namespace bmc

#endif
