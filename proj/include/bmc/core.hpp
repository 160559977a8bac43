#ifndef BMC_CORE_HPP
#define BMC_CORE_HPP

#include <optional>
#include <stdexcept>

#include "bmc/reference.hpp"
#include "bmc/vec2.hpp"

namespace bmc {

/// Position and velocity of a double-integrator agent.
struct AgentState {
    Vec2 p; // m
    Vec2 v; // m/s
};

/// Kinematics of the agent relative to the reference point.
///
/// The unit vectors p_hat = r/b and q_hat = rdot/a span the moving basis;
/// they are left unset when the corresponding magnitude vanishes (an
/// unconstrained arc may legitimately pass through such states).
struct RelativeState {
    Vec2 r;    // p - p_r, m
    Vec2 rdot; // v - v_r, m/s
    double b = 0.0; // ||r||
    double a = 0.0; // ||rdot||
    std::optional<Vec2> p_hat;
    std::optional<Vec2> q_hat;
};

/// Aggregation parameters: disk radius D and the spiral steepness kappa.
struct BarycentricSpec {
    double D = 1.0;       // m, > 0
    double kappa = 0.5;   // in (0, 1)

    void validate() const {
        if (!(D > 0.0)) throw std::domain_error("BarycentricSpec: D must be > 0");
        if (!(kappa > 0.0 && kappa < 1.0))
            throw std::domain_error("BarycentricSpec: kappa must lie in (0, 1)");
    }
};

/// Adjoint variables of the Hamiltonian. mu is the path-constraint multiplier.
struct Costates {
    Vec2 lambda_p;
    Vec2 lambda_v;
    double mu = 0.0;
};

inline RelativeState relative_state(const AgentState& agent,
                                    const ReferenceTrajectory& ref, double t) {
    RelativeState rel;
    rel.r = agent.p - ref.position(t);
    rel.rdot = agent.v - ref.velocity(t);
    rel.b = norm(rel.r);
    rel.a = norm(rel.rdot);
    if (rel.b > 0.0) rel.p_hat = rel.r / rel.b;
    if (rel.a > 0.0) rel.q_hat = rel.rdot / rel.a;
    return rel;
}

/// beta = a * b * kappa, the required approach rate scale. Always >= 0.
inline double beta(const RelativeState& rel, const BarycentricSpec& spec) {
    return rel.a * rel.b * spec.kappa;
}

/// Junction gap 1/2 ||u+ - u-||^2: zero exactly when the control is
/// continuous across the junction.
inline double junction_gap(const Vec2& u_minus, const Vec2& u_plus) {
    return 0.5 * norm_sq(u_plus - u_minus);
}

} // namespace bmc

#endif
