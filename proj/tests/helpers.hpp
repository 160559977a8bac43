#ifndef TESTS_HELPERS_HPP
#define TESTS_HELPERS_HPP

#include <cmath>
#include <random>

#include "bmc/arcs.hpp"
#include "bmc/constraints.hpp"
#include "bmc/junctions.hpp"

namespace testhelpers {

using namespace bmc;

// One-sided derivative at the left end of an arc's control, matching the
// scheme the junction residuals use (3-point forward + one Richardson level).
template <typename ControlFn>
Vec2 right_rate(const ControlFn& u, double t, double h) {
    auto est = [&](double step) {
        return (u(t) * -3.0 + u(t + step) * 4.0 - u(t + 2.0 * step)) / (2.0 * step);
    };
    return (est(h) * 4.0 - est(2.0 * h)) / 3.0;
}

inline double fd_step(double t0, double t1) {
    return 1e-6 * std::max(1.0, std::abs(t1 - t0));
}

struct ReverseBaryFixture {
    JunctionContext ctx;
    BarycentricJunctionUnknowns exact;
    SpiralArc post;
    UnconstrainedArc pre;
};

// Builds an initial state for which the barycentric entry conditions hold by
// construction: pick the spiral side, derive the jump-consistent pre-cubic,
// and walk it back to t0.
inline ReverseBaryFixture make_reverse_bary_fixture(
    double b1, double phi1, double a, double kappa, int chirality, double t0,
    double t1, const ReferenceTrajectory& ref, MuDotFormula formula) {
    BarycentricSpec spec{b1 / 3.0, kappa}; // entry comfortably outside the disk
    SpiralArc post(b1, phi1, a, kappa, chirality, ref, t1,
                   t1 + std::max((b1 - spec.D) / (a * kappa), 1.0));
    const double h = fd_step(t0, t1);
    const Vec2 u_plus = post.control(t1);
    const Vec2 udot_plus =
        right_rate([&](double t) { return post.control(t); }, t1, h);
    const Vec2 r1{b1 * std::cos(phi1), b1 * std::sin(phi1)};
    const double mudot = mu_dot_plus(formula, a, b1, kappa);
    const Vec2 udot_minus = udot_plus - r1 * mudot;

    const AgentState x1 = post.state(t1);
    // The cubic is determined by (state, control, rate) at t1; extending the
    // polynomial backwards to t0 yields the matching initial state.
    UnconstrainedArc tail =
        UnconstrainedArc::from_state_control(x1, u_plus, udot_minus, t1, t1 + 1.0);
    const AgentState x0 = tail.state(t0);
    UnconstrainedArc pre = UnconstrainedArc::from_state_control(
        x0, tail.control(t0), udot_minus, t0, t1);

    ReverseBaryFixture fx{JunctionContext{}, {}, post, pre};
    fx.ctx.x0 = x0;
    fx.ctx.t0 = t0;
    fx.ctx.ref = ref;
    fx.ctx.spec = spec;
    fx.ctx.formula = formula;
    fx.ctx.chirality = chirality;
    fx.exact.entry_position = x1.p;
    fx.exact.a = a;
    fx.exact.t1 = t1;
    return fx;
}

struct ReverseDiskFixture {
    JunctionContext ctx;
    DiskJunctionUnknowns exact;
    DiskArc post;
    UnconstrainedArc pre;
};

// Same reverse construction for the fixed-distance entry. The u_dot jump may
// have an arbitrary radial component pi1; only its tangential part must
// vanish.
inline ReverseDiskFixture make_reverse_disk_fixture(
    double D, double angle, double a, int chirality, double t0, double t1,
    const ReferenceTrajectory& ref, double pi1) {
    BarycentricSpec spec{D, 0.5};
    DiskArc post(D, a, angle, chirality, ref, t1, t1 + 5.0);
    const double h = fd_step(t0, t1);
    const Vec2 u_plus = post.control(t1);
    const Vec2 udot_plus =
        right_rate([&](double t) { return post.control(t); }, t1, h);
    const Vec2 p_hat{std::cos(angle), std::sin(angle)};
    const Vec2 udot_minus = udot_plus - p_hat * pi1;

    const AgentState x1 = post.state(t1);
    UnconstrainedArc tail =
        UnconstrainedArc::from_state_control(x1, u_plus, udot_minus, t1, t1 + 1.0);
    const AgentState x0 = tail.state(t0);
    UnconstrainedArc pre = UnconstrainedArc::from_state_control(
        x0, tail.control(t0), udot_minus, t0, t1);

    ReverseDiskFixture fx{JunctionContext{}, {}, post, pre};
    fx.ctx.x0 = x0;
    fx.ctx.t0 = t0;
    fx.ctx.ref = ref;
    fx.ctx.spec = spec;
    fx.ctx.formula = MuDotFormula::Paper;
    fx.ctx.chirality = chirality;
    fx.exact.entry_angle = angle;
    fx.exact.a = a;
    fx.exact.t1 = t1;
    return fx;
}

inline ReferenceTrajectory random_cubic_reference(std::mt19937_64& rng,
                                                  double scale) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return ReferenceTrajectory(
        {scale * u(rng), 0.3 * scale * u(rng), 0.02 * scale * u(rng),
         0.002 * scale * u(rng)},
        {scale * u(rng), 0.3 * scale * u(rng), 0.02 * scale * u(rng),
         0.002 * scale * u(rng)});
}

} // namespace testhelpers

#endif
