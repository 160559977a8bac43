#include "bmc/arcs.hpp"

#include <cmath>

#include "bmc/numerics.hpp"

namespace bmc {

UnconstrainedArc UnconstrainedArc::connect(const AgentState& x0, double t0,
                                           const AgentState& x1, double t1) {
    if (!(t1 > t0)) throw std::domain_error("UnconstrainedArc::connect: t1 <= t0");
    const double T = t1 - t0;
    auto axis = [&](double p0, double v0, double p1, double v1) {
        const double dp = p1 - p0;
        return std::array<double, 4>{
            p0, v0, (3.0 * dp - T * (2.0 * v0 + v1)) / (T * T),
            (-2.0 * dp + T * (v0 + v1)) / (T * T * T)};
    };
    return UnconstrainedArc(axis(x0.p.x, x0.v.x, x1.p.x, x1.v.x),
                            axis(x0.p.y, x0.v.y, x1.p.y, x1.v.y), t0, t1);
}

UnconstrainedArc UnconstrainedArc::from_state_control(const AgentState& x, const Vec2& u,
                                                      const Vec2& u_dot, double t0,
                                                      double t1) {
    return UnconstrainedArc({x.p.x, x.v.x, u.x / 2.0, u_dot.x / 6.0},
                            {x.p.y, x.v.y, u.y / 2.0, u_dot.y / 6.0}, t0, t1);
}

double UnconstrainedArc::energy(double t_lo, double t_hi) const {
    if (t_lo < t0_ - 1e-9 || t_hi > t1_ + 1e-9 || t_hi < t_lo)
        throw std::domain_error("UnconstrainedArc::energy: interval outside arc");
    // ||u||^2 is quadratic in t, so Simpson is exact.
    auto f = [&](double t) { return norm_sq(control(t)); };
    const double h = t_hi - t_lo;
    return 0.5 * h / 6.0 * (f(t_lo) + 4.0 * f(0.5 * (t_lo + t_hi)) + f(t_hi));
}

RelativeState SpiralArc::relative(double t) const {
    check_time(t);
    const double bt = b(t);
    const double ang = phi(t);
    const Vec2 p_hat{std::cos(ang), std::sin(ang)};
    const Vec2 phi_hat = perp(p_hat);
    RelativeState rel;
    rel.r = p_hat * bt;
    rel.rdot = p_hat * (-a_ * kappa_) + phi_hat * (s_ * a_ * std::sqrt(1.0 - kappa_ * kappa_));
    rel.b = bt;
    rel.a = a_;
    rel.p_hat = p_hat;
    rel.q_hat = rel.rdot / a_;
    return rel;
}

AgentState SpiralArc::state(double t) const {
    const RelativeState rel = relative(t);
    return {ref_.position(t) + rel.r, ref_.velocity(t) + rel.rdot};
}

Vec2 SpiralArc::control(double t) const {
    check_time(t);
    const double bt = b(t);
    const double ang = phi(t);
    const Vec2 p_hat{std::cos(ang), std::sin(ang)};
    const Vec2 phi_hat = perp(p_hat);
    const double om = 1.0 - kappa_ * kappa_;
    // r_ddot has radial component -a^2 (1-k^2)/b and is perpendicular to q_hat.
    const Vec2 r_ddot = p_hat * (-a_ * a_ * om / bt)
                        + phi_hat * (-s_ * a_ * a_ * kappa_ * std::sqrt(om) / bt);
    return ref_.acceleration(t) + r_ddot;
}

double SpiralArc::energy(double t_lo, double t_hi) const {
    if (t_lo < t0_ - 1e-9 || t_hi > t1_ + 1e-9 || t_hi < t_lo)
        throw std::domain_error("SpiralArc::energy: interval outside arc");
    return adaptive_simpson([&](double t) { return 0.5 * norm_sq(control(t)); },
                            t_lo, t_hi, 1e-10);
}

RelativeState DiskArc::relative(double t) const {
    const double ang = phi(t);
    const Vec2 p_hat{std::cos(ang), std::sin(ang)};
    const Vec2 phi_hat = perp(p_hat);
    RelativeState rel;
    rel.r = p_hat * D_;
    rel.rdot = phi_hat * (s_ * a_);
    rel.b = D_;
    rel.a = a_;
    rel.p_hat = p_hat;
    if (a_ > 0.0) rel.q_hat = phi_hat * static_cast<double>(s_);
    return rel;
}

AgentState DiskArc::state(double t) const {
    const RelativeState rel = relative(t);
    return {ref_.position(t) + rel.r, ref_.velocity(t) + rel.rdot};
}

Vec2 DiskArc::control(double t) const {
    const double ang = phi(t);
    const Vec2 p_hat{std::cos(ang), std::sin(ang)};
    return ref_.acceleration(t) - p_hat * (a_ * a_ / D_);
}

double DiskArc::energy(double t_lo, double t_hi) const {
    if (t_lo < t0_ - 1e-9 || t_hi > t1_ + 1e-9 || t_hi < t_lo)
        throw std::domain_error("DiskArc::energy: interval outside arc");
    return adaptive_simpson([&](double t) { return 0.5 * norm_sq(control(t)); },
                            t_lo, t_hi, 1e-10);
}

AgentState arc_state(const Arc& arc, double t) {
    return std::visit([&](const auto& a) { return a.state(t); }, arc);
}

Vec2 arc_control(const Arc& arc, double t) {
    return std::visit([&](const auto& a) { return a.control(t); }, arc);
}

double arc_energy(const Arc& arc, double t_lo, double t_hi) {
    return std::visit([&](const auto& a) { return a.energy(t_lo, t_hi); }, arc);
}

double arc_t_start(const Arc& arc) {
    return std::visit([](const auto& a) { return a.t_start(); }, arc);
}

double arc_t_end(const Arc& arc) {
    return std::visit([](const auto& a) { return a.t_end(); }, arc);
}

} // namespace bmc
