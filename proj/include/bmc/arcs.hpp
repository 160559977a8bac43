#ifndef BMC_ARCS_HPP
#define BMC_ARCS_HPP

#include <array>
#include <stdexcept>
#include <variant>

#include "bmc/core.hpp"
#include "bmc/reference.hpp"

namespace bmc {

/// Minimum-energy unconstrained arc: a cubic in each axis, so the control
/// u = p_ddot is affine in time. Coefficients are stored in local time
/// s = t - t_start.
class UnconstrainedArc {
public:
    UnconstrainedArc(std::array<double, 4> cx, std::array<double, 4> cy,
                     double t_start, double t_end)
        : cx_(cx), cy_(cy), t0_(t_start), t1_(t_end) {
        if (!(t1_ > t0_)) throw std::domain_error("UnconstrainedArc: empty interval");
    }

    /// Two-point solve: the unique cubic matching (p, v) at both endpoints,
    /// which is the energy-minimizing twice-differentiable connection.
    static UnconstrainedArc connect(const AgentState& x0, double t0,
                                    const AgentState& x1, double t1);

    /// Cubic pinned by position, velocity, control, and control rate at t0.
    static UnconstrainedArc from_state_control(const AgentState& x, const Vec2& u,
                                               const Vec2& u_dot, double t0, double t1);

    AgentState state(double t) const {
        const double s = t - t0_;
        return {{poly(cx_, s), poly(cy_, s)},
                {dpoly(cx_, s), dpoly(cy_, s)}};
    }
    Vec2 control(double t) const {
        const double s = t - t0_;
        return {2 * cx_[2] + 6 * cx_[3] * s, 2 * cy_[2] + 6 * cy_[3] * s};
    }
    /// Constant jerk; u is affine.
    Vec2 control_rate() const { return {6 * cx_[3], 6 * cy_[3]}; }

    double t_start() const { return t0_; }
    double t_end() const { return t1_; }

    /// 1/2 integral of ||u||^2, closed form (the integrand is quadratic).
    double energy(double t_lo, double t_hi) const;

private:
    static double poly(const std::array<double, 4>& c, double s) {
        return c[0] + s * (c[1] + s * (c[2] + s * c[3]));
    }
    static double dpoly(const std::array<double, 4>& c, double s) {
        return c[1] + s * (2 * c[2] + 3 * c[3] * s);
    }

    std::array<double, 4> cx_;
    std::array<double, 4> cy_;
    double t0_, t1_;
};

/// Case-I constrained primitive: logarithmic-spiral relative motion at
/// constant relative speed a, with b(t) = b0 - a kappa (t - t_start).
class SpiralArc {
public:
    SpiralArc(double b0, double phi0, double a, double kappa, int chirality,
              ReferenceTrajectory ref, double t_start, double t_end)
        : b0_(b0), phi0_(phi0), a_(a), kappa_(kappa), s_(chirality),
          ref_(std::move(ref)), t0_(t_start), t1_(t_end) {
        if (!(a_ > 0.0)) throw std::domain_error("SpiralArc: a must be > 0");
        if (!(kappa_ > 0.0 && kappa_ < 1.0))
            throw std::domain_error("SpiralArc: kappa must lie in (0, 1)");
        if (s_ != 1 && s_ != -1) throw std::domain_error("SpiralArc: chirality must be +-1");
        if (!(t1_ >= t0_)) throw std::domain_error("SpiralArc: empty interval");
        if (!(b(t1_) > 0.0)) throw std::domain_error("SpiralArc: arc extends past collapse");
    }

    double b(double t) const { return b0_ - a_ * kappa_ * (t - t0_); }
    double phi(double t) const {
        return phi0_ + s_ * (std::sqrt(1.0 - kappa_ * kappa_) / kappa_)
                           * std::log(b0_ / b(t));
    }

    /// Time at which b reaches the given radius (Lemma-2 arrival).
    double time_at_radius(double radius) const {
        return t0_ + (b0_ - radius) / (a_ * kappa_);
    }

    RelativeState relative(double t) const;
    AgentState state(double t) const;
    Vec2 control(double t) const;

    double a() const { return a_; }
    double kappa() const { return kappa_; }
    int chirality() const { return s_; }
    double entry_radius() const { return b0_; }
    double entry_angle() const { return phi0_; }
    double t_start() const { return t0_; }
    double t_end() const { return t1_; }
    const ReferenceTrajectory& reference() const { return ref_; }

    double energy(double t_lo, double t_hi) const;

private:
    void check_time(double t) const {
        if (t < t0_ - 1e-9 || t > t1_ + 1e-9)
            throw std::domain_error("SpiralArc: t outside arc interval");
        if (!(b(t) > 0.0)) throw std::domain_error("SpiralArc: b(t) <= 0");
    }

    double b0_, phi0_, a_, kappa_;
    int s_;
    ReferenceTrajectory ref_;
    double t0_, t1_;
};

/// Case-II constrained primitive: uniform circular relative motion on the
/// disk boundary (b = D, kappa = 0), multiplier mu = (a/D)^2.
class DiskArc {
public:
    DiskArc(double D, double a, double phi0, int chirality, ReferenceTrajectory ref,
            double t_start, double t_end)
        : D_(D), a_(a), phi0_(phi0), s_(chirality), ref_(std::move(ref)),
          t0_(t_start), t1_(t_end) {
        if (!(D_ > 0.0)) throw std::domain_error("DiskArc: D must be > 0");
        if (a_ < 0.0) throw std::domain_error("DiskArc: a must be >= 0");
        if (s_ != 1 && s_ != -1) throw std::domain_error("DiskArc: chirality must be +-1");
        if (!(t1_ >= t0_)) throw std::domain_error("DiskArc: empty interval");
    }

    double phi(double t) const { return phi0_ + s_ * (a_ / D_) * (t - t0_); }

    RelativeState relative(double t) const;
    AgentState state(double t) const;
    Vec2 control(double t) const;
    double mu() const { return (a_ / D_) * (a_ / D_); }

    double a() const { return a_; }
    double radius() const { return D_; }
    int chirality() const { return s_; }
    double t_start() const { return t0_; }
    double t_end() const { return t1_; }
    const ReferenceTrajectory& reference() const { return ref_; }

    double energy(double t_lo, double t_hi) const;

private:
    double D_, a_, phi0_;
    int s_;
    ReferenceTrajectory ref_;
    double t0_, t1_;
};

using Arc = std::variant<UnconstrainedArc, SpiralArc, DiskArc>;

AgentState arc_state(const Arc& arc, double t);
Vec2 arc_control(const Arc& arc, double t);
double arc_energy(const Arc& arc, double t_lo, double t_hi);
double arc_t_start(const Arc& arc);
double arc_t_end(const Arc& arc);

} // namespace bmc

#endif
