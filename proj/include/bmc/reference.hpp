#ifndef BMC_REFERENCE_HPP
#define BMC_REFERENCE_HPP

#include <array>

#include "bmc/vec2.hpp"

namespace bmc {

/// Cubic reference trajectory, one polynomial per axis:
///   p_r(t) = c0 + c1 t + c2 t^2 + c3 t^3.
/// Being a cubic, its fourth time derivative vanishes identically.
class ReferenceTrajectory {
public:
    ReferenceTrajectory() = default;
    ReferenceTrajectory(std::array<double, 4> cx, std::array<double, 4> cy)
        : cx_(cx), cy_(cy) {}

    static ReferenceTrajectory fixed_point(const Vec2& p) {
        return ReferenceTrajectory({p.x, 0, 0, 0}, {p.y, 0, 0, 0});
    }

    Vec2 position(double t) const {
        return {eval(cx_, t), eval(cy_, t)};
    }
    Vec2 velocity(double t) const {
        return {cx_[1] + t * (2 * cx_[2] + 3 * cx_[3] * t),
                cy_[1] + t * (2 * cy_[2] + 3 * cy_[3] * t)};
    }
    Vec2 acceleration(double t) const {
        return {2 * cx_[2] + 6 * cx_[3] * t, 2 * cy_[2] + 6 * cy_[3] * t};
    }
    Vec2 jerk() const { return {6 * cx_[3], 6 * cy_[3]}; }

    const std::array<double, 4>& coeffs_x() const { return cx_; }
    const std::array<double, 4>& coeffs_y() const { return cy_; }

private:
    static double eval(const std::array<double, 4>& c, double t) {
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    }

    std::array<double, 4> cx_{0, 0, 0, 0};
    std::array<double, 4> cy_{0, 0, 0, 0};
};

} // namespace bmc

#endif
