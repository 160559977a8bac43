#ifndef BMC_JUNCTIONS_HPP
#define BMC_JUNCTIONS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "bmc/arcs.hpp"
#include "bmc/constraints.hpp"
#include "bmc/core.hpp"

namespace bmc {

/// Inputs shared by the junction residuals: the pre-junction boundary state,
/// the reference, constraint parameters, and solver switches.
struct JunctionContext {
    AgentState x0;
    double t0 = 0.0;
    ReferenceTrajectory ref;
    BarycentricSpec spec;
    MuDotFormula formula = MuDotFormula::Paper;
    int chirality = 1;
    /// Radius of the Case-II circle; equals spec.D for the aggregation disk
    /// and 2R when the disk machinery handles a collision constraint.
    double disk_radius = 0.0;

    double circle_radius() const { return disk_radius > 0.0 ? disk_radius : spec.D; }
};

struct BarycentricJunctionUnknowns {
    Vec2 entry_position; // m
    double a = 0.0;      // m/s, > 0
    double t1 = 0.0;     // s
};

struct DiskJunctionUnknowns {
    double entry_angle = 0.0; // rad
    double a = 0.0;           // m/s, >= 0
    double t1 = 0.0;          // s
};

/// Relative velocity on the Case-I constraint surface: radial component
/// -a*kappa, tangential component chirality * a * sqrt(1-kappa^2). The
/// resulting state has Case-I g exactly zero.
Vec2 entry_velocity_barycentric(const Vec2& r, double a, double kappa, int chirality);

/// Tangential relative velocity on the circle at the given angle.
Vec2 entry_velocity_disk(double entry_angle, double a, int chirality);

struct BarycentricJunctionArcs {
    UnconstrainedArc pre;
    SpiralArc post;
};
struct DiskJunctionArcs {
    UnconstrainedArc pre;
    DiskArc post;
};

/// Shooting residual for the unconstrained -> spiral junction.
/// Components 1-2: control continuity u(t1+) - u(t1-).
/// Components 3-4: [u_dot(t1+) - u_dot(t1-)] - mu_dot(t1+) r(t1).
std::array<double, 4> barycentric_entry_residual(const BarycentricJunctionUnknowns& u,
                                                 const JunctionContext& ctx);
BarycentricJunctionArcs barycentric_junction_arcs(const BarycentricJunctionUnknowns& u,
                                                  const JunctionContext& ctx);

/// Shooting residual for the unconstrained -> disk-boundary junction.
/// Components 1-2: control continuity; component 3: [u_dot(t1+) - u_dot(t1-)] . q_hat.
std::array<double, 3> disk_entry_residual(const DiskJunctionUnknowns& u,
                                          const JunctionContext& ctx);
DiskJunctionArcs disk_junction_arcs(const DiskJunctionUnknowns& u,
                                    const JunctionContext& ctx);

enum class SolveStatus { Converged, MaxIterations, SingularJacobian, LeftFeasibleRegion };

struct SolverSettings {
    double tol = 1e-9;         // scaled by max(1, ||u(t1)||)
    int max_iter = 100;
    int max_halvings = 40;
    double jacobian_step = 1e-7;
    int multistart = 8;        // perturbed restarts after the heuristic guess
    std::uint64_t seed = 0;
};

template <std::size_t N>
struct NewtonResult {
    std::array<double, N> x{};
    double residual_norm = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIterations;
};

/// Damped Newton with a forward-difference Jacobian. `residual` must throw or
/// the `feasible` predicate must reject iterates outside the admissible
/// region; steps are halved until feasibility is restored.
/// `scale` maps an iterate to the convergence scale max(1, ||u(t1)||).
template <std::size_t N>
NewtonResult<N> damped_newton(
    const std::function<std::array<double, N>(const std::array<double, N>&)>& residual,
    const std::function<bool(const std::array<double, N>&)>& feasible,
    const std::function<double(const std::array<double, N>&)>& scale,
    const std::array<double, N>& guess, const SolverSettings& settings);

struct BarycentricJunctionSolution {
    BarycentricJunctionUnknowns unknowns;
    BarycentricJunctionArcs arcs;
    double residual_norm = 0.0;
    int iterations = 0;
    double gap = 0.0; // junction_gap of the two one-sided controls at t1
    SolveStatus status = SolveStatus::MaxIterations;
};

struct DiskJunctionSolution {
    DiskJunctionUnknowns unknowns;
    DiskJunctionArcs arcs;
    double residual_norm = 0.0;
    int iterations = 0;
    double gap = 0.0;
    double udot_q_residual = 0.0;
    SolveStatus status = SolveStatus::MaxIterations;
};

/// Solves the 4-unknown barycentric entry from the heuristic initial guess,
/// with seeded perturbed restarts on failure.
std::optional<BarycentricJunctionSolution> solve_barycentric_junction(
    const JunctionContext& ctx, const SolverSettings& settings);
std::optional<BarycentricJunctionSolution> solve_barycentric_junction(
    const JunctionContext& ctx, const BarycentricJunctionUnknowns& guess,
    const SolverSettings& settings);

std::optional<DiskJunctionSolution> solve_disk_junction(const JunctionContext& ctx,
                                                        const SolverSettings& settings);
std::optional<DiskJunctionSolution> solve_disk_junction(const JunctionContext& ctx,
                                                        const DiskJunctionUnknowns& guess,
                                                        const SolverSettings& settings);

/// Case I -> II transition record at b = D (Lemma-4 exit). The continuation
/// is the minimum-energy unconstrained arc whose initial control matches the
/// spiral's terminal control, so the transition is control-continuous.
struct SpiralExit {
    double t_exit = 0.0;
    AgentState state;
    Vec2 control;            // shared one-sided control at the transition
    UnconstrainedArc continuation;
    double gap = 0.0;        // junction_gap across the transition
};

SpiralExit spiral_exit(const SpiralArc& arc, double D, double t_end);

} // namespace bmc

#endif
