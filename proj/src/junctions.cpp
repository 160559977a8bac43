#include "bmc/junctions.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace bmc {

namespace {

template <std::size_t N>
double vec_norm(const std::array<double, N>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Solves A d = rhs in place by Gaussian elimination with partial pivoting.
// Returns false when the pivot collapses.
template <std::size_t N>
bool solve_linear(std::array<std::array<double, N>, N> A, std::array<double, N> rhs,
                  std::array<double, N>& d) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-14) return false;
        std::swap(A[col], A[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < N; ++c) A[r][c] -= f * A[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (std::size_t i = N; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < N; ++c) s -= A[i][c] * d[c];
        d[i] = s / A[i][i];
    }
    return true;
}

// One-sided derivative of a control sample at the left end of its arc,
// second-order difference with one Richardson level.
template <typename ControlFn>
Vec2 right_control_rate(const ControlFn& u, double t, double h) {
    auto estimate = [&](double step) {
        return (u(t) * -3.0 + u(t + step) * 4.0 - u(t + 2.0 * step)) / (2.0 * step);
    };
    const Vec2 dh = estimate(h);
    const Vec2 d2h = estimate(2.0 * h);
    return (dh * 4.0 - d2h) / 3.0;
}

double fd_step_for(const JunctionContext& ctx, double t1) {
    return 1e-6 * std::max(1.0, std::abs(t1 - ctx.t0));
}

} // namespace

Vec2 entry_velocity_barycentric(const Vec2& r, double a, double kappa, int chirality) {
    if (!(a > 0.0)) throw std::domain_error("entry_velocity_barycentric: a must be > 0");
    const double b = norm(r);
    if (!(b > 0.0)) throw std::domain_error("entry_velocity_barycentric: r must be nonzero");
    const Vec2 r_hat = r / b;
    return r_hat * (-a * kappa)
           + perp(r_hat) * (chirality * a * std::sqrt(1.0 - kappa * kappa));
}

Vec2 entry_velocity_disk(double entry_angle, double a, int chirality) {
    if (a < 0.0) throw std::domain_error("entry_velocity_disk: a must be >= 0");
    const Vec2 tangent{-std::sin(entry_angle), std::cos(entry_angle)};
    return tangent * (chirality * a);
}

BarycentricJunctionArcs barycentric_junction_arcs(const BarycentricJunctionUnknowns& u,
                                                  const JunctionContext& ctx) {
    if (!(u.t1 > ctx.t0)) throw std::domain_error("barycentric junction: t1 <= t0");
    const Vec2 r1 = u.entry_position - ctx.ref.position(u.t1);
    const double b1 = norm(r1);
    if (!(b1 > ctx.spec.D))
        throw std::domain_error("barycentric junction: entry inside the disk");
    const Vec2 rdot1 = entry_velocity_barycentric(r1, u.a, ctx.spec.kappa, ctx.chirality);
    const AgentState x1{u.entry_position, rdot1 + ctx.ref.velocity(u.t1)};
    UnconstrainedArc pre = UnconstrainedArc::connect(ctx.x0, ctx.t0, x1, u.t1);

    const double phi1 = std::atan2(r1.y, r1.x);
    const double h = fd_step_for(ctx, u.t1);
    const double exit_time = u.t1 + (b1 - ctx.spec.D) / (u.a * ctx.spec.kappa);
    // Leave room for the one-sided control-rate samples on degenerate arcs.
    const double t_end = std::max(exit_time, u.t1 + 10.0 * h);
    SpiralArc post(b1, phi1, u.a, ctx.spec.kappa, ctx.chirality, ctx.ref, u.t1, t_end);
    return {std::move(pre), std::move(post)};
}

std::array<double, 4> barycentric_entry_residual(const BarycentricJunctionUnknowns& u,
                                                 const JunctionContext& ctx) {
    const BarycentricJunctionArcs arcs = barycentric_junction_arcs(u, ctx);
    const Vec2 u_minus = arcs.pre.control(u.t1);
    const Vec2 u_plus = arcs.post.control(u.t1);
    const Vec2 udot_minus = arcs.pre.control_rate();
    const double h = fd_step_for(ctx, u.t1);
    const Vec2 udot_plus =
        right_control_rate([&](double t) { return arcs.post.control(t); }, u.t1, h);

    const Vec2 r1 = u.entry_position - ctx.ref.position(u.t1);
    const double b1 = norm(r1);
    const double mudot = mu_dot_plus(ctx.formula, u.a, b1, ctx.spec.kappa);
    const Vec2 jump = udot_plus - udot_minus - r1 * mudot;
    return {u_plus.x - u_minus.x, u_plus.y - u_minus.y, jump.x, jump.y};
}

DiskJunctionArcs disk_junction_arcs(const DiskJunctionUnknowns& u,
                                    const JunctionContext& ctx) {
    if (!(u.t1 > ctx.t0)) throw std::domain_error("disk junction: t1 <= t0");
    if (u.a < 0.0) throw std::domain_error("disk junction: a < 0");
    const double D = ctx.circle_radius();
    const Vec2 r1{D * std::cos(u.entry_angle), D * std::sin(u.entry_angle)};
    const Vec2 rdot1 = entry_velocity_disk(u.entry_angle, u.a, ctx.chirality);
    const AgentState x1{ctx.ref.position(u.t1) + r1, ctx.ref.velocity(u.t1) + rdot1};
    UnconstrainedArc pre = UnconstrainedArc::connect(ctx.x0, ctx.t0, x1, u.t1);
    const double h = fd_step_for(ctx, u.t1);
    DiskArc post(D, u.a, u.entry_angle, ctx.chirality, ctx.ref, u.t1,
                 u.t1 + std::max(1.0, 10.0 * h));
    return {std::move(pre), std::move(post)};
}

std::array<double, 3> disk_entry_residual(const DiskJunctionUnknowns& u,
                                          const JunctionContext& ctx) {
    const DiskJunctionArcs arcs = disk_junction_arcs(u, ctx);
    const Vec2 u_minus = arcs.pre.control(u.t1);
    const Vec2 u_plus = arcs.post.control(u.t1);
    const Vec2 udot_minus = arcs.pre.control_rate();
    const double h = fd_step_for(ctx, u.t1);
    const Vec2 udot_plus =
        right_control_rate([&](double t) { return arcs.post.control(t); }, u.t1, h);

    // q_hat at entry: tangential direction of the relative motion. For a = 0
    // the tangent of the circle in the chirality sense is used.
    const Vec2 q_hat{-std::sin(u.entry_angle) * ctx.chirality,
                     std::cos(u.entry_angle) * ctx.chirality};
    const double jump_q = dot(udot_plus - udot_minus, q_hat);
    return {u_plus.x - u_minus.x, u_plus.y - u_minus.y, jump_q};
}

template <std::size_t N>
NewtonResult<N> damped_newton(
    const std::function<std::array<double, N>(const std::array<double, N>&)>& residual,
    const std::function<bool(const std::array<double, N>&)>& feasible,
    const std::function<double(const std::array<double, N>&)>& scale,
    const std::array<double, N>& guess, const SolverSettings& settings) {
    NewtonResult<N> result;
    result.x = guess;
    if (!feasible(result.x)) {
        result.status = SolveStatus::LeftFeasibleRegion;
        result.residual_norm = std::numeric_limits<double>::infinity();
        return result;
    }
    std::array<double, N> res = residual(result.x);
    double rn = vec_norm(res);

    for (int iter = 0; iter < settings.max_iter; ++iter) {
        result.iterations = iter;
        result.residual_norm = rn;
        const double tol = settings.tol * std::max(1.0, scale(result.x));
        if (rn <= tol) {
            result.status = SolveStatus::Converged;
            return result;
        }

        // Forward-difference Jacobian, column by column.
        std::array<std::array<double, N>, N> J{};
        for (std::size_t j = 0; j < N; ++j) {
            double h = settings.jacobian_step * std::max(1.0, std::abs(result.x[j]));
            std::array<double, N> xp = result.x;
            xp[j] += h;
            if (!feasible(xp)) {
                h = -h;
                xp[j] = result.x[j] + h;
                if (!feasible(xp)) {
                    result.status = SolveStatus::LeftFeasibleRegion;
                    return result;
                }
            }
            const std::array<double, N> rp = residual(xp);
            for (std::size_t i = 0; i < N; ++i) J[i][j] = (rp[i] - res[i]) / h;
        }

        std::array<double, N> rhs;
        for (std::size_t i = 0; i < N; ++i) rhs[i] = -res[i];
        std::array<double, N> d{};
        if (!solve_linear<N>(J, rhs, d)) {
            result.status = SolveStatus::SingularJacobian;
            return result;
        }

        double alpha = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= settings.max_halvings; ++halving) {
            std::array<double, N> xn = result.x;
            for (std::size_t i = 0; i < N; ++i) xn[i] += alpha * d[i];
            if (feasible(xn)) {
                const std::array<double, N> rn_vec = residual(xn);
                const double rn_new = vec_norm(rn_vec);
                if (rn_new < (1.0 - 1e-4 * alpha) * rn || rn_new <= tol) {
                    result.x = xn;
                    res = rn_vec;
                    rn = rn_new;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            result.residual_norm = rn;
            result.status = SolveStatus::LeftFeasibleRegion;
            return result;
        }
    }
    result.residual_norm = rn;
    result.status = SolveStatus::MaxIterations;
    return result;
}

template NewtonResult<3> damped_newton<3>(
    const std::function<std::array<double, 3>(const std::array<double, 3>&)>&,
    const std::function<bool(const std::array<double, 3>&)>&,
    const std::function<double(const std::array<double, 3>&)>&,
    const std::array<double, 3>&, const SolverSettings&);
template NewtonResult<4> damped_newton<4>(
    const std::function<std::array<double, 4>(const std::array<double, 4>&)>&,
    const std::function<bool(const std::array<double, 4>&)>&,
    const std::function<double(const std::array<double, 4>&)>&,
    const std::array<double, 4>&, const SolverSettings&);

namespace {

BarycentricJunctionUnknowns unpack_bary(const std::array<double, 4>& x) {
    return {{x[0], x[1]}, x[2], x[3]};
}

DiskJunctionUnknowns unpack_disk(const std::array<double, 3>& x) {
    return {x[0], x[1], x[2]};
}

} // namespace

std::optional<BarycentricJunctionSolution> solve_barycentric_junction(
    const JunctionContext& ctx, const BarycentricJunctionUnknowns& guess,
    const SolverSettings& settings) {
    auto feasible = [&](const std::array<double, 4>& x) {
        const BarycentricJunctionUnknowns u = unpack_bary(x);
        if (!(u.t1 > ctx.t0 + 1e-6)) return false;
        if (!(u.a > 1e-6)) return false;
        const double b1 = norm(u.entry_position - ctx.ref.position(u.t1));
        return b1 > ctx.spec.D * (1.0 + 1e-9);
    };
    auto residual = [&](const std::array<double, 4>& x) {
        return barycentric_entry_residual(unpack_bary(x), ctx);
    };
    auto scale = [&](const std::array<double, 4>& x) {
        const BarycentricJunctionUnknowns u = unpack_bary(x);
        const auto arcs = barycentric_junction_arcs(u, ctx);
        return norm(arcs.pre.control(u.t1));
    };

    std::array<double, 4> x0{guess.entry_position.x, guess.entry_position.y, guess.a,
                             guess.t1};
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    NewtonResult<4> best;
    best.residual_norm = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt <= settings.multistart; ++attempt) {
        std::array<double, 4> start = x0;
        if (attempt > 0) {
            start[0] += 0.2 * ctx.spec.D * unit(rng);
            start[1] += 0.2 * ctx.spec.D * unit(rng);
            start[2] *= 1.0 + 0.3 * unit(rng);
            start[3] = ctx.t0 + (start[3] - ctx.t0) * (1.0 + 0.3 * unit(rng));
        }
        NewtonResult<4> r;
        try {
            r = damped_newton<4>(residual, feasible, scale, start, settings);
        } catch (const std::exception&) {
            continue;
        }
        if (r.status == SolveStatus::Converged) {
            best = r;
            break;
        }
        if (r.residual_norm < best.residual_norm) best = r;
    }

    if (best.status != SolveStatus::Converged) return std::nullopt;

    BarycentricJunctionSolution sol{unpack_bary(best.x),
                                    barycentric_junction_arcs(unpack_bary(best.x), ctx),
                                    best.residual_norm, best.iterations, 0.0,
                                    best.status};
    sol.gap = junction_gap(sol.arcs.pre.control(sol.unknowns.t1),
                           sol.arcs.post.control(sol.unknowns.t1));
    return sol;
}

std::optional<BarycentricJunctionSolution> solve_barycentric_junction(
    const JunctionContext& ctx, const SolverSettings& settings) {
    const RelativeState rel0 = relative_state(ctx.x0, ctx.ref, ctx.t0);
    BarycentricJunctionUnknowns guess;
    guess.a = rel0.a > 1e-9 ? rel0.a : 1.0;
    guess.t1 = ctx.t0 + rel0.b / std::max(rel0.a, 0.1 * ctx.spec.D);
    const Vec2 r_hat = rel0.p_hat.value_or(Vec2{1.0, 0.0});
    guess.entry_position = ctx.ref.position(guess.t1) + r_hat * (1.5 * ctx.spec.D);
    return solve_barycentric_junction(ctx, guess, settings);
}

std::optional<DiskJunctionSolution> solve_disk_junction(const JunctionContext& ctx,
                                                        const DiskJunctionUnknowns& guess,
                                                        const SolverSettings& settings) {
    auto feasible = [&](const std::array<double, 3>& x) {
        const DiskJunctionUnknowns u = unpack_disk(x);
        return u.t1 > ctx.t0 + 1e-6 && u.a >= 0.0;
    };
    auto residual = [&](const std::array<double, 3>& x) {
        return disk_entry_residual(unpack_disk(x), ctx);
    };
    auto scale = [&](const std::array<double, 3>& x) {
        const DiskJunctionUnknowns u = unpack_disk(x);
        const auto arcs = disk_junction_arcs(u, ctx);
        return norm(arcs.pre.control(u.t1));
    };

    std::array<double, 3> x0{guess.entry_angle, guess.a, guess.t1};
    std::mt19937_64 rng(settings.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    NewtonResult<3> best;
    best.residual_norm = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt <= settings.multistart; ++attempt) {
        std::array<double, 3> start = x0;
        if (attempt > 0) {
            start[0] += 0.3 * unit(rng);
            start[1] = std::max(0.0, start[1] * (1.0 + 0.3 * unit(rng)) + 0.05 * unit(rng));
            start[2] = ctx.t0 + (start[2] - ctx.t0) * (1.0 + 0.3 * unit(rng));
        }
        NewtonResult<3> r;
        try {
            r = damped_newton<3>(residual, feasible, scale, start, settings);
        } catch (const std::exception&) {
            continue;
        }
        if (r.status == SolveStatus::Converged) {
            best = r;
            break;
        }
        if (r.residual_norm < best.residual_norm) best = r;
    }

    if (best.status != SolveStatus::Converged) return std::nullopt;

    const DiskJunctionUnknowns u = unpack_disk(best.x);
    DiskJunctionSolution sol{u, disk_junction_arcs(u, ctx), best.residual_norm,
                             best.iterations, 0.0, 0.0, best.status};
    sol.gap = junction_gap(sol.arcs.pre.control(u.t1), sol.arcs.post.control(u.t1));
    sol.udot_q_residual = disk_entry_residual(u, ctx)[2];
    return sol;
}

std::optional<DiskJunctionSolution> solve_disk_junction(const JunctionContext& ctx,
                                                        const SolverSettings& settings) {
    const RelativeState rel0 = relative_state(ctx.x0, ctx.ref, ctx.t0);
    DiskJunctionUnknowns guess;
    guess.entry_angle = std::atan2(rel0.r.y, rel0.r.x);
    guess.a = rel0.a;
    const double D = ctx.circle_radius();
    guess.t1 = ctx.t0
               + std::max(std::abs(rel0.b - D) / std::max(rel0.a, 0.1 * D), 0.1);
    return solve_disk_junction(ctx, guess, settings);
}

SpiralExit spiral_exit(const SpiralArc& arc, double D, double t_end) {
    const double t_exit = arc.time_at_radius(D);
    const AgentState x = arc.state(t_exit);
    const Vec2 u_exit = arc.control(t_exit);
    const double T = std::max(t_end - t_exit, 1e-9);
    // Minimum-energy unconstrained continuation with the initial control
    // pinned to the spiral's terminal control: u decays affinely.
    const Vec2 u_dot = u_exit * (-1.5 / T);
    UnconstrainedArc continuation =
        UnconstrainedArc::from_state_control(x, u_exit, u_dot, t_exit, t_exit + T);
    SpiralExit exit{t_exit, x, u_exit, std::move(continuation), 0.0};
    exit.gap = junction_gap(u_exit, exit.continuation.control(t_exit));
    return exit;
}

} // namespace bmc
