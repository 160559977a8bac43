#include "bmc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "bmc/junctions.hpp"
#include "bmc/numerics.hpp"

namespace bmc {

namespace {

constexpr double kFeasTol = 1e-8;
constexpr double kTimeTol = 1e-12;

double surface_scale(const RelativeState& rel) {
    return std::max(1.0, rel.a * rel.b);
}

} // namespace

const char* mode_name(SegmentMode mode) {
    switch (mode) {
        case SegmentMode::Cubic: return "cubic";
        case SegmentMode::Coast: return "coast";
        case SegmentMode::Spiral: return "spiral";
        case SegmentMode::Disk: return "disk";
        case SegmentMode::ExitCubic: return "exit-cubic";
        case SegmentMode::CollisionCubic: return "collision-cubic";
        case SegmentMode::CollisionDisk: return "collision-disk";
    }
    return "?";
}

const Segment& Trajectory::segment_at(double t) const {
    if (segments_.empty()) throw std::logic_error("Trajectory: empty");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        if (arc_t_start(segments_[i].arc) <= t + kTimeTol) idx = i;
    }
    return segments_[idx];
}

AgentState Trajectory::state(double t) const {
    const Segment& seg = segment_at(t);
    const double tc = std::clamp(t, arc_t_start(seg.arc), arc_t_end(seg.arc));
    return arc_state(seg.arc, tc);
}

Vec2 Trajectory::control(double t) const {
    const Segment& seg = segment_at(t);
    const double tc = std::clamp(t, arc_t_start(seg.arc), arc_t_end(seg.arc));
    return arc_control(seg.arc, tc);
}

double Trajectory::energy() const {
    double e = 0.0;
    for (const Segment& seg : segments_)
        e += arc_energy(seg.arc, arc_t_start(seg.arc), arc_t_end(seg.arc));
    return e;
}

void Scenario::validate() const {
    spec.validate();
    if (agents.empty()) throw InfeasibleScenario("scenario has no agents");
    if (!(tf > t0)) throw InfeasibleScenario("scenario horizon is empty (tf <= t0)");
    if (!(R > 0.0)) throw InfeasibleScenario("agent radius R must be > 0");
    if (!(sample_rate > 0.0)) throw InfeasibleScenario("sample_rate must be > 0");
    for (const AgentState& a : agents) {
        if (!finite(a.p) || !finite(a.v))
            throw InfeasibleScenario("agent state has non-finite components");
    }
}

double collision_constraint(const AgentState& agent_i, const AgentState& agent_j,
                            double R) {
    return (2.0 * R) * (2.0 * R) - norm_sq(agent_i.p - agent_j.p);
}

double detect_event(const std::function<double(double)>& predicate, double lo,
                    double hi) {
    try {
        return find_root(predicate, lo, hi, 1e-10);
    } catch (const std::runtime_error&) {
        throw NoEventError();
    }
}

namespace {

SolverSettings solver_settings(const Scenario& sc) {
    SolverSettings s;
    s.tol = sc.solver.tol;
    s.max_iter = sc.solver.max_iter;
    s.seed = sc.solver.seed;
    return s;
}

int momentum_chirality(const RelativeState& rel) {
    const double c = cross(rel.r, rel.rdot);
    return c < 0.0 ? -1 : 1;
}

// First t in (lo, hi] where f becomes positive, refined by root finding.
std::optional<double> first_upcrossing(const std::function<double(double)>& f,
                                       double lo, double hi, int grid) {
    double prev_t = lo;
    double prev_f = f(lo);
    for (int i = 1; i <= grid; ++i) {
        const double t = lo + (hi - lo) * i / grid;
        const double ft = f(t);
        if (prev_f <= 0.0 && ft > 0.0) {
            if (prev_f == 0.0) return prev_t;
            return detect_event(f, prev_t, t);
        }
        prev_t = t;
        prev_f = ft;
    }
    return std::nullopt;
}

// Rest-on-boundary guess: decelerate along the current relative velocity
// direction to a stop where that ray meets the circle of the given radius.
// Seeds the low-a family of junction roots, which is the path-feasible one
// for head-on approaches.
std::optional<DiskJunctionUnknowns> braking_guess_for(const RelativeState& rel,
                                                      double t, double radius) {
    if (rel.a < 1e-9) return std::nullopt;
    const Vec2 v_hat = rel.rdot / rel.a;
    const double bq = dot(rel.r, v_hat);
    const double cq = norm_sq(rel.r) - radius * radius;
    double tau;
    if (cq <= 0.0) {
        // Inside the circle: stop where the forward ray exits it.
        const double disc = bq * bq - cq;
        tau = -bq + std::sqrt(disc);
    } else {
        // Outside the circle: stop at the closest approach of the ray, or at
        // the first circle intersection when the ray pierces it.
        const double disc = bq * bq - cq;
        tau = disc >= 0.0 ? -bq - std::sqrt(disc) : -bq;
    }
    if (tau <= 1e-9) return std::nullopt;
    const Vec2 entry = rel.r + v_hat * tau;
    DiskJunctionUnknowns g;
    g.entry_angle = std::atan2(entry.y, entry.x);
    g.a = 0.05 * rel.a;
    g.t1 = t + 2.0 * tau / rel.a;
    return g;
}

// Momentum guess: carry the current relative velocity to where the straight
// coast from r exits the circle of the given radius, keeping the current
// speed through the contact. Seeds the high-a (curvature-matched) family of
// roots, which covers fast near-tangential states close to the boundary
// where the braking family has no contained member.
std::optional<DiskJunctionUnknowns> momentum_guess_for(const RelativeState& rel,
                                                       double t, double radius) {
    if (rel.a < 1e-9) return std::nullopt;
    const Vec2 v_hat = rel.rdot / rel.a;
    const double bq = dot(rel.r, v_hat);
    const double cq = norm_sq(rel.r) - radius * radius;
    const double disc = bq * bq - cq;
    if (disc < 0.0) return std::nullopt;
    const double tau = -bq + std::sqrt(disc); // outward crossing of the ray
    if (tau <= 1e-9) return std::nullopt;
    const Vec2 entry = rel.r + v_hat * tau;
    DiskJunctionUnknowns g;
    g.entry_angle = std::atan2(entry.y, entry.x);
    g.a = rel.a;
    g.t1 = t + tau / rel.a;
    return g;
}

struct Planner {
    const Scenario& sc;
    AgentResult out;

    void log_junction(JunctionRecord rec) { out.junctions.push_back(std::move(rec)); }

    void plan(const AgentState& x0) {
        const double t0 = sc.t0;
        const RelativeState rel0 = relative_state(x0, sc.reference, t0);
        const auto [c0, g0] = eval_g(rel0, sc.spec);
        if (g0 > kFeasTol * surface_scale(rel0)) {
            std::ostringstream msg;
            msg << "initial state violates the barycentric motion constraint: g = "
                << g0;
            throw InfeasibleScenario(msg.str());
        }
        if (c0 == ConstraintCase::CaseI) {
            plan_outside(x0, t0, rel0, g0);
        } else {
            plan_in_disk(relative_coast(x0, t0), SegmentMode::Coast);
        }
    }

    UnconstrainedArc relative_coast(const AgentState& x, double t) const {
        return UnconstrainedArc::from_state_control(x, sc.reference.acceleration(t),
                                                    sc.reference.jerk(), t, sc.tf);
    }

    void plan_outside(const AgentState& x0, double t0, const RelativeState& rel0,
                      double g0) {
        if (std::abs(g0) <= kFeasTol * surface_scale(rel0) && rel0.a > 1e-9) {
            // Already on the Case-I surface: the spiral starts immediately.
            start_spiral(rel0.b, std::atan2(rel0.r.y, rel0.r.x), rel0.a,
                         momentum_chirality(rel0), t0);
            return;
        }

        // Candidate do-nothing plan: absolute coast. It stands if the
        // constraint never activates before the disk is reached.
        const UnconstrainedArc coast =
            UnconstrainedArc::from_state_control(x0, Vec2{}, Vec2{}, t0, sc.tf);
        auto g_of = [&](double t) {
            const RelativeState rel = relative_state(coast.state(t), sc.reference, t);
            return eval_g(rel, sc.spec).second;
        };
        auto b_of = [&](double t) {
            return norm(coast.state(t).p - sc.reference.position(t)) - sc.spec.D;
        };
        const int grid = std::max(2000, static_cast<int>(200 * (sc.tf - t0)));
        const auto t_viol = first_upcrossing(g_of, t0, sc.tf, grid);
        std::optional<double> t_enter;
        {
            auto neg_b = [&](double t) { return -b_of(t); };
            t_enter = first_upcrossing(neg_b, t0, sc.tf, grid);
        }
        if (!t_viol || (t_enter && *t_enter < *t_viol)) {
            if (!t_enter) {
                out.trajectory.push({coast, SegmentMode::Coast});
                return;
            }
            UnconstrainedArc head =
                UnconstrainedArc::from_state_control(x0, Vec2{}, Vec2{}, t0,
                                                     std::max(*t_enter, t0 + 1e-9));
            out.trajectory.push({head, SegmentMode::Coast});
            plan_in_disk_from(coast, *t_enter, SegmentMode::Coast);
            return;
        }

        solve_barycentric_entry(x0, t0, coast, *t_viol);
    }

    // Case-I g along an unconstrained arc must stay within tolerance for the
    // arc to be an admissible plan segment.
    bool pre_arc_g_feasible(const UnconstrainedArc& pre, double lo, double hi) const {
        const int n = 400;
        for (int k = 0; k <= n; ++k) {
            const double t = lo + (hi - lo) * k / n;
            const RelativeState rel =
                relative_state(pre.state(t), sc.reference, t);
            if (eval_g(rel, sc.spec).second > kFeasTol * surface_scale(rel))
                return false;
        }
        return true;
    }

    void solve_barycentric_entry(const AgentState& x0, double t0,
                                 const UnconstrainedArc& coast, double t_viol) {
        JunctionContext ctx;
        ctx.x0 = x0;
        ctx.t0 = t0;
        ctx.ref = sc.reference;
        ctx.spec = sc.spec;
        ctx.formula = sc.solver.mu_dot_formula;
        const SolverSettings settings = solver_settings(sc);

        // A second guess anchored at the first coast violation instant.
        BarycentricJunctionUnknowns viol_guess;
        viol_guess.t1 = std::max(t_viol, t0 + 0.1);
        viol_guess.entry_position = coast.state(viol_guess.t1).p;
        {
            const RelativeState relv =
                relative_state(coast.state(viol_guess.t1), sc.reference,
                               viol_guess.t1);
            viol_guess.a = relv.a > 1e-9 ? relv.a : 1.0;
        }

        std::optional<BarycentricJunctionSolution> best;
        int best_s = 1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int s : candidate_chiralities()) {
            ctx.chirality = s;
            for (int which : {0, 1}) {
                auto sol = which == 0
                               ? bmc::solve_barycentric_junction(ctx, settings)
                               : bmc::solve_barycentric_junction(ctx, viol_guess,
                                                                 settings);
                if (!sol) continue;
                if (!pre_arc_g_feasible(sol->arcs.pre, t0,
                                        std::min(sol->unknowns.t1, sc.tf)))
                    continue;
                const double cost = plan_cost(*sol);
                if (cost < best_cost || (cost == best_cost && s > best_s && best)) {
                    best = sol;
                    best_s = s;
                    best_cost = cost;
                }
            }
        }
        if (!best)
            throw SolverFailure(
                "barycentric entry junction: no admissible solution found");

        const auto& u = best->unknowns;
        if (u.t1 >= sc.tf - 1e-9) {
            // The junction falls beyond the horizon; only the (feasible)
            // approach cubic is executed.
            out.trajectory.push({trim(best->arcs.pre, t0, sc.tf), SegmentMode::Cubic});
            return;
        }
        const Vec2 r1 = u.entry_position - sc.reference.position(u.t1);
        out.trajectory.push({best->arcs.pre, SegmentMode::Cubic});
        JunctionRecord rec;
        rec.t = u.t1;
        rec.kind = "barycentric-entry";
        rec.residual_norm = best->residual_norm;
        rec.gap = best->gap;
        rec.b_entry = norm(r1);
        rec.a = u.a;
        rec.kappa = sc.spec.kappa;
        rec.chirality = best_s;
        log_junction(rec);

        start_spiral(norm(r1), std::atan2(r1.y, r1.x), u.a, best_s, u.t1);
    }

    double plan_cost(const BarycentricJunctionSolution& sol) const {
        const double t1 = sol.unknowns.t1;
        double e = sol.arcs.pre.energy(sol.arcs.pre.t_start(), std::min(t1, sc.tf));
        if (t1 >= sc.tf) return e;
        const double exit = sol.arcs.post.time_at_radius(sc.spec.D);
        const double t_end = std::min(std::max(exit, t1), sc.tf);
        if (t_end > t1) e += sol.arcs.post.energy(t1, t_end);
        return e;
    }

    std::vector<int> candidate_chiralities() const {
        if (sc.solver.chirality == 1) return {1};
        if (sc.solver.chirality == -1) return {-1};
        return {1, -1};
    }

    void start_spiral(double b0, double phi0, double a, int s, double t_entry) {
        SpiralArc probe(b0, phi0, a, sc.spec.kappa, s, sc.reference, t_entry,
                        t_entry);
        const double t_exit = probe.time_at_radius(sc.spec.D);
        if (t_exit >= sc.tf - 1e-9) {
            out.trajectory.push({SpiralArc(b0, phi0, a, sc.spec.kappa, s,
                                           sc.reference, t_entry, sc.tf),
                                 SegmentMode::Spiral});
            return;
        }
        SpiralArc spiral(b0, phi0, a, sc.spec.kappa, s, sc.reference, t_entry,
                         t_exit);
        out.trajectory.push({spiral, SegmentMode::Spiral});

        const SpiralExit exit = bmc::spiral_exit(spiral, sc.spec.D, sc.tf);
        JunctionRecord rec;
        rec.t = exit.t_exit;
        rec.kind = "case-switch";
        rec.gap = exit.gap;
        rec.b_entry = sc.spec.D;
        rec.a = a;
        rec.kappa = sc.spec.kappa;
        rec.chirality = s;
        log_junction(rec);

        if (sc.tf - exit.t_exit <= 1e-9) return;
        plan_in_disk(exit.continuation, SegmentMode::ExitCubic);
    }

    std::optional<DiskJunctionUnknowns> braking_guess(const RelativeState& rel,
                                                      double t) const {
        return braking_guess_for(rel, t, sc.spec.D);
    }

    bool pre_arc_contained(const UnconstrainedArc& pre, double lo, double hi) const {
        const int n = 400;
        for (int k = 0; k <= n; ++k) {
            const double t = lo + (hi - lo) * k / n;
            const double b = norm(pre.state(t).p - sc.reference.position(t));
            if (b - sc.spec.D > 1e-9 * std::max(1.0, sc.spec.D)) return false;
        }
        return true;
    }

    void plan_in_disk(const UnconstrainedArc& proposal, SegmentMode mode) {
        plan_in_disk_from(proposal, proposal.t_start(), mode);
    }

    // `proposal` is an unconstrained arc whose relative distance satisfies
    // b <= D at ts; it is kept until (if ever) it would cross the boundary,
    // at which point a disk junction takes over.
    void plan_in_disk_from(const UnconstrainedArc& proposal, double ts,
                           SegmentMode mode) {
        auto rel_of = [&](double t) {
            return relative_state(proposal.state(t), sc.reference, t);
        };
        const RelativeState rel_s = rel_of(ts);
        const double rr_s = dot(rel_s.r, rel_s.rdot);
        if (rel_s.b >= sc.spec.D * (1.0 - 1e-9)) {
            const double tol = 1e-9 * surface_scale(rel_s);
            if (rr_s > tol) {
                throw InfeasibleScenario(
                    "non-tangential disk-boundary approach (r.rdot > 0 at b = D): "
                    "keeping the constraint active requires an infinite impulse "
                    "control input (Corollary 1)");
            }
            if (std::abs(rr_s) <= tol && rel_s.a > 0.0) {
                // Tangential contact at the start: the boundary arc activates
                // directly. This is a policy switch, not a solved constraint
                // junction, so it is not logged.
                activate_disk(rel_s, ts);
                return;
            }
        }

        auto b_excess = [&](double t) { return rel_of(t).b - sc.spec.D; };
        const int grid = std::max(2000, static_cast<int>(200 * (sc.tf - ts)));
        const auto t_hit = first_upcrossing(b_excess, ts, sc.tf, grid);
        if (!t_hit) {
            out.trajectory.push({trim(proposal, ts, sc.tf), mode});
            return;
        }

        // Seam at the closest approach: the remainder of the proposal is
        // replaced by a disk-entry junction solve.
        auto rr_of = [&](double t) {
            const RelativeState rel = rel_of(t);
            return dot(rel.r, rel.rdot);
        };
        double t_m = ts;
        if (rr_of(ts) < 0.0) {
            try {
                t_m = detect_event(rr_of, ts, *t_hit);
            } catch (const NoEventError&) {
                t_m = ts;
            }
        }

        if (t_m > ts + 1e-9) out.trajectory.push({trim(proposal, ts, t_m), mode});

        JunctionContext ctx;
        ctx.x0 = proposal.state(t_m);
        ctx.t0 = t_m;
        ctx.ref = sc.reference;
        ctx.spec = sc.spec;
        ctx.formula = sc.solver.mu_dot_formula;
        const SolverSettings settings = solver_settings(sc);

        // Candidate roots from the heuristic guess plus a "braking" guess
        // (come to rest tangentially on the boundary along the current
        // velocity direction). Only roots whose approach cubic stays inside
        // the disk are admissible.
        const RelativeState rel_m = rel_of(t_m);
        std::optional<DiskJunctionSolution> best;
        int best_s = 1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int s : candidate_chiralities()) {
            ctx.chirality = s;
            std::vector<std::optional<DiskJunctionUnknowns>> guesses;
            guesses.push_back(std::nullopt); // heuristic built by the solver
            if (auto brake = braking_guess(rel_m, t_m)) guesses.push_back(brake);
            if (auto mom = momentum_guess_for(rel_m, t_m, sc.spec.D))
                guesses.push_back(mom);
            for (const auto& guess : guesses) {
                auto sol = guess ? bmc::solve_disk_junction(ctx, *guess, settings)
                                 : bmc::solve_disk_junction(ctx, settings);
                if (!sol) continue;
                if (!pre_arc_contained(sol->arcs.pre, t_m,
                                       std::min(sol->unknowns.t1, sc.tf)))
                    continue;
                const double cost = disk_plan_cost(*sol);
                if (cost < best_cost
                    || (cost == best_cost && s > best_s && best)) {
                    best = sol;
                    best_s = s;
                    best_cost = cost;
                }
            }
        }
        if (!best) {
            // No stationary junction has a contained approach. The constrained
            // optimum then sits on the boundary of the feasible set: keep
            // control continuity at the attachment and pick the entry time
            // that minimizes energy among contained approach cubics. The
            // tangential control-rate condition is dropped; its residual is
            // reported honestly on the logged record.
            auto fb = attachment_fallback(ctx, rel_m, t_m);
            if (!fb)
                throw SolverFailure(
                    "disk-boundary entry junction: no contained solution found");
            best = fb->first;
            best_s = fb->second;
        }

        const auto& u = best->unknowns;
        if (u.t1 >= sc.tf - 1e-9) {
            // The tangential contact falls beyond the horizon; only the
            // boundary-approach cubic is executed (no activation to log).
            out.trajectory.push({trim(best->arcs.pre, t_m, sc.tf), SegmentMode::Cubic});
            return;
        }
        out.trajectory.push({best->arcs.pre, SegmentMode::Cubic});
        JunctionRecord rec;
        rec.t = u.t1;
        rec.kind = "disk-entry";
        rec.residual_norm = best->residual_norm;
        rec.gap = best->gap;
        rec.b_entry = sc.spec.D;
        rec.a = u.a;
        rec.kappa = 0.0;
        rec.chirality = best_s;
        rec.udot_q_residual = best->udot_q_residual;
        log_junction(rec);

        out.trajectory.push({DiskArc(sc.spec.D, u.a, u.entry_angle, best_s,
                                     sc.reference, u.t1, sc.tf),
                             SegmentMode::Disk});
    }

    // Solves the two control-continuity components of the disk-entry residual
    // for (entry_angle, a) at a fixed attachment time t1.
    std::optional<DiskJunctionUnknowns> continuity_attach(const JunctionContext& ctx,
                                                          double t1, double th0,
                                                          double a0) const {
        double th = th0;
        double a = std::max(a0, 1e-6);
        for (int it = 0; it < 60; ++it) {
            std::array<double, 3> r, ra, rb;
            const double h = 1e-7 * std::max(1.0, std::abs(th));
            const double ha = 1e-7 * std::max(1.0, a);
            try {
                r = disk_entry_residual({th, a, t1}, ctx);
                ra = disk_entry_residual({th + h, a, t1}, ctx);
                rb = disk_entry_residual({th, a + ha, t1}, ctx);
            } catch (const std::exception&) {
                return std::nullopt;
            }
            if (std::hypot(r[0], r[1]) <= 1e-10 * std::max(1.0, a * a))
                return DiskJunctionUnknowns{th, a, t1};
            const double J00 = (ra[0] - r[0]) / h, J01 = (rb[0] - r[0]) / ha;
            const double J10 = (ra[1] - r[1]) / h, J11 = (rb[1] - r[1]) / ha;
            const double det = J00 * J11 - J01 * J10;
            if (!(std::abs(det) > 1e-14)) return std::nullopt;
            const double dth = (-r[0] * J11 + r[1] * J01) / det;
            const double da = (-J00 * r[1] + J10 * r[0]) / det;
            double alpha = 1.0;
            while (a + alpha * da < 1e-6 && alpha > 1e-6) alpha *= 0.5;
            th += alpha * dth;
            a += alpha * da;
            if (!std::isfinite(th) || !std::isfinite(a)) return std::nullopt;
        }
        return std::nullopt;
    }

    // Energy-minimal control-continuous boundary attachment over a grid of
    // entry times, restricted to contained approach cubics. Used when the
    // full stationarity system has no contained root.
    std::optional<std::pair<DiskJunctionSolution, int>> attachment_fallback(
        JunctionContext ctx, const RelativeState& rel, double t_m) const {
        const double D = ctx.circle_radius();
        std::optional<std::pair<DiskJunctionSolution, int>> out;
        double best_cost = std::numeric_limits<double>::infinity();
        const double t_hi = sc.tf + std::max(1.0, 0.25 * (sc.tf - t_m));
        const int n = 120;
        for (int s : candidate_chiralities()) {
            ctx.chirality = s;
            std::optional<DiskJunctionUnknowns> warm;
            for (int k = 1; k <= n; ++k) {
                const double t1 = t_m + (t_hi - t_m) * k / n;
                const double th0 = warm ? warm->entry_angle
                                        : std::atan2(rel.r.y, rel.r.x)
                                              + s * rel.a * (t1 - t_m) / D;
                const double a0 = warm ? warm->a : std::max(rel.a, 1e-3);
                auto u = continuity_attach(ctx, t1, th0, a0);
                if (!u) {
                    warm.reset();
                    continue;
                }
                warm = u;
                try {
                    DiskJunctionArcs arcs = disk_junction_arcs(*u, ctx);
                    if (!pre_arc_contained(arcs.pre, t_m, std::min(u->t1, sc.tf)))
                        continue;
                    const auto res = disk_entry_residual(*u, ctx);
                    DiskJunctionSolution sol{*u, std::move(arcs),
                                             std::hypot(res[0], res[1]), 0, 0.0,
                                             res[2], SolveStatus::Converged};
                    sol.gap = junction_gap(sol.arcs.pre.control(u->t1),
                                           sol.arcs.post.control(u->t1));
                    const double cost = disk_plan_cost(sol);
                    if (cost < best_cost) {
                        best_cost = cost;
                        out = {std::move(sol), s};
                    }
                } catch (const std::exception&) {
                    continue;
                }
            }
        }
        return out;
    }

    double disk_plan_cost(const DiskJunctionSolution& sol) const {
        const double t1 = sol.unknowns.t1;
        double e = sol.arcs.pre.energy(sol.arcs.pre.t_start(), std::min(t1, sc.tf));
        if (t1 >= sc.tf) return e;
        DiskArc ride(sc.spec.D, sol.unknowns.a, sol.unknowns.entry_angle,
                     sol.arcs.post.chirality(), sc.reference, t1, sc.tf);
        return e + ride.energy(t1, sc.tf);
    }

    void activate_disk(const RelativeState& rel, double t) {
        const int s = momentum_chirality(rel);
        out.trajectory.push({DiskArc(sc.spec.D, rel.a, std::atan2(rel.r.y, rel.r.x),
                                     s, sc.reference, t, sc.tf),
                             SegmentMode::Disk});
    }

    static UnconstrainedArc trim(const UnconstrainedArc& arc, double lo, double hi) {
        const AgentState x = arc.state(lo);
        return UnconstrainedArc::from_state_control(x, arc.control(lo),
                                                    arc.control_rate(), lo, hi);
    }
};

} // namespace

AgentResult plan_agent(const AgentState& x0, const Scenario& scenario) {
    Planner planner{scenario, {}};
    planner.plan(x0);
    planner.out.energy = planner.out.trajectory.energy();
    return std::move(planner.out);
}

namespace {

ReferenceTrajectory cubic_as_reference(const UnconstrainedArc& arc) {
    // Re-expand the local-time cubic p(t - t0) in global time.
    const double t0 = arc.t_start();
    const AgentState x = arc.state(t0);
    const Vec2 u = arc.control(t0);
    const Vec2 j = arc.control_rate();
    auto axis = [&](double p, double v, double a2, double j6) {
        const double c3 = j6 / 6.0;
        const double c2 = a2 / 2.0 - 3.0 * c3 * t0;
        const double c1 = v - 2.0 * (a2 / 2.0) * t0 + 3.0 * c3 * t0 * t0;
        const double c0 = p - v * t0 + (a2 / 2.0) * t0 * t0 - c3 * t0 * t0 * t0;
        return std::array<double, 4>{c0, c1, c2, c3};
    };
    return ReferenceTrajectory(axis(x.p.x, x.v.x, u.x, j.x),
                               axis(x.p.y, x.v.y, u.y, j.y));
}

std::optional<double> first_separation_violation(const Trajectory& ti,
                                                const Trajectory& tj, double R,
                                                double t0, double tf, int grid) {
    // Same tolerance as the separation monitor: a dip below 2R of at most
    // 1e-9 (absolute, scaled by the contact distance) is not a violation.
    const double d_min = 2.0 * R - 1e-9 * std::max(1.0, 2.0 * R);
    auto viol = [&](double t) {
        return d_min * d_min - norm_sq(ti.state(t).p - tj.state(t).p);
    };
    return first_upcrossing(viol, t0, tf, grid);
}

void handle_collisions(const Scenario& sc, std::vector<AgentResult>& agents) {
    if (agents.size() < 2) return;
    const int grid = std::max(4000, static_cast<int>(400 * (sc.tf - sc.t0)));
    for (std::size_t i = 0; i < agents.size(); ++i) {
        for (std::size_t j = i + 1; j < agents.size(); ++j) {
            if (collision_constraint(sc.agents[i], sc.agents[j], sc.R) > 0.0)
                throw InfeasibleScenario("agents start closer than 2R");
            auto t_v = first_separation_violation(agents[i].trajectory,
                                                  agents[j].trajectory, sc.R,
                                                  sc.t0, sc.tf, grid);
            if (!t_v) continue;

            // The lower-index agent keeps its plan; it must be on a single
            // cubic arc for the disk machinery to treat it as a reference.
            const auto& segs = agents[i].trajectory.segments();
            if (segs.size() != 1
                || !std::holds_alternative<UnconstrainedArc>(segs.front().arc)) {
                throw InfeasibleScenario(
                    "collision constraint active while the other agent is not on "
                    "a cubic arc (unsupported configuration)");
            }
            const auto& other = std::get<UnconstrainedArc>(segs.front().arc);

            JunctionContext ctx;
            ctx.x0 = sc.agents[j];
            ctx.t0 = sc.t0;
            ctx.ref = cubic_as_reference(other);
            ctx.spec = sc.spec;
            ctx.formula = sc.solver.mu_dot_formula;
            ctx.disk_radius = 2.0 * sc.R;
            SolverSettings settings = solver_settings(sc);

            // Candidate roots; only those whose approach cubic keeps the
            // pairwise distance at or above 2R are admissible.
            auto pre_separated = [&](const UnconstrainedArc& pre, double hi) {
                const int n = 400;
                for (int k = 0; k <= n; ++k) {
                    const double t = sc.t0 + (hi - sc.t0) * k / n;
                    const double d =
                        norm(pre.state(t).p - ctx.ref.position(t));
                    if (2.0 * sc.R - d > 1e-9 * std::max(1.0, 2.0 * sc.R))
                        return false;
                }
                return true;
            };
            const RelativeState rel0 =
                relative_state(sc.agents[j], ctx.ref, sc.t0);
            const auto brake = braking_guess_for(rel0, sc.t0, 2.0 * sc.R);

            std::optional<DiskJunctionSolution> best;
            int best_s = 1;
            double best_cost = std::numeric_limits<double>::infinity();
            for (int s : {1, -1}) {
                if (sc.solver.chirality != 0 && sc.solver.chirality != s) continue;
                ctx.chirality = s;
                for (int which : {0, 1}) {
                    if (which == 1 && !brake) continue;
                    auto sol = which == 0 ? solve_disk_junction(ctx, settings)
                                          : solve_disk_junction(ctx, *brake,
                                                                settings);
                    if (!sol) continue;
                    if (!pre_separated(sol->arcs.pre,
                                       std::min(sol->unknowns.t1, sc.tf)))
                        continue;
                    double cost = sol->arcs.pre.energy(
                        sc.t0, std::min(sol->unknowns.t1, sc.tf));
                    if (sol->unknowns.t1 < sc.tf) {
                        DiskArc ride(2.0 * sc.R, sol->unknowns.a,
                                     sol->unknowns.entry_angle, s, ctx.ref,
                                     sol->unknowns.t1, sc.tf);
                        cost += ride.energy(sol->unknowns.t1, sc.tf);
                    }
                    if (cost < best_cost) {
                        best = sol;
                        best_s = s;
                        best_cost = cost;
                    }
                }
            }
            if (!best)
                throw SolverFailure(
                    "collision-avoidance junction: no separated solution found");

            const auto& u = best->unknowns;
            AgentResult replanned;
            if (u.t1 >= sc.tf - 1e-9) {
                // Tangential contact beyond the horizon: only the approach
                // cubic is executed.
                const AgentState xs = best->arcs.pre.state(sc.t0);
                replanned.trajectory.push(
                    {UnconstrainedArc::from_state_control(
                         xs, best->arcs.pre.control(sc.t0),
                         best->arcs.pre.control_rate(), sc.t0, sc.tf),
                     SegmentMode::CollisionCubic});
            } else {
                replanned.trajectory.push(
                    {best->arcs.pre, SegmentMode::CollisionCubic});
                replanned.trajectory.push(
                    {DiskArc(2.0 * sc.R, u.a, u.entry_angle, best_s, ctx.ref,
                             u.t1, sc.tf),
                     SegmentMode::CollisionDisk});
                JunctionRecord rec;
                rec.t = u.t1;
                rec.kind = "collision-entry";
                rec.residual_norm = best->residual_norm;
                rec.gap = best->gap;
                rec.b_entry = 2.0 * sc.R;
                rec.a = u.a;
                rec.kappa = 0.0;
                rec.chirality = best_s;
                rec.udot_q_residual = best->udot_q_residual;
                replanned.junctions.push_back(rec);
            }
            replanned.energy = replanned.trajectory.energy();
            agents[j] = std::move(replanned);

            auto still = first_separation_violation(agents[i].trajectory,
                                                    agents[j].trajectory, sc.R,
                                                    sc.t0, sc.tf, grid);
            if (still)
                throw SolverFailure(
                    "separation violated after collision-avoidance replanning");
        }
    }
}

void evaluate_monitors(const Scenario& sc, const std::vector<AgentResult>& agents,
                       MonitorReport& mon) {
    const int dense = std::max(4000, static_cast<int>(400 * (sc.tf - sc.t0)));

    for (const AgentResult& ar : agents) {
        // Continuity of every logged junction.
        for (const JunctionRecord& rec : ar.junctions) {
            const double u_mag = norm(ar.trajectory.control(rec.t));
            const double ng = rec.gap / std::max(1.0, u_mag * u_mag);
            mon.max_normalized_gap = std::max(mon.max_normalized_gap, ng);
            if (ng > 1e-6) mon.continuity_ok = false;
        }

        // Feasibility and containment on a dense grid.
        bool entered = false;
        for (int k = 0; k <= dense; ++k) {
            const double t = sc.t0 + (sc.tf - sc.t0) * k / dense;
            const RelativeState rel =
                relative_state(ar.trajectory.state(t), sc.reference, t);
            const double g = eval_g(rel, sc.spec).second;
            mon.max_g = std::max(mon.max_g, g);
            if (g > kFeasTol * surface_scale(rel)) mon.feasibility_ok = false;
            if (!entered && rel.b <= sc.spec.D) entered = true;
            if (entered) {
                const double excess = rel.b - sc.spec.D;
                mon.containment_max_excess =
                    std::max(mon.containment_max_excess, excess);
                if (excess > 1e-9) mon.containment_ok = false;
            }
        }

        // Lemma-2 arrival for every completed spiral.
        for (const Segment& seg : ar.trajectory.segments()) {
            if (!std::holds_alternative<SpiralArc>(seg.arc)) continue;
            const auto& sp = std::get<SpiralArc>(seg.arc);
            const double t_exit = sp.time_at_radius(sc.spec.D);
            if (t_exit > sc.tf - 1e-9) continue; // truncated spiral, no arrival
            const double expected = (sp.entry_radius() - sc.spec.D)
                                    / (sp.a() * sp.kappa());
            auto b_excess = [&](double t) {
                return norm(ar.trajectory.state(t).p - sc.reference.position(t))
                       - sc.spec.D;
            };
            const double hi = std::min(sc.tf, t_exit + std::max(1e-3, 0.01 * expected));
            double measured;
            try {
                measured = detect_event(b_excess, sp.t_start(), hi) - sp.t_start();
            } catch (const NoEventError&) {
                mon.arrival_ok = false;
                continue;
            }
            const double rel_err = std::abs(measured - expected) / expected;
            mon.arrival_max_rel_err = std::max(mon.arrival_max_rel_err, rel_err);
            if (rel_err > 1e-6) mon.arrival_ok = false;
        }
    }

    // Pairwise separation.
    if (agents.size() >= 2) {
        for (std::size_t i = 0; i < agents.size(); ++i) {
            for (std::size_t j = i + 1; j < agents.size(); ++j) {
                for (int k = 0; k <= dense; ++k) {
                    const double t = sc.t0 + (sc.tf - sc.t0) * k / dense;
                    const double d = norm(agents[i].trajectory.state(t).p
                                          - agents[j].trajectory.state(t).p);
                    mon.min_separation = std::min(mon.min_separation, d);
                }
            }
        }
        if (mon.min_separation < 2.0 * sc.R - 1e-9) mon.separation_ok = false;
    }
}

} // namespace

SimResult run(const Scenario& scenario) {
    scenario.validate();
    SimResult result;
    for (const AgentState& x0 : scenario.agents)
        result.agents.push_back(plan_agent(x0, scenario));

    handle_collisions(scenario, result.agents);

    // Sample grid plus every segment boundary.
    std::vector<double> times;
    const double span = scenario.tf - scenario.t0;
    const int n = std::max(1, static_cast<int>(std::ceil(span * scenario.sample_rate)));
    for (int k = 0; k <= n; ++k)
        times.push_back(k == n ? scenario.tf : scenario.t0 + span * k / n);
    for (const AgentResult& ar : result.agents) {
        for (const Segment& seg : ar.trajectory.segments()) {
            times.push_back(arc_t_start(seg.arc));
            times.push_back(arc_t_end(seg.arc));
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return std::abs(a - b) < kTimeTol; }),
                times.end());

    for (double t : times) {
        for (std::size_t i = 0; i < result.agents.size(); ++i) {
            const auto& traj = result.agents[i].trajectory;
            SampleRow row;
            row.t = t;
            row.agent = static_cast<int>(i);
            row.x = traj.state(t);
            row.u = traj.control(t);
            row.mode = traj.segment_at(t).mode;
            row.g = eval_g(relative_state(row.x, scenario.reference, t),
                           scenario.spec)
                        .second;
            result.samples.push_back(row);
        }
    }

    evaluate_monitors(scenario, result.agents, result.monitors);
    return result;
}

} // namespace bmc
