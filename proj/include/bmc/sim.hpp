#ifndef BMC_SIM_HPP
#define BMC_SIM_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bmc/arcs.hpp"
#include "bmc/constraints.hpp"
#include "bmc/core.hpp"
#include "bmc/errors.hpp"

namespace bmc {

enum class SegmentMode {
    Cubic,          // unconstrained arc feeding a junction
    Coast,          // unconstrained arc with no constraint interaction
    Spiral,         // Case-I constrained arc
    Disk,           // Case-II boundary arc
    ExitCubic,      // continuity-matched continuation after a Lemma-4 exit
    CollisionCubic, // unconstrained arc feeding a collision-disk junction
    CollisionDisk,  // circle ride at 2R about another agent
};

const char* mode_name(SegmentMode mode);

struct Segment {
    Arc arc;
    SegmentMode mode;
};

/// Piecewise trajectory; segments tile the horizon in increasing time.
class Trajectory {
public:
    void push(Segment seg) { segments_.push_back(std::move(seg)); }

    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }
    double t_start() const { return arc_t_start(segments_.front().arc); }
    double t_end() const { return arc_t_end(segments_.back().arc); }

    /// Segment active at t; boundary instants resolve to the later segment.
    const Segment& segment_at(double t) const;

    AgentState state(double t) const;
    Vec2 control(double t) const;
    double energy() const;

private:
    std::vector<Segment> segments_;
};

struct SolverConfig {
    double tol = 1e-9;
    int max_iter = 100;
    MuDotFormula mu_dot_formula = MuDotFormula::Paper;
    int chirality = 0; // +1 / -1, or 0 for auto (lower energy wins, ties to +1)
    std::uint64_t seed = 0;
};

/// Behavior of an unconstrained agent inside the disk; relative coast
/// (u = p_ddot_r) is the only policy currently implemented.
enum class InDiskPolicy { RelativeCoast };

struct Scenario {
    std::vector<AgentState> agents;
    ReferenceTrajectory reference;
    BarycentricSpec spec;
    double R = 0.1;     // agent radius, m
    double t0 = 0.0;
    double tf = 1.0;
    SolverConfig solver;
    double sample_rate = 100.0; // samples per unit time
    InDiskPolicy policy = InDiskPolicy::RelativeCoast;

    void validate() const;
};

struct JunctionRecord {
    double t = 0.0;
    std::string kind; // barycentric-entry | disk-entry | collision-entry | case-switch
    double residual_norm = 0.0;
    double gap = 0.0;
    // Entry parameters kept for re-verification.
    double b_entry = 0.0;
    double a = 0.0;
    double kappa = 0.0;
    int chirality = 0;
    double udot_q_residual = 0.0; // disk/collision junctions only
};

struct SampleRow {
    double t = 0.0;
    int agent = 0;
    AgentState x;
    Vec2 u;
    double g = 0.0;
    SegmentMode mode = SegmentMode::Coast;
};

struct MonitorReport {
    bool arrival_ok = true;
    double arrival_max_rel_err = 0.0;
    bool containment_ok = true;
    double containment_max_excess = 0.0;
    bool continuity_ok = true;
    double max_normalized_gap = 0.0;
    bool feasibility_ok = true;
    double max_g = -std::numeric_limits<double>::infinity();
    bool separation_ok = true;
    double min_separation = std::numeric_limits<double>::infinity();

    bool all_ok() const {
        return arrival_ok && containment_ok && continuity_ok && feasibility_ok
               && separation_ok;
    }
};

struct AgentResult {
    Trajectory trajectory;
    std::vector<JunctionRecord> junctions;
    double energy = 0.0;
};

struct SimResult {
    std::vector<AgentResult> agents;
    std::vector<SampleRow> samples;
    MonitorReport monitors;
};

/// (2R)^2 - ||p_i - p_j||^2; feasible iff <= 0.
double collision_constraint(const AgentState& agent_i, const AgentState& agent_j,
                            double R);

/// Refines a sign change of the predicate on [lo, hi] to |dt| <= 1e-10.
/// Throws NoEventError when the predicate does not change sign.
double detect_event(const std::function<double(double)>& predicate, double lo,
                    double hi);

/// Plans one agent against the scenario reference (no collision handling).
AgentResult plan_agent(const AgentState& x0, const Scenario& scenario);

/// Plans all agents, applies pairwise collision handling, samples the result,
/// and evaluates the Lemma-2/3, continuity, feasibility, and separation
/// monitors.
SimResult run(const Scenario& scenario);

} // namespace bmc

#endif
