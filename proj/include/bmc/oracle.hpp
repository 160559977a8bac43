#ifndef BMC_ORACLE_HPP
#define BMC_ORACLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "bmc/core.hpp"
#include "bmc/sim.hpp"

namespace bmc {

/// Direct transcription of the minimum-energy problem on a uniform mesh of M
/// nodes. States are eliminated through the trapezoidal recursion
///   v_{k+1} = v_k + dt/2 (u_k + u_{k+1})
///   p_{k+1} = p_k + dt v_k + dt^2/4 (u_k + u_{k+1})
/// so the controls u_0..u_{M-1} are the only decision variables.
struct Transcription {
    int M = 0;
    double dt = 0.0;
    double t0 = 0.0;
    double tf = 0.0;
    AgentState x0;
    ReferenceTrajectory ref;
    BarycentricSpec spec;
    /// Optional pinned terminal state, enforced as an equality constraint;
    /// used to certify a specific plan rather than the free-endpoint optimum.
    std::optional<AgentState> terminal;
    bool infeasible_at_start = false;
    double g0 = 0.0;

    double node_time(int k) const { return t0 + dt * k; }
};

Transcription transcribe(const AgentState& x0, const ReferenceTrajectory& ref,
                         const BarycentricSpec& spec, double t0, double tf, int M);
Transcription transcribe(const Scenario& scenario, int M);

struct OracleSettings {
    double feas_tol = 1e-6;
    double grad_tol = 1e-6;
    int max_outer = 12;
    double rho0 = 10.0;
    int max_inner = 4000;
};

struct OracleResult {
    std::vector<Vec2> controls;
    double energy = 0.0;        // objective only, no penalty terms
    double max_violation = 0.0; // max over nodes of max(0, g_k)
    double grad_norm = 0.0;
    bool converged = false;
    int outer_rounds = 0;
};

/// Augmented-Lagrangian solve: penalty x10 per outer round (<= max_outer),
/// Barzilai-Borwein gradient descent with backtracking inside. The constraint
/// case at each node is frozen per outer round from the current trajectory.
OracleResult solve_oracle(const Transcription& tr, const OracleSettings& settings = {});

struct MuDotScenarioRow {
    std::string name;
    double E_paper = 0.0;
    double E_derived = 0.0;
    double E_oracle = 0.0;
    // mu-ODE residuals at the barycentric entry, mu = 0, the exact mu_ddot.
    double res1_paper = 0.0, res2_paper = 0.0;
    double res1_derived = 0.0, res2_derived = 0.0;
    double a = 0.0, b_entry = 0.0, kappa = 0.0;
};

struct MuDotReport {
    std::vector<MuDotScenarioRow> rows;
    int paper_wins = 0;
    int derived_wins = 0;
    std::string verdict; // "paper" | "derived" | "inconclusive"
};

/// Runs the oracle experiment on a family of barycentric-entry scenarios:
/// plans each under both mu_dot formulas, solves the free-endpoint oracle at
/// the given mesh, and scores each formula by closeness of its plan energy to
/// the oracle envelope (never-below within mesh tolerance).
MuDotReport adjudicate_mudot(const std::vector<Scenario>& family, int mesh,
                             const OracleSettings& settings = {});

} // namespace bmc

#endif
