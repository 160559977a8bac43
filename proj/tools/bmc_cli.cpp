// Command-line front end: plan | simulate | oracle | verify | adjudicate.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bmc/errors.hpp"
#include "bmc/oracle.hpp"
#include "bmc/scenario_io.hpp"
#include "bmc/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::vector<std::string> scenarios;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int jobs = 1;
    int mesh = 200;
};

void write_outputs(const bmc::Scenario& sc, const bmc::SimResult& result,
                   const std::string& out_dir) {
    fs::create_directories(out_dir);
    bmc::write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(),
                              result.samples);
    bmc::write_text_file((fs::path(out_dir) / "summary.json").string(),
                         bmc::summary_json(sc, result).dump(2) + "\n");
}

int cmd_run(const Options& opt) {
    bmc::Scenario sc = bmc::load_scenario(opt.scenarios.front());
    sc.solver.seed = opt.seed;
    const bmc::SimResult result = bmc::run(sc);
    write_outputs(sc, result, opt.out_dir);
    if (!result.monitors.all_ok()) {
        std::cerr << "monitor failure: see summary.json\n";
        return 2;
    }
    std::cout << "ok: " << result.agents.size() << " agent(s), outputs in "
              << opt.out_dir << "\n";
    return 0;
}

int cmd_oracle(const Options& opt) {
    bmc::Scenario sc = bmc::load_scenario(opt.scenarios.front());
    sc.solver.seed = opt.seed;
    const bmc::Transcription tr = bmc::transcribe(sc, opt.mesh);
    if (tr.infeasible_at_start)
        throw bmc::InfeasibleScenario(
            "initial state violates the constraint: g = "
            + bmc::format_g17(tr.g0));
    const bmc::OracleResult res = bmc::solve_oracle(tr);
    if (!res.converged)
        throw bmc::SolverFailure("oracle did not converge: max violation "
                                 + bmc::format_g17(res.max_violation));
    json doc = {{"mesh", opt.mesh},
                {"energy", res.energy},
                {"max_violation", res.max_violation},
                {"grad_norm", res.grad_norm},
                {"outer_rounds", res.outer_rounds}};
    fs::create_directories(opt.out_dir);
    bmc::write_text_file((fs::path(opt.out_dir) / "oracle.json").string(),
                         doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_verify(const Options& opt) {
    bmc::Scenario sc = bmc::load_scenario(opt.scenarios.front());
    sc.solver.seed = opt.seed;
    const std::string csv_path = (fs::path(opt.out_dir) / "trajectory.csv").string();
    const std::string sum_path = (fs::path(opt.out_dir) / "summary.json").string();
    const std::string stored_csv = bmc::read_text_file(csv_path);
    const std::string stored_sum = bmc::read_text_file(sum_path);

    const bmc::SimResult result = bmc::run(sc);
    const std::string fresh_csv = bmc::trajectory_csv(result.samples);
    const std::string fresh_sum = bmc::summary_json(sc, result).dump(2) + "\n";

    bool ok = true;
    if (fresh_csv != stored_csv) {
        std::cerr << "verify: trajectory.csv does not reproduce bit-identically\n";
        ok = false;
    }
    if (fresh_sum != stored_sum) {
        std::cerr << "verify: summary.json does not reproduce bit-identically\n";
        ok = false;
    }
    if (!result.monitors.all_ok()) {
        std::cerr << "verify: monitor invariants violated\n";
        ok = false;
    }
    for (const auto& agent : result.agents)
        for (const auto& rec : agent.junctions)
            if (rec.gap > 1e-6) {
                std::cerr << "verify: junction gap " << rec.gap << " at t = "
                          << rec.t << " exceeds 1e-6\n";
                ok = false;
            }
    if (!ok) return 2;
    std::cout << "verify: ok\n";
    return 0;
}

int cmd_adjudicate(const Options& opt) {
    std::vector<bmc::Scenario> family;
    for (const std::string& path : opt.scenarios) {
        bmc::Scenario sc = bmc::load_scenario(path);
        sc.solver.seed = opt.seed;
        family.push_back(std::move(sc));
    }
    const bmc::MuDotReport report = bmc::adjudicate_mudot(family, opt.mesh);
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"name", r.name},
                        {"E_paper", r.E_paper},
                        {"E_derived", r.E_derived},
                        {"E_oracle", r.E_oracle},
                        {"res1_paper", r.res1_paper},
                        {"res2_paper", r.res2_paper},
                        {"res1_derived", r.res1_derived},
                        {"res2_derived", r.res2_derived},
                        {"a", r.a},
                        {"b_entry", r.b_entry},
                        {"kappa", r.kappa}});
    json doc = {{"rows", rows},
                {"paper_wins", report.paper_wins},
                {"derived_wins", report.derived_wins},
                {"verdict", report.verdict}};
    fs::create_directories(opt.out_dir);
    bmc::write_text_file((fs::path(opt.out_dir) / "adjudication.json").string(),
                         doc.dump(2) + "\n");
    std::cout << doc.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barycentric-constraint trajectory planner and verifier"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--seed", opt.seed, "RNG seed for multi-start perturbations");
    app.add_option("--jobs", opt.jobs, "max concurrent scenario solves");
    app.add_option("--out", opt.out_dir, "output directory");

    auto add_cmd = [&](const char* name, const char* desc, bool many) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->fallthrough(); // global flags may follow the subcommand
        auto* o = sub->add_option("scenario", opt.scenarios, "scenario JSON file(s)");
        if (many)
            o->expected(1, -1)->required();
        else
            o->expected(1)->required();
        return sub;
    };
    CLI::App* plan = add_cmd("plan", "solve junctions and write CSV + summary", false);
    CLI::App* simulate = add_cmd("simulate", "run the full simulation", false);
    CLI::App* oracle = add_cmd("oracle", "direct-transcription oracle solve", false);
    oracle->add_option("--mesh", opt.mesh, "number of mesh nodes (M >= 10)");
    CLI::App* verify = add_cmd("verify", "re-check stored outputs", false);
    CLI::App* adjud = add_cmd("adjudicate", "mu_dot formula experiment", true);
    adjud->add_option("--mesh", opt.mesh, "oracle mesh size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 3;
    }

    try {
        if (plan->parsed() || simulate->parsed()) return cmd_run(opt);
        if (oracle->parsed()) return cmd_oracle(opt);
        if (verify->parsed()) return cmd_verify(opt);
        if (adjud->parsed()) return cmd_adjudicate(opt);
    } catch (const bmc::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bmc::InfeasibleScenario& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const bmc::SolverFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 3;
}
