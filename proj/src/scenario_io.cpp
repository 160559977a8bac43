#include "bmc/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bmc/errors.hpp"

namespace bmc {

namespace {

using nlohmann::json;

void require_object(const json& j, const char* where,
                    std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw SchemaError(std::string(where) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) { known = true; break; }
        if (!known)
            throw SchemaError(std::string(where) + ": unknown key \"" + key + "\"");
    }
}

double get_number(const json& j, const char* where) {
    if (!j.is_number())
        throw SchemaError(std::string(where) + ": expected a number");
    return j.get<double>();
}

Vec2 get_vec2(const json& j, const char* where) {
    if (!j.is_array() || j.size() != 2)
        throw SchemaError(std::string(where) + ": expected [x, y]");
    return {get_number(j[0], where), get_number(j[1], where)};
}

} // namespace

Scenario parse_scenario(const json& doc) {
    require_object(doc, "scenario",
                   {"agents", "reference", "D", "kappa", "R", "horizon", "solver",
                    "output"});
    for (const char* key : {"agents", "reference", "D", "kappa", "horizon"})
        if (!doc.contains(key))
            throw SchemaError(std::string("scenario: missing key \"") + key + "\"");

    Scenario sc;

    const json& agents = doc["agents"];
    if (!agents.is_array() || agents.empty())
        throw SchemaError("agents: expected a non-empty array");
    for (const json& a : agents) {
        require_object(a, "agents[]", {"p", "v"});
        if (!a.contains("p") || !a.contains("v"))
            throw SchemaError("agents[]: need both \"p\" and \"v\"");
        sc.agents.push_back({get_vec2(a["p"], "agents[].p"),
                             get_vec2(a["v"], "agents[].v")});
    }

    const json& ref = doc["reference"];
    require_object(ref, "reference", {"c0", "c1", "c2", "c3"});
    std::array<double, 4> cx{}, cy{};
    for (int i = 0; i < 4; ++i) {
        const std::string key = "c" + std::to_string(i);
        if (!ref.contains(key))
            throw SchemaError("reference: missing key \"" + key + "\"");
        const Vec2 c = get_vec2(ref[key], "reference.c*");
        cx[i] = c.x;
        cy[i] = c.y;
    }
    sc.reference = ReferenceTrajectory(cx, cy);

    sc.spec.D = get_number(doc["D"], "D");
    sc.spec.kappa = get_number(doc["kappa"], "kappa");
    if (doc.contains("R")) sc.R = get_number(doc["R"], "R");

    const json& horizon = doc["horizon"];
    require_object(horizon, "horizon", {"t0", "tf"});
    if (!horizon.contains("t0") || !horizon.contains("tf"))
        throw SchemaError("horizon: need both \"t0\" and \"tf\"");
    sc.t0 = get_number(horizon["t0"], "horizon.t0");
    sc.tf = get_number(horizon["tf"], "horizon.tf");

    if (doc.contains("solver")) {
        const json& solver = doc["solver"];
        require_object(solver, "solver",
                       {"tol", "max_iter", "mu_dot_formula", "chirality"});
        if (solver.contains("tol"))
            sc.solver.tol = get_number(solver["tol"], "solver.tol");
        if (solver.contains("max_iter")) {
            if (!solver["max_iter"].is_number_integer())
                throw SchemaError("solver.max_iter: expected an integer");
            sc.solver.max_iter = solver["max_iter"].get<int>();
        }
        if (solver.contains("mu_dot_formula")) {
            const json& f = solver["mu_dot_formula"];
            if (f == "paper")
                sc.solver.mu_dot_formula = MuDotFormula::Paper;
            else if (f == "derived")
                sc.solver.mu_dot_formula = MuDotFormula::Derived;
            else
                throw SchemaError(
                    "solver.mu_dot_formula: expected \"paper\" or \"derived\"");
        }
        if (solver.contains("chirality")) {
            const json& c = solver["chirality"];
            if (c == "+1")
                sc.solver.chirality = 1;
            else if (c == "-1")
                sc.solver.chirality = -1;
            else if (c == "auto")
                sc.solver.chirality = 0;
            else
                throw SchemaError(
                    "solver.chirality: expected \"+1\", \"-1\", or \"auto\"");
        }
    }

    if (doc.contains("output")) {
        const json& output = doc["output"];
        require_object(output, "output", {"sample_rate"});
        if (output.contains("sample_rate"))
            sc.sample_rate = get_number(output["sample_rate"], "output.sample_rate");
    }

    try {
        sc.spec.validate();
    } catch (const std::domain_error& e) {
        throw SchemaError(e.what());
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_scenario(doc);
}

nlohmann::json scenario_json(const Scenario& sc) {
    json doc;
    for (const AgentState& a : sc.agents)
        doc["agents"].push_back(
            {{"p", {a.p.x, a.p.y}}, {"v", {a.v.x, a.v.y}}});
    const auto& cx = sc.reference.coeffs_x();
    const auto& cy = sc.reference.coeffs_y();
    for (int i = 0; i < 4; ++i)
        doc["reference"]["c" + std::to_string(i)] = {cx[i], cy[i]};
    doc["D"] = sc.spec.D;
    doc["kappa"] = sc.spec.kappa;
    doc["R"] = sc.R;
    doc["horizon"] = {{"t0", sc.t0}, {"tf", sc.tf}};
    doc["solver"] = {
        {"tol", sc.solver.tol},
        {"max_iter", sc.solver.max_iter},
        {"mu_dot_formula",
         sc.solver.mu_dot_formula == MuDotFormula::Paper ? "paper" : "derived"},
        {"chirality", sc.solver.chirality == 0
                          ? "auto"
                          : (sc.solver.chirality > 0 ? "+1" : "-1")}};
    doc["output"] = {{"sample_rate", sc.sample_rate}};
    return doc;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trajectory_csv(const std::vector<SampleRow>& rows) {
    std::ostringstream out;
    out << "t,agent_id,px,py,vx,vy,ux,uy,g_value,mode\n";
    for (const SampleRow& r : rows) {
        out << format_g17(r.t) << ',' << r.agent << ',' << format_g17(r.x.p.x)
            << ',' << format_g17(r.x.p.y) << ',' << format_g17(r.x.v.x) << ','
            << format_g17(r.x.v.y) << ',' << format_g17(r.u.x) << ','
            << format_g17(r.u.y) << ',' << format_g17(r.g) << ','
            << mode_name(r.mode) << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<SampleRow>& rows) {
    write_text_file(path, trajectory_csv(rows));
}

nlohmann::json summary_json(const Scenario& scenario, const SimResult& result) {
    json doc;
    doc["scenario"] = scenario_json(scenario);
    json junctions = json::array();
    for (std::size_t i = 0; i < result.agents.size(); ++i) {
        for (const JunctionRecord& rec : result.agents[i].junctions) {
            junctions.push_back({{"agent_id", static_cast<int>(i)},
                                 {"t", rec.t},
                                 {"kind", rec.kind},
                                 {"residual_norm", rec.residual_norm},
                                 {"gap", rec.gap},
                                 {"b_entry", rec.b_entry},
                                 {"a", rec.a},
                                 {"kappa", rec.kappa},
                                 {"chirality", rec.chirality},
                                 {"udot_q_residual", rec.udot_q_residual}});
        }
    }
    doc["junctions"] = junctions;
    json energies = json::array();
    for (const AgentResult& a : result.agents) energies.push_back(a.energy);
    doc["energy_per_agent"] = energies;
    const MonitorReport& m = result.monitors;
    doc["monitors"] = {{"arrival_ok", m.arrival_ok},
                       {"arrival_max_rel_err", m.arrival_max_rel_err},
                       {"containment_ok", m.containment_ok},
                       {"containment_max_excess", m.containment_max_excess},
                       {"continuity_ok", m.continuity_ok},
                       {"max_normalized_gap", m.max_normalized_gap},
                       {"feasibility_ok", m.feasibility_ok},
                       {"max_g", m.max_g},
                       {"separation_ok", m.separation_ok},
                       {"min_separation", m.min_separation},
                       {"all_ok", m.all_ok()}};
    return doc;
}

} // namespace bmc
