#ifndef BMC_SCENARIO_IO_HPP
#define BMC_SCENARIO_IO_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "bmc/sim.hpp"

namespace bmc {

/// Parses a scenario document; unknown keys anywhere raise SchemaError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

nlohmann::json scenario_json(const Scenario& scenario);

/// Serializes a double with 17 significant digits (round-trip exact).
std::string format_g17(double v);

/// CSV columns, in order: t, agent_id, px, py, vx, vy, ux, uy, g_value, mode.
std::string trajectory_csv(const std::vector<SampleRow>& rows);
void write_trajectory_csv(const std::string& path, const std::vector<SampleRow>& rows);

/// Summary document: junctions[] {t, kind, residual_norm, gap, ...},
/// per-agent energies, monitor verdicts.
nlohmann::json summary_json(const Scenario& scenario, const SimResult& result);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace bmc

#endif
