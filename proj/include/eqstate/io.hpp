#pragma once

// JSON/CSV serialization and run manifests.

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eqstate/analysis.hpp"
#include "eqstate/inducing.hpp"
#include "eqstate/maps.hpp"
#include "eqstate/thermo.hpp"
#include "eqstate/zooming.hpp"

namespace eqstate {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);
// Finite numbers as JSON numbers, non-finite ones as strings.
json number(double x);

json map_to_json(const MapSpec& map);
MapSpec map_from_json(const json& j);
// "doubling", "lsv:alpha=1.5", "quadratic:c=-2", "tent:s=2", "json:path" or a
// path to a .json file.
MapSpec parse_map_argument(const std::string& arg);

json scheme_to_json(const MapSpec& map, const InducingScheme& s);
std::pair<MapSpec, InducingScheme> scheme_from_json(const json& j);

// "constant_one", "two_at_one", "gouezel" (with q), "table:1=2,3=1" or a JSON
// file {"counts": {"1": 2, ...}}.
LevelCounts parse_counts_argument(const std::string& arg, double q = 1.0);

// "geometric:t=1", "constant:c=0.5", "branch:0.2,-0.1", "json:path".
Potential parse_potential_argument(const std::string& arg);

json pressure_report_to_json(const PressureReport& r);
json zooming_report_to_json(const ZoomingReport& r);
json mass_to_json(const MassDistribution& m);
json tail_report_to_json(const TailReport& t, const std::vector<std::size_t>& at);

// n, count, weight, level_mass
std::string level_table_csv(const LevelCounts& counts, double h, std::size_t max_level);
// t, P, err, left_slope, right_slope
std::string curve_csv(const PressureCurve& c);
std::string ratio_table_csv(const std::vector<RatioRow>& rows);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> parameters;  // resolved, in declaration order
  std::string seed;                                               // empty when unused
  std::map<std::string, std::string> input_digests;               // path -> sha256
  double wall_seconds = 0.0;

  json to_json() const;
};

}  // namespace eqstate
