#include "eqstate/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "eqstate/errors.hpp"

namespace eqstate {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

json number(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

namespace {

double as_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
  }
  throw Error(ErrorKind::InvalidArgument, "expected a number in JSON input");
}

json formula_to_json(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::affine:
      return {{"kind", "affine"}, {"params", {{"slope", f.param(0)}, {"intercept", f.param(1)}}}};
    case FormulaKind::lsv_left:
      return {{"kind", "lsv_left"}, {"params", {{"alpha", f.param(0)}}}};
    case FormulaKind::lsv_right:
      return {{"kind", "lsv_right"}, {"params", json::object()}};
    case FormulaKind::quadratic:
      return {{"kind", "quadratic"}, {"params", {{"c", f.param(0)}}}};
    case FormulaKind::tent:
      return {{"kind", f.param(1) == 0.0 ? "tent_left" : "tent_right"}, {"params", {{"s", f.param(0)}}}};
    case FormulaKind::table:
      return {{"kind", "table"}, {"params", {{"xs", f.table_x()}, {"ys", f.table_y()}}}};
    case FormulaKind::composite:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "composite branches are not serializable; store the base map instead");
}

Formula formula_from_json(const std::string& kind, const json& p) {
  auto get = [&](const char* key) {
    if (!p.contains(key)) throw Error(ErrorKind::InvalidArgument, fmt::format("branch kind {} needs param {}", kind, key));
    return as_double(p.at(key));
  };
  if (kind == "affine") return Formula::affine(get("slope"), get("intercept"));
  if (kind == "lsv_left") return Formula::lsv_left(get("alpha"));
  if (kind == "lsv_right") return Formula::lsv_right();
  if (kind == "quadratic") return Formula::quadratic(get("c"));
  if (kind == "tent_left") return Formula::tent_left(get("s"));
  if (kind == "tent_right") return Formula::tent_right(get("s"));
  if (kind == "table") {
    return Formula::table(p.at("xs").get<std::vector<double>>(), p.at("ys").get<std::vector<double>>());
  }
  throw Error(ErrorKind::InvalidArgument, "unknown branch kind: " + kind);
}

// "name:key=value,key=value"
std::pair<std::string, std::map<std::string, double>> split_argument(const std::string& arg) {
  const auto colon = arg.find(':');
  std::pair<std::string, std::map<std::string, double>> out;
  out.first = arg.substr(0, colon);
  if (colon == std::string::npos) return out;
  std::stringstream ss(arg.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "expected key=value in '" + arg + "'");
    try {
      out.second[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, "bad number in '" + arg + "'");
    }
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

json map_to_json(const MapSpec& map) {
  json j;
  j["name"] = map.name();
  j["space"] = {{"lo", map.space().lo}, {"hi", map.space().hi}, {"circle", map.circle()}};
  json branches = json::array();
  for (const auto& b : map.branches()) {
    json f = formula_to_json(b.formula);
    branches.push_back({{"lo", b.domain.lo}, {"hi", b.domain.hi}, {"kind", f["kind"]}, {"params", f["params"]}});
  }
  j["branches"] = branches;
  j["critical"] = map.critical();
  j["neutral"] = map.neutral();
  return j;
}

MapSpec map_from_json(const json& j) {
  try {
    const auto& sp = j.at("space");
    std::vector<Branch> br;
    for (const auto& b : j.at("branches")) {
      br.push_back({{as_double(b.at("lo")), as_double(b.at("hi"))},
                    formula_from_json(b.at("kind").get<std::string>(), b.value("params", json::object()))});
    }
    std::vector<double> neutral;
    if (j.contains("neutral")) neutral = j.at("neutral").get<std::vector<double>>();
    return MapSpec(j.value("name", std::string("custom")), {as_double(sp.at("lo")), as_double(sp.at("hi"))},
                   sp.value("circle", false), std::move(br), j.value("critical", std::vector<double>{}),
                   std::move(neutral));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed map JSON: ") + e.what());
  }
}

MapSpec parse_map_argument(const std::string& arg) {
  if (arg.rfind("json:", 0) == 0) return map_from_json(json::parse(read_text(arg.substr(5))));
  if (ends_with(arg, ".json")) return map_from_json(json::parse(read_text(arg)));
  const auto [name, kv] = split_argument(arg);
  auto param = [&, &kv = kv](const char* key, double fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  if (name == "doubling") return doubling_map();
  if (name == "lsv") return lsv_map(param("alpha", 1.0));
  if (name == "quadratic") return quadratic_map(param("c", -2.0));
  if (name == "tent") return tent_map(param("s", 2.0));
  throw Error(ErrorKind::InvalidArgument, "unknown map: " + arg);
}

json scheme_to_json(const MapSpec& map, const InducingScheme& s) {
  json j;
  j["format"] = "eqstate-scheme";
  j["map"] = map_to_json(map);
  j["base"] = {s.base.lo, s.base.hi};
  j["complete_up_to"] = s.complete_up_to;
  j["exhaustive"] = s.exhaustive;
  j["tol"] = s.tol;
  json branches = json::array();
  for (const auto& b : s.branches) {
    json chain = json::array();
    for (const auto& st : b.chain) chain.push_back({st.branch, st.shift});
    branches.push_back({{"lo", b.cylinder.lo},
                        {"hi", b.cylinder.hi},
                        {"return_time", b.return_time},
                        {"marker", b.marker},
                        {"chain", chain}});
  }
  j["branches"] = branches;
  return j;
}

std::pair<MapSpec, InducingScheme> scheme_from_json(const json& j) {
  try {
    MapSpec map = map_from_json(j.at("map"));
    InducingScheme s;
    s.base = {as_double(j.at("base").at(0)), as_double(j.at("base").at(1))};
    s.complete_up_to = j.at("complete_up_to").get<std::size_t>();
    s.exhaustive = j.at("exhaustive").get<bool>();
    s.tol = as_double(j.at("tol"));
    s.map_name = map.name();
    for (const auto& b : j.at("branches")) {
      InducedBranch ib;
      ib.cylinder = {as_double(b.at("lo")), as_double(b.at("hi"))};
      ib.return_time = b.at("return_time").get<std::size_t>();
      ib.marker = as_double(b.at("marker"));
      for (const auto& st : b.at("chain")) ib.chain.push_back({st.at(0).get<std::size_t>(), as_double(st.at(1))});
      if (ib.chain.size() != ib.return_time) {
        throw Error(ErrorKind::InvalidArgument, "scheme branch chain length differs from its return time");
      }
      for (const auto& st : ib.chain) {
        if (st.branch >= map.branches().size()) throw Error(ErrorKind::InvalidArgument, "chain refers to a missing branch");
      }
      s.branches.push_back(std::move(ib));
    }
    return {std::move(map), std::move(s)};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed scheme JSON: ") + e.what());
  }
}

LevelCounts parse_counts_argument(const std::string& arg, double q) {
  if (arg == "constant_one" || arg == "two_at_one") return analytic_counts(arg);
  if (arg == "gouezel") return analytic_counts(arg, q);
  auto from_map = [](const std::map<std::size_t, double>& m, std::string label) {
    std::size_t top = 0;
    for (const auto& [n, c] : m) {
      if (n == 0) throw Error(ErrorKind::InvalidArgument, "levels start at 1");
      if (c < 0.0) throw Error(ErrorKind::InvalidArgument, "counts must be nonnegative");
      top = std::max(top, n);
    }
    std::vector<double> table(top, 0.0);
    for (const auto& [n, c] : m) table[n - 1] = c;
    return table_counts(std::move(table), std::move(label));
  };
  if (arg.rfind("table:", 0) == 0) {
    std::map<std::size_t, double> m;
    std::stringstream ss(arg.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "expected n=count in '" + arg + "'");
      m[std::stoul(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
    }
    return from_map(m, arg);
  }
  if (ends_with(arg, ".json")) {
    const auto j = json::parse(read_text(arg));
    std::map<std::size_t, double> m;
    for (const auto& [k, v] : j.at("counts").items()) m[std::stoul(k)] = as_double(v);
    return from_map(m, arg);
  }
  return analytic_counts(arg, q);  // raises UnknownGenerator
}

Potential parse_potential_argument(const std::string& arg) {
  if (arg.rfind("branch:", 0) == 0) {
    std::vector<double> v;
    std::stringstream ss(arg.substr(7));
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    return Potential::branch_constant(std::move(v));
  }
  if (arg.rfind("json:", 0) == 0) {
    const auto j = json::parse(read_text(arg.substr(5)));
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "geometric") return Potential::geometric(as_double(j.value("t", json(1.0))));
    if (kind == "constant") return Potential::constant(as_double(j.at("c")));
    if (kind == "branch_constant") return Potential::branch_constant(j.at("values").get<std::vector<double>>());
    throw Error(ErrorKind::InvalidArgument, "unknown potential kind: " + kind);
  }
  const auto [name, kv] = split_argument(arg);
  if (name == "geometric") return Potential::geometric(kv.count("t") ? kv.at("t") : 1.0);
  if (name == "constant") return Potential::constant(kv.count("c") ? kv.at("c") : 0.0);
  throw Error(ErrorKind::InvalidArgument, "unknown potential: " + arg);
}

json pressure_report_to_json(const PressureReport& r) {
  return {{"h", number(r.h)},
          {"h_lower", number(r.h_lower)},
          {"mean_return", number(r.mean_return)},
          {"mean_finite", r.mean_finite},
          {"delta_F", number(r.delta_F)},
          {"delta_at_zero", r.delta_at_zero},
          {"delta_at_h", r.delta_at_h},
          {"tail_rate", number(r.tail_rate)},
          {"truncation_error", number(r.truncation_error)},
          {"residual", number(r.residual)},
          {"horizon", r.horizon},
          {"tol", r.tol},
          {"counts", r.counts}};
}

json zooming_report_to_json(const ZoomingReport& r) {
  return {{"x", r.x},
          {"lambda", r.lambda},
          {"delta", r.delta},
          {"ell", r.ell},
          {"contraction", r.contraction},
          {"horizon", r.horizon},
          {"defined_steps", r.defined_steps},
          {"truncated", r.truncated},
          {"frequency", r.frequency},
          {"count", r.times.size()},
          {"times", r.times}};
}

json mass_to_json(const MassDistribution& m) {
  json classes = json::array();
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto& c = m.classes[i];
    json e = {{"return_time", c.return_time}, {"multiplicity", number(c.multiplicity)}, {"weight", number(m.weights[i])}};
    if (c.branch) e["branch"] = *c.branch;
    classes.push_back(e);
  }
  return {{"classes", classes},
          {"remainder",
           {{"from_level", m.tail.from_level},
            {"mass", number(m.tail.mass)},
            {"mean", number(m.tail.mean)},
            {"entropy", number(m.tail.entropy)}}},
          {"total_mass", number(m.total_mass())},
          {"mean_return", number(m.mean_return())},
          {"residual", number(m.residual)}};
}

json tail_report_to_json(const TailReport& t, const std::vector<std::size_t>& at) {
  json bounds = json::object();
  for (auto n : at) bounds[std::to_string(n)] = number(t.bound(n));
  return {{"rate", number(t.rate)},
          {"granted", t.granted},
          {"epsilon", number(t.epsilon)},
          {"constant", number(t.constant)},
          {"bounds", bounds}};
}

std::string level_table_csv(const LevelCounts& counts, double h, std::size_t max_level) {
  std::string out = "n,count,weight,level_mass\n";
  for (std::size_t n = 1; n <= max_level; ++n) {
    const double c = counts.count(n);
    const double w = std::exp(-h * static_cast<double>(n));
    out += fmt::format("{},{},{},{}\n", n, format_number(c), format_number(w), format_number(c * w));
  }
  return out;
}

std::string curve_csv(const PressureCurve& c) {
  std::string out = "t,P,err,left_slope,right_slope\n";
  for (const auto& p : c.points) {
    out += fmt::format("{},{},{},{},{}\n", format_number(p.t), format_number(p.value), format_number(p.err()),
                       format_number(p.left_slope), format_number(p.right_slope));
  }
  return out;
}

std::string ratio_table_csv(const std::vector<RatioRow>& rows) {
  std::string out = "r,ratio,majorant\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}\n", format_number(r.r), format_number(r.ratio), format_number(r.majorant));
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::InvalidArgument, "sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + path);
}

json RunManifest::to_json() const {
  json params = json::object();
  for (const auto& [k, v] : parameters) params[k] = v;
  json j = {{"command", command}, {"tool_version", kToolVersion}, {"parameters", params}};
  j["seed"] = seed.empty() ? json(nullptr) : json(seed);
  j["input_digests"] = input_digests;
  j["wall_seconds"] = wall_seconds;
  return j;
}

}  // namespace eqstate
