#include "eqstate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "eqstate/analysis.hpp"
#include "eqstate/errors.hpp"
#include "eqstate/io.hpp"
#include "eqstate/zooming.hpp"

namespace eqstate {

namespace {

using Clock = std::chrono::steady_clock;

struct Context {
  explicit Context(std::ostream& o) : out(o) {}

  std::ostream& out;
  Clock::time_point start = Clock::now();
  RunManifest manifest;

  void param(const std::string& k, const std::string& v) { manifest.parameters.emplace_back(k, v); }
  void param(const std::string& k, double v) { param(k, format_number(v)); }
  void input(const std::string& path) { manifest.input_digests[path] = sha256_file(path); }

  json finish(json body) {
    manifest.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    json j;
    j["manifest"] = manifest.to_json();
    for (auto& [k, v] : body.items()) j[k] = v;
    return j;
  }
};

// JSON result to stdout and, when requested, to a file.
void emit(Context& ctx, json body, const std::string& out_path) {
  const json j = ctx.finish(std::move(body));
  const std::string text = j.dump(2) + "\n";
  ctx.out << text;
  if (!out_path.empty()) write_text(out_path, text);
}

// CSV body to its file with the manifest beside it.
void emit_csv(Context& ctx, const std::string& body, const std::string& path, json summary) {
  write_text(path, body);
  const json j = ctx.finish(std::move(summary));
  write_text(path + ".manifest.json", j.dump(2) + "\n");
  ctx.out << j.dump(2) << "\n";
}

std::pair<MapSpec, InducingScheme> load_scheme(Context& ctx, const std::string& path) {
  ctx.input(path);
  return scheme_from_json(json::parse(read_text(path)));
}

Interval parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::InvalidArgument, "expected lo,hi but got '" + s + "'");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidArgument, "bad interval '" + s + "'");
  }
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> parts;
  std::size_t from = 0;
  while (true) {
    const auto colon = s.find(':', from);
    try {
      parts.push_back(std::stod(s.substr(from, colon - from)));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, "bad grid '" + s + "'");
    }
    if (colon == std::string::npos) break;
    from = colon + 1;
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "grid must be t or lo:hi:step");
  return linear_grid(parts[0], parts[1], parts[2]);
}

MarkerPolicy parse_marker(const std::string& s) {
  if (s == "midpoint") return MarkerPolicy::midpoint;
  if (s == "mean_value") return MarkerPolicy::mean_value;
  throw Error(ErrorKind::InvalidArgument, "marker must be midpoint or mean_value");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"eqstate: pressure, equilibrium states and inducing schemes for interval maps"};
  app.require_subcommand(1);
  Context ctx(out);

  // maps
  auto* maps = app.add_subcommand("maps", "Built-in maps");
  maps->require_subcommand(1);
  auto* maps_list = maps->add_subcommand("list", "List built-in maps as JSON");

  // scheme
  auto* scheme = app.add_subcommand("scheme", "Inducing schemes");
  scheme->require_subcommand(1);
  auto* scheme_build = scheme->add_subcommand("build", "Build a first-return scheme and write its cache file");
  std::string map_arg = "doubling";
  std::string base_arg = "0,1";
  std::size_t nmax = 20;
  double scheme_tol = 1e-9;
  std::string out_path;
  scheme_build->add_option("--map", map_arg, "doubling | lsv:alpha=A | tent:s=S | quadratic:c=C | file.json")->required();
  scheme_build->add_option("--base", base_arg, "base interval lo,hi")->required();
  scheme_build->add_option("--nmax", nmax, "largest return time");
  scheme_build->add_option("--tol", scheme_tol, "endpoint tolerance");
  scheme_build->add_option("--out", out_path, "scheme cache file");

  // zooming
  auto* zooming = app.add_subcommand("zooming", "Hyperbolic and zooming times");
  zooming->require_subcommand(1);
  auto* zfreq = zooming->add_subcommand("frequency", "Frequency of zooming (or Pliss) times along an orbit");
  std::optional<double> x_arg;
  std::optional<std::uint64_t> z_seed;
  std::size_t n_steps = 1000;
  double lambda = 0.1;
  double delta = 0.1;
  std::size_t ell = 1;
  std::string zmode = "zooming";
  std::string contraction_kind = "exponential";
  zfreq->add_option("--map", map_arg)->required();
  auto* xo = zfreq->add_option("--x", x_arg, "starting point");
  auto* so = zfreq->add_option("--seed", z_seed, "draw the starting point uniformly from this seed");
  xo->excludes(so);
  zfreq->add_option("--N", n_steps)->required();
  zfreq->add_option("--lambda", lambda)->required();
  zfreq->add_option("--delta", delta);
  zfreq->add_option("--ell", ell, "iterate the map ell times first");
  zfreq->add_option("--mode", zmode)->check(CLI::IsMember({"zooming", "pliss"}));
  zfreq->add_option("--contraction", contraction_kind)->check(CLI::IsMember({"exponential", "stretched"}));
  zfreq->add_option("--out", out_path);

  // thermo
  auto* thermo = app.add_subcommand("thermo", "Pressure, MME and equilibrium weights");
  thermo->require_subcommand(1);
  std::string counts_arg;
  std::string scheme_path;
  double q = 1.0;
  double tol = 1e-12;
  std::string csv_path;
  std::size_t csv_levels = 0;
  std::string potential_arg = "geometric:t=1";
  std::string marker = "midpoint";
  auto add_source = [&](CLI::App* c) {
    auto* co = c->add_option("--counts", counts_arg, "constant_one | two_at_one | gouezel | table:n=c,... | file.json");
    auto* sc = c->add_option("--scheme", scheme_path, "scheme cache file");
    co->excludes(sc);
    c->add_option("--q", q, "gouezel parameter");
    c->add_option("--tol", tol);
    c->add_option("--out", out_path);
  };
  auto* tpress = thermo->add_subcommand("pressure", "Root of the pressure equation");
  add_source(tpress);
  tpress->add_option("--csv", csv_path, "level table CSV");
  tpress->add_option("--levels", csv_levels, "rows in the level table");
  auto* tmme = thermo->add_subcommand("mme", "Measure of maximal entropy");
  add_source(tmme);
  tmme->add_option("--csv", csv_path, "level table CSV");
  tmme->add_option("--levels", csv_levels, "rows in the level table");
  auto* teq = thermo->add_subcommand("equilibrium", "Gibbs weights for an induced potential");
  add_source(teq);
  teq->add_option("--potential", potential_arg, "geometric:t=T | constant:c=C | branch:v0,v1,... | json:file");
  teq->add_option("--marker", marker)->check(CLI::IsMember({"midpoint", "mean_value"}));

  // analysis
  auto* analysis = app.add_subcommand("analysis", "Pressure curves, diagnostics and oracle suites");
  analysis->require_subcommand(1);
  auto* acurve = analysis->add_subcommand("pressure-curve", "t -> P(t phi) over a grid, as CSV");
  std::string grid_arg = "0:1:0.1";
  double slope_tol = 0.1;
  bool no_competitor = false;
  acurve->add_option("--map", map_arg, "must match the scheme's map when given");
  acurve->add_option("--scheme", scheme_path)->required();
  acurve->add_option("--potential", potential_arg, "geometric | constant:c=C | branch:...");
  acurve->add_option("--t", grid_arg, "lo:hi:step");
  acurve->add_option("--marker", marker)->check(CLI::IsMember({"midpoint", "mean_value"}));
  acurve->add_option("--tol", tol);
  acurve->add_option("--slope-tol", slope_tol);
  acurve->add_flag("--no-competitor", no_competitor, "ignore neutral fixed points");
  acurve->add_option("--out", out_path)->required();
  auto* averify = analysis->add_subcommand("verify", "Run the randomized inequality suites");
  std::uint64_t seed = 1;
  double scale = 1.0;
  averify->add_option("--seed", seed);
  averify->add_option("--scale", scale, "fraction of the default sample counts");
  auto* ace = analysis->add_subcommand("ce", "Collet-Eckmann diagnostic for x^2 + c");
  double c_param = -2.0;
  ace->add_option("--c", c_param)->required();
  ace->add_option("--N", n_steps);
  ace->add_option("--out", out_path);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "UsageError: " << e.what() << "\n";
    return 2;
  }

  try {
    if (maps_list->parsed()) {
      ctx.manifest.command = "maps list";
      json list = json::array();
      list.push_back({{"name", "doubling"}, {"parameters", json::array()}, {"map", map_to_json(doubling_map())}});
      list.push_back({{"name", "lsv"}, {"parameters", {"alpha"}}, {"map", map_to_json(lsv_map(1.0))}});
      list.push_back({{"name", "quadratic"}, {"parameters", {"c"}}, {"map", map_to_json(quadratic_map(-2.0))}});
      list.push_back({{"name", "tent"}, {"parameters", {"s"}}, {"map", map_to_json(tent_map(2.0))}});
      emit(ctx, {{"maps", list}}, "");
      return 0;
    }

    if (scheme_build->parsed()) {
      ctx.manifest.command = "scheme build";
      ctx.param("map", map_arg);
      ctx.param("base", base_arg);
      ctx.param("nmax", std::to_string(nmax));
      ctx.param("tol", scheme_tol);
      const MapSpec map = parse_map_argument(map_arg);
      const auto s = first_return_scheme(map, parse_pair(base_arg), nmax, scheme_tol);
      json j = scheme_to_json(map, s);
      j["manifest"] = ctx.finish(json::object())["manifest"];
      if (!out_path.empty()) write_text(out_path, j.dump(1) + "\n");
      const auto counts = level_counts(s);
      emit(ctx,
           {{"branches", s.branches.size()},
            {"complete_up_to", s.complete_up_to},
            {"exhaustive", s.exhaustive},
            {"counts", counts.table()},
            {"out", out_path}},
           "");
      return 0;
    }

    if (zfreq->parsed()) {
      ctx.manifest.command = "zooming frequency";
      MapSpec map = parse_map_argument(map_arg);
      if (ell > 1) map = iterate(map, ell);
      double x;
      if (x_arg) {
        x = *x_arg;
      } else if (z_seed) {
        ctx.manifest.seed = std::to_string(*z_seed);
        x = map.space().lo + uniform01(*z_seed, 0) * map.space().length();
      } else {
        throw Error(ErrorKind::InvalidArgument, "give --x or --seed");
      }
      ctx.param("map", map_arg);
      ctx.param("x", x);
      ctx.param("N", std::to_string(n_steps));
      ctx.param("lambda", lambda);
      ctx.param("delta", delta);
      ctx.param("ell", std::to_string(ell));
      ctx.param("mode", zmode);
      ctx.param("contraction", contraction_kind);
      ZoomingReport r;
      if (zmode == "pliss") {
        r = pliss_times(map, x, n_steps, lambda);
      } else {
        const auto c = contraction_kind == "stretched" ? Contraction::stretched(lambda) : Contraction::exponential(lambda);
        r = zooming_frequency(map, x, n_steps, c, delta);
      }
      r.ell = ell;
      emit(ctx, zooming_report_to_json(r), out_path);
      return 0;
    }

    auto load_counts = [&]() -> std::pair<LevelCounts, std::optional<std::pair<MapSpec, InducingScheme>>> {
      if (!scheme_path.empty()) {
        auto ms = load_scheme(ctx, scheme_path);
        ctx.param("scheme", scheme_path);
        return {level_counts(ms.second), std::move(ms)};
      }
      if (counts_arg.empty()) throw Error(ErrorKind::InvalidArgument, "give --counts or --scheme");
      if (counts_arg.size() > 5 && counts_arg.substr(counts_arg.size() - 5) == ".json") ctx.input(counts_arg);
      ctx.param("counts", counts_arg);
      if (counts_arg == "gouezel") ctx.param("q", q);
      return {parse_counts_argument(counts_arg, q), std::nullopt};
    };

    if (tpress->parsed() || tmme->parsed()) {
      const bool is_mme = tmme->parsed();
      ctx.manifest.command = is_mme ? "thermo mme" : "thermo pressure";
      auto [counts, ms] = load_counts();
      ctx.param("tol", tol);
      const auto rep = pressure_root(counts, tol);
      json body = {{"report", pressure_report_to_json(rep)}};
      body["tail"] = tail_report_to_json(tail_analysis(counts, rep.h), {5, 10, 20});
      if (is_mme) {
        const auto m = mme(counts, rep.h);
        body["mme"] = mass_to_json(m);
        body["bernoulli_entropy"] = number(bernoulli_entropy(m));
        body["normalized_entropy"] = number(normalized_entropy(m));
      }
      if (!csv_path.empty()) {
        const std::size_t rows = csv_levels ? csv_levels : std::max<std::size_t>(counts.horizon(), 30);
        ctx.param("levels", std::to_string(rows));
        write_text(csv_path, level_table_csv(counts, rep.h, rows));
        body["csv"] = csv_path;
      }
      emit(ctx, body, out_path);
      return 0;
    }

    if (teq->parsed()) {
      ctx.manifest.command = "thermo equilibrium";
      ctx.param("tol", tol);
      if (!scheme_path.empty()) {
        auto [map, s] = load_scheme(ctx, scheme_path);
        ctx.param("scheme", scheme_path);
        ctx.param("potential", potential_arg);
        ctx.param("marker", marker);
        if (potential_arg.rfind("json:", 0) == 0) ctx.input(potential_arg.substr(5));
        const Potential phi = parse_potential_argument(potential_arg);
        const auto ip = induced_potential(map, s, phi, parse_marker(marker));
        const auto g = gibbs_equilibrium(ip, tol);
        json body = {{"p", number(g.p)},
                     {"truncation_estimate", number(g.truncation_estimate)},
                     {"variation_bound", number(ip.variation_bound())},
                     {"measured_variation", number(ip.measured_variation)},
                     {"horizon", ip.horizon},
                     {"weights", mass_to_json(g.m)}};
        body["integral"] = number(project_integral(g.m, ip));
        body["entropy"] = number(project_entropy(g.m));
        emit(ctx, body, out_path);
        return 0;
      }
      auto [counts, unused] = load_counts();
      const auto g = gibbs_equilibrium(zero_potential(counts), tol);
      emit(ctx, {{"p", number(g.p)}, {"truncation_estimate", number(g.truncation_estimate)}, {"weights", mass_to_json(g.m)}},
           out_path);
      return 0;
    }

    if (acurve->parsed()) {
      ctx.manifest.command = "analysis pressure-curve";
      auto [map, s] = load_scheme(ctx, scheme_path);
      if (!acurve->get_option("--map")->empty()) {
        const MapSpec given = parse_map_argument(map_arg);
        if (map_to_json(given) != map_to_json(map)) {
          throw Error(ErrorKind::InvalidArgument, "--map differs from the map stored in the scheme");
        }
        ctx.param("map", map_arg);
      }
      ctx.param("scheme", scheme_path);
      ctx.param("potential", potential_arg);
      ctx.param("t", grid_arg);
      ctx.param("marker", marker);
      ctx.param("tol", tol);
      ctx.param("slope_tol", slope_tol);
      ctx.param("competitor", no_competitor ? "off" : "on");
      const std::string pot = potential_arg == "geometric" ? "geometric:t=1" : potential_arg;
      CurveOptions opt;
      opt.tol = tol;
      opt.policy = parse_marker(marker);
      opt.use_competitor = !no_competitor;
      const auto curve = pressure_curve(map, s, parse_potential_argument(pot), parse_grid(grid_arg), opt);
      json failed = json::array();
      for (const auto& p : curve.points) {
        if (!p.error.empty()) failed.push_back({{"t", p.t}, {"error", p.error}});
      }
      json flags = json::array();
      if (curve.points.size() >= 3) {
        for (double t : phase_transition_scan(curve, slope_tol)) flags.push_back(t);
      }
      emit_csv(ctx, curve_csv(curve), out_path,
               {{"points", curve.points.size()},
                {"horizon", curve.horizon},
                {"phase_transition_flags", flags},
                {"convexity_defect", number(convexity_defect(curve))},
                {"failed_points", failed},
                {"csv", out_path}});
      return 0;
    }

    if (averify->parsed()) {
      ctx.manifest.command = "analysis verify";
      ctx.manifest.seed = std::to_string(seed);
      ctx.param("scale", scale);
      const auto results = run_oracles(seed, scale);
      json list = json::array();
      bool ok = true;
      for (const auto& r : results) {
        list.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        ok = ok && r.pass;
      }
      emit(ctx, {{"all_pass", ok}, {"suites", list}}, "");
      if (!ok) {
        err << "OracleViolation: at least one suite failed\n";
        return 1;
      }
      return 0;
    }

    if (ace->parsed()) {
      ctx.manifest.command = "analysis ce";
      ctx.param("c", c_param);
      ctx.param("N", std::to_string(n_steps));
      const auto d = collet_eckmann_diagnostic(c_param, n_steps);
      json ex = json::array();
      for (double v : d.exponents) ex.push_back(number(v));
      emit(ctx,
           {{"c", d.c},
            {"estimate", number(d.estimate)},
            {"minus_infinity", d.minus_infinity},
            {"window", "trailing half"},
            {"label", CEDiagnostic::label},
            {"exponents", ex}},
           out_path);
      return 0;
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidArgument ? 2 : 1;
  } catch (const json::exception& e) {
    err << "InvalidArgument: " << e.what() << "\n";
    return 2;
  }
  err << "UsageError: no command\n";
  return 2;
}

}  // namespace eqstate
