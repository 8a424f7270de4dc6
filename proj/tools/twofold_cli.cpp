// twofold command-line front end: simulate | analyze | trace | sweep.
//
// Exit codes: 0 ok, 2 configuration error (nothing written), 3 computation
// error (JSON diagnostic on stderr), 4 too few traced or labeled points.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "twofold/twofold.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twofold;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCompute = 3;
constexpr int kExitPartial = 4;

struct RunConfig {
  std::string family = std::string(hamiltonian7::kFamilyId);
  std::optional<std::string> system_path;
  double a = 0.0;
  double b = 0.0;
  Vec2 start{0.3, 0.0};
  double t_max = 20.0;
  OrbitOptions integrator;
  std::string escape = "refuse";
  fs::path out = ".";
  unsigned workers = 1;
  int profile_samples = 200;
  double lambda = kDefaultLambda;
  std::vector<double> alpha_positive = default_alpha_grid(+1);
  std::vector<double> alpha_negative = default_alpha_grid(-1);
  SweepSpec sweep;
};

/// Values given on the command line; each overrides the config file.
struct Overrides {
  std::string config;
  std::string out;
  unsigned workers = 0;
  std::string family;
  std::string system;
  std::optional<double> a, b, rel_tol, abs_tol, t_max;
  std::vector<double> start;
};

Error config_error(const std::string& what) { return Error(ErrorCode::ConfigError, what); }

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw config_error("field '" + field + "' must be a number");
  return j.get<double>();
}

std::vector<double> numbers(const json& j, const std::string& field) {
  if (!j.is_array()) throw config_error("field '" + field + "' must be an array of numbers");
  std::vector<double> v;
  for (std::size_t k = 0; k < j.size(); ++k) v.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  return v;
}

void read_grid(const json& j, const std::string& field, double& lo, double& hi, int& n) {
  const auto v = numbers(j, field);
  if (v.size() != 3) throw config_error("field '" + field + "' must be [lo, hi, n]");
  lo = v[0];
  hi = v[1];
  n = static_cast<int>(v[2]);
  if (n < 1 || static_cast<double>(n) != v[2] || !(lo <= hi))
    throw config_error("field '" + field + "' needs lo <= hi and a positive integer count");
}

void apply_config_file(RunConfig& c, const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw config_error(path + ": top level must be an object");
  static const std::set<std::string> known = {"family", "system", "a", "b", "start", "t_max", "integrator",
                                              "escape", "out", "workers", "profile_samples", "lambda",
                                              "alpha_grid", "sweep"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw config_error(path + ": unknown field '" + key + "'");
  if (j.contains("family")) {
    if (!j["family"].is_string()) throw config_error("field 'family' must be a string");
    c.family = j["family"].get<std::string>();
  }
  if (j.contains("system")) {
    if (!j["system"].is_string()) throw config_error("field 'system' must be a path string");
    fs::path p = j["system"].get<std::string>();
    if (p.is_relative()) p = fs::path(path).parent_path() / p;
    c.system_path = p.string();
  }
  if (j.contains("a")) c.a = number(j["a"], "a");
  if (j.contains("b")) c.b = number(j["b"], "b");
  if (j.contains("start")) {
    const auto v = numbers(j["start"], "start");
    if (v.size() != 2) throw config_error("field 'start' must be [x, y]");
    c.start = {v[0], v[1]};
  }
  if (j.contains("t_max")) c.t_max = number(j["t_max"], "t_max");
  if (j.contains("integrator")) {
    const auto& g = j["integrator"];
    if (!g.is_object()) throw config_error("field 'integrator' must be an object");
    for (const auto& [key, val] : g.items()) {
      const std::string f = "integrator." + key;
      if (key == "rel_tol") c.integrator.rel_tol = number(val, f);
      else if (key == "abs_tol") c.integrator.abs_tol = number(val, f);
      else if (key == "max_step") c.integrator.max_step = number(val, f);
      else if (key == "max_steps") c.integrator.max_steps = static_cast<long>(number(val, f));
      else if (key == "event_tol") c.integrator.event_tol = number(val, f);
      else if (key == "max_time") c.integrator.max_time = number(val, f);
      else if (key == "box") c.integrator.box = number(val, f);
      else throw config_error("unknown field '" + f + "'");
    }
  }
  if (j.contains("escape")) {
    if (!j["escape"].is_string()) throw config_error("field 'escape' must be a string");
    c.escape = j["escape"].get<std::string>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw config_error("field 'out' must be a string");
    c.out = j["out"].get<std::string>();
  }
  if (j.contains("workers")) c.workers = static_cast<unsigned>(number(j["workers"], "workers"));
  if (j.contains("profile_samples")) c.profile_samples = static_cast<int>(number(j["profile_samples"], "profile_samples"));
  if (j.contains("lambda")) c.lambda = number(j["lambda"], "lambda");
  if (j.contains("alpha_grid")) {
    const auto& g = j["alpha_grid"];
    if (!g.is_object()) throw config_error("field 'alpha_grid' must be an object");
    for (const auto& [key, val] : g.items()) {
      if (key == "positive") c.alpha_positive = numbers(val, "alpha_grid.positive");
      else if (key == "negative") c.alpha_negative = numbers(val, "alpha_grid.negative");
      else throw config_error("unknown field 'alpha_grid." + key + "'");
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (!s.is_object()) throw config_error("field 'sweep' must be an object");
    for (const auto& [key, val] : s.items()) {
      if (key == "a") read_grid(val, "sweep.a", c.sweep.a_lo, c.sweep.a_hi, c.sweep.na);
      else if (key == "b") read_grid(val, "sweep.b", c.sweep.b_lo, c.sweep.b_hi, c.sweep.nb);
      else throw config_error("unknown field 'sweep." + key + "'");
    }
  }
}

RunConfig resolve(const Overrides& ov) {
  RunConfig c;
  if (!ov.config.empty()) apply_config_file(c, ov.config);
  if (!ov.out.empty()) c.out = ov.out;
  if (ov.workers) c.workers = ov.workers;
  if (!ov.family.empty()) {
    c.family = ov.family;
    c.system_path.reset();
  }
  if (!ov.system.empty()) c.system_path = ov.system;
  if (ov.a) c.a = *ov.a;
  if (ov.b) c.b = *ov.b;
  if (ov.rel_tol) c.integrator.rel_tol = *ov.rel_tol;
  if (ov.abs_tol) c.integrator.abs_tol = *ov.abs_tol;
  if (ov.t_max) c.t_max = *ov.t_max;
  if (!ov.start.empty()) {
    if (ov.start.size() != 2) throw config_error("--start takes two values");
    c.start = {ov.start[0], ov.start[1]};
  }

  c.integrator.validate();
  if (c.workers == 0) throw config_error("workers must be positive");
  if (!(c.lambda > 0.0)) throw config_error("lambda must be positive");
  if (!(c.t_max >= 0.0)) throw config_error("t_max must be non-negative");
  if (c.escape == "refuse") c.integrator.escape = EscapePolicy::Refuse;
  else if (c.escape == "upper") c.integrator.escape = EscapePolicy::Upper;
  else if (c.escape == "lower") c.integrator.escape = EscapePolicy::Lower;
  else throw config_error("escape must be refuse, upper or lower");
  if (!c.system_path && c.family != hamiltonian7::kFamilyId)
    throw config_error("unknown family '" + c.family + "'");
  return c;
}

/// The family behind the config: the built-in one or a template file.
std::optional<Family> load_family(const RunConfig& c) {
  if (!c.system_path) return Family::hamiltonian();
  const json j = read_json_file(*c.system_path);
  if (!is_family_json(j)) return std::nullopt;
  return family_from_json(j, fs::path(*c.system_path).stem().string());
}

/// The single system the config selects; parameter-range problems are
/// configuration errors.
FilippovSystem load_system(const RunConfig& c) {
  try {
    if (!c.system_path) return hamiltonian7::make_system(c.a, c.b);
    const json j = read_json_file(*c.system_path);
    if (is_family_json(j)) return family_from_json(j).instantiate(c.a, c.b);
    return system_from_json(j);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DomainError) throw config_error(e.what());
    throw;
  }
}

TraceOptions trace_options(const RunConfig& c) {
  TraceOptions o;
  o.lambda = c.lambda;
  o.workers = c.workers;
  o.integrator = c.integrator;
  return o;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
}

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw config_error("cannot create output directory " + c.out.string());
}

void diagnose(const Error& e, const char* command) {
  std::cerr << json{{"command", command}, {"error", to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& c) {
  const FilippovSystem z = load_system(c);
  const Trajectory tr = filippov_orbit(z, c.start, c.t_max, c.integrator);
  if (tr.termination == Termination::LeftDomain || tr.termination == Termination::StepLimit) {
    std::cerr << json{{"command", "simulate"},
                      {"error", tr.termination == Termination::LeftDomain ? "LeftDomain" : "StepLimit"},
                      {"termination", to_string(tr.termination)}}
                     .dump()
              << '\n';
    return kExitCompute;
  }
  SvgScene scene = portrait_scene(z, tr);
  try {
    const MapContext ctx = prepare(z, c.lambda, c.integrator);
    if (const auto pe = find_pseudo_equilibrium(ctx)) scene.glyphs.push_back({Glyph::Kind::PseudoEq, pe->p + ctx.shift, 0});
    for (const auto& cyc : find_cycles(ctx)) scene.glyphs.push_back({Glyph::Kind::Cycle, cyc.x_star + ctx.shift, 0});
  } catch (const Error&) {
    // Glyphs are decoration; systems without the fold geometry get none.
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, tr);
  prepare_out(c);
  write_text(c.out / "trajectory.csv", csv.str());
  write_text(c.out / "portrait.svg", render_svg(scene));
  std::cout << "termination: " << to_string(tr.termination) << ", arcs: " << tr.arcs.size() << '\n';
  return 0;
}

json cycles_json(const std::vector<CycleRecord>& cycles, double shift) {
  json arr = json::array();
  for (const auto& r : cycles)
    arr.push_back({{"x_star", r.x_star + shift},
                   {"kind", to_string(r.kind)},
                   {"stability", to_string(r.stability)},
                   {"f_prime", r.f_prime}});
  return arr;
}

int cmd_analyze(const RunConfig& c) {
  const FilippovSystem z = load_system(c);
  const MapContext ctx = prepare(z, c.lambda, c.integrator);
  const DisplacementProfile prof = displacement_profile(ctx, c.profile_samples, c.workers);
  // The inventory drops the boundary zero that is the two-fold cycle itself.
  std::vector<CycleRecord> cycles;
  try {
    cycles = inventory(ctx).cycles;
  } catch (const Error&) {
    cycles = find_cycles(ctx);
  }
  const auto pe = find_pseudo_equilibrium(ctx);

  json summary = profile_metadata(prof);
  summary["cycles"] = cycles_json(cycles, ctx.shift);
  summary["pseudo_eq"] = pe ? json{{"x", pe->p + ctx.shift}, {"stability", to_string(pe->stability)},
                                   {"n_prime", pe->n_prime}}
                            : json(nullptr);
  // Labels assume a stable two-fold cycle (L > 0); otherwise the
  // time-reversed system is labeled and the label carries '*'.
  const bool mirrored = prof.L < 0.0;
  try {
    const MapContext lc = mirrored ? prepare(reflect_time_reversed(z), c.lambda, c.integrator) : ctx;
    summary["label"] = std::string(to_string(label_from_inventory(inventory(lc)))) + (mirrored ? "*" : "");
  } catch (const Error& e) {
    summary["label"] = nullptr;
    summary["label_error"] = e.what();
  }

  std::ostringstream csv;
  write_profile_csv(csv, prof);
  prepare_out(c);
  write_text(c.out / "profile.csv", csv.str());
  write_text(c.out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

std::array<CurveTrace, 5> run_traces(const Family& fam, const RunConfig& c) {
  std::array<CurveTrace, 5> traces;
  const TraceOptions o = trace_options(c);
  for (int id = 1; id <= 5; ++id)
    traces[id - 1] = trace_curve(fam, id, curve_on_positive_side(id) ? c.alpha_positive : c.alpha_negative, o);
  return traces;
}

std::size_t converged_total(const std::array<CurveTrace, 5>& traces, std::size_t* total) {
  std::size_t n = 0;
  *total = 0;
  for (const auto& t : traces) {
    n += t.converged_count();
    *total += t.points.size();
  }
  return n;
}

/// The family to work with: labels assume a stable two-fold cycle at the
/// origin of the parameter plane, so an unstable one is time-reversed.
std::pair<Family, bool> oriented_family(const Family& fam, const RunConfig& c) {
  const MapContext ctx = prepare(fam.instantiate(0.0, 0.0), c.lambda, c.integrator);
  const auto prof = displacement_profile(ctx, 8);
  if (prof.L < 0.0) return {reflect_time_reversed(fam), true};
  return {fam, false};
}

Family require_family(const RunConfig& c) {
  const auto fam = load_family(c);
  if (!fam) throw config_error("trace and sweep need a family (built-in or [i,j,c0,ca,cb] template)");
  return *fam;
}

void check_alpha_grids(const RunConfig& c) {
  if (c.alpha_positive.empty() || c.alpha_negative.empty()) throw config_error("alpha grid is empty");
  for (double a : c.alpha_positive)
    if (!(a > 0.0)) throw config_error("alpha_grid.positive entries must be > 0");
  for (double a : c.alpha_negative)
    if (!(a < 0.0)) throw config_error("alpha_grid.negative entries must be < 0");
}

int cmd_trace(const RunConfig& c) {
  check_alpha_grids(c);
  const auto [fam, mirrored] = oriented_family(require_family(c), c);
  const auto traces = run_traces(fam, c);
  std::ostringstream csv;
  write_traces_csv(csv, {traces.begin(), traces.end()});
  json meta{{"family", fam.id}, {"mirrored", mirrored}, {"curves", traces_summary({traces.begin(), traces.end()})}};
  prepare_out(c);
  write_text(c.out / "curves.csv", csv.str());
  write_text(c.out / "curves.json", meta.dump(2) + "\n");
  std::size_t total = 0;
  const std::size_t ok = converged_total(traces, &total);
  std::cout << "converged " << ok << " of " << total << " curve points\n";
  return 5 * ok >= 4 * total ? 0 : kExitPartial;
}

/// Reads curves.csv written by `trace`; nullopt when absent.
std::optional<std::array<CurveTrace, 5>> read_traces(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  std::array<CurveTrace, 5> traces;
  for (int id = 1; id <= 5; ++id) traces[id - 1].curve_id = id;
  std::string line;
  std::getline(in, line);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    CurvePoint pt;
    int id = 0, conv = 0;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d", &id, &pt.alpha, &pt.beta, &pt.residual, &conv) != 5 ||
        id < 1 || id > 5)
      throw config_error(p.string() + ": malformed row " + std::to_string(row));
    pt.converged = conv != 0;
    traces[id - 1].points.push_back(pt);
  }
  return traces;
}

int cmd_sweep(const RunConfig& c) {
  check_alpha_grids(c);
  const auto [fam, mirrored] = oriented_family(require_family(c), c);
  auto traces = read_traces(c.out / "curves.csv");
  if (!traces) traces = run_traces(fam, c);
  const auto rows = sweep(fam, c.sweep, *traces, c.workers, trace_options(c), mirrored);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  prepare_out(c);
  write_text(c.out / "sweep.csv", csv.str());
  write_text(c.out / "diagram.svg", render_diagram_svg(rows, c.sweep, *traces));
  std::size_t labeled = 0;
  for (const auto& r : rows) labeled += r.labeled() ? 1 : 0;
  std::cout << "labeled " << labeled << " of " << rows.size() << " points\n";
  return 100 * labeled >= 95 * rows.size() ? 0 : kExitPartial;
}

void add_common(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config, "JSON run configuration");
  sub->add_option("--out", ov.out, "output directory");
  sub->add_option("--workers", ov.workers, "worker threads");
  sub->add_option("--family", ov.family, "built-in family id (hamiltonian7)");
  sub->add_option("--system", ov.system, "system or family template JSON file");
  sub->add_option("-a", ov.a, "family parameter a");
  sub->add_option("-b", ov.b, "family parameter b");
  sub->add_option("--rel-tol", ov.rel_tol, "integrator relative tolerance");
  sub->add_option("--abs-tol", ov.abs_tol, "integrator absolute tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-fold cycle analysis of planar Filippov systems"};
  app.require_subcommand(1);
  Overrides ov;
  auto* sim = app.add_subcommand("simulate", "integrate one Filippov orbit");
  auto* ana = app.add_subcommand("analyze", "displacement profile, cycles and label");
  auto* trc = app.add_subcommand("trace", "trace the five bifurcation curves");
  auto* swp = app.add_subcommand("sweep", "label a grid of the parameter plane");
  for (auto* s : {sim, ana, trc, swp}) add_common(s, ov);
  sim->add_option("--start", ov.start, "initial point x y")->expected(2);
  sim->add_option("--t-max", ov.t_max, "integration time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const char* name = sim->parsed() ? "simulate" : ana->parsed() ? "analyze" : trc->parsed() ? "trace" : "sweep";
  RunConfig cfg;
  try {
    cfg = resolve(ov);
  } catch (const Error& e) {
    diagnose(e, name);
    return kExitConfig;
  }
  try {
    if (sim->parsed()) return cmd_simulate(cfg);
    if (ana->parsed()) return cmd_analyze(cfg);
    if (trc->parsed()) return cmd_trace(cfg);
    return cmd_sweep(cfg);
  } catch (const Error& e) {
    diagnose(e, name);
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitCompute;
  }
}
