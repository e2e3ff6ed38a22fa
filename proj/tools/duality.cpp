// Command-line driver: certification runs, amplitude sweeps and the M-tensor
// feasibility report. Data goes to stdout or --out; DUALITY_LOG controls the
// stderr chatter.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "elastodual/dual1d.hpp"
#include "elastodual/errors.hpp"
#include "elastodual/fem3d.hpp"
#include "elastodual/primal1d.hpp"
#include "elastodual/tensor3d.hpp"

namespace {

using nlohmann::ordered_json;
using namespace elastodual;

constexpr std::size_t kMaxElements1D = 4096;
constexpr int kMaxElements3D = 8 * 8 * 8;

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel log_level() {
  const char* env = std::getenv("DUALITY_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void say(LogLevel at, const std::string& msg) {
  if (log_level() >= at) std::cerr << msg << '\n';
}

struct GlobalOptions {
  std::string out = "-";
  std::uint64_t seed = 7;
  bool timings = false;
};

// Writes to the --out path, or stdout for "-".
void emit(const GlobalOptions& g, const std::string& text) {
  if (g.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + g.out);
  f << text;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item.substr(first), &used);
    } catch (const std::exception&) {
      throw InvalidModel(std::string("bad number in ") + what + ": '" + item + "'");
    }
    if (item.find_first_not_of(" \t", first + used) != std::string::npos) {
      throw InvalidModel(std::string("bad number in ") + what + ": '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

Vec3 parse_vec3(const std::string& s, const char* what) {
  const std::vector<double> v = parse_list(s, what);
  if (v.size() != 3) throw InvalidModel(std::string(what) + " needs three components");
  return {v[0], v[1], v[2]};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1D

struct Bar1DOptions {
  double E = 1.0;
  double A = 1.0;
  double L = 1.0;
  std::size_t n = 64;
  int mode = 1;
  int steps = 10;
  int samples = 100;
};

void add_bar_options(CLI::App* sub, Bar1DOptions& o) {
  sub->add_option("--E", o.E, "Young's modulus")->capture_default_str();
  sub->add_option("--A", o.A, "cross-section area")->capture_default_str();
  sub->add_option("--L", o.L, "bar length")->capture_default_str();
  sub->add_option("--n", o.n, "number of elements")->capture_default_str();
  sub->add_option("--mode", o.mode, "sine load mode number")->capture_default_str();
  sub->add_option("--steps", o.steps, "load continuation steps")->capture_default_str();
  sub->add_option("--samples", o.samples, "saddle and upper-bound samples")->capture_default_str();
}

void validate_bar(const Bar1DOptions& o) {
  if (!(o.E > 0.0) || !(o.A > 0.0) || !(o.L > 0.0)) {
    throw InvalidModel("E, A and L must be positive");
  }
  if (o.n < 2 || o.n > kMaxElements1D) throw InvalidModel("n must be in [2, 4096]");
  if (o.steps < 1) throw InvalidModel("steps must be >= 1");
  if (o.samples < 0) throw InvalidModel("samples must be >= 0");
}

CertifyOptions certify_options(const Bar1DOptions& o) {
  CertifyOptions c;
  c.continuation_steps = o.steps;
  c.saddle_samples = o.samples;
  c.upper_bound_samples = o.samples;
  return c;
}

ordered_json bar_echo(const Bar1DOptions& o) {
  return {{"E", o.E}, {"A", o.A}, {"L", o.L}, {"n", o.n},
          {"mode", o.mode}, {"steps", o.steps}, {"samples", o.samples}};
}

int cmd_certify1d(const GlobalOptions& g, const Bar1DOptions& o, double amp) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_bar(o);
  const BarModel unit = BarModel::sine_load(o.E, o.A, o.L, o.n, 1.0, o.mode);
  const GapReport rep = certify(unit, amp, g.seed, certify_options(o));
  ordered_json echo = {{"command", "certify1d"}, {"amp", amp}, {"seed", g.seed}};
  echo.update(bar_echo(o));
  std::map<std::string, double> timings;
  if (g.timings) timings["total_s"] = seconds_since(t0);
  emit(g, report_json(rep, echo, timings).dump(2) + "\n");
  say(LogLevel::kInfo, "certify1d: " + to_string(rep.status) + ", gap " + format_double(rep.gap));
  if (!rep.diagnostics.empty()) say(LogLevel::kDebug, "certify1d: " + rep.diagnostics);
  return exit_code(rep.status);
}

int cmd_sweep1d(const GlobalOptions& g, const Bar1DOptions& o, const std::string& amps) {
  validate_bar(o);
  const std::vector<double> list = parse_list(amps, "--amps");
  const BarModel unit = BarModel::sine_load(o.E, o.A, o.L, o.n, 1.0, o.mode);
  std::string csv =
      "amp,J_primal,J_dual,gap,condition_norm,min_positivity_margin,min_hessian_z,"
      "saddle_pass_fraction,newton_iters,status\n";
  for (double amp : list) {
    const GapReport r = certify(unit, amp, g.seed, certify_options(o));
    csv += format_double(amp);
    if (r.status == Status::kSolverError) {
      csv += ",,,,,,,,,FAILED\n";
      say(LogLevel::kInfo, "sweep1d: amp " + format_double(amp) + " FAILED: " + r.diagnostics);
      continue;
    }
    const double frac = r.saddle_samples > 0 ? (r.passed_z + r.passed_v) /
                                                   (2.0 * r.saddle_samples)
                                             : std::nan("");
    for (double v : {r.J_primal, r.J_dual, r.gap, r.condition_norm, r.min_positivity_margin,
                     r.min_hessian_z, frac}) {
      csv += "," + format_double(v);
    }
    csv += "," + std::to_string(r.newton_iters) + "," + to_string(r.status) + "\n";
    say(LogLevel::kDebug, "sweep1d: amp " + format_double(amp) + " " + to_string(r.status));
  }
  emit(g, csv);
  return 0;
}

// ---------------------------------------------------------------------------
// 3D

struct Solid3DOptions {
  double lambda = 1.0;
  double mu = 1.0;
  std::string box = "1,1,1";
  int nx = 4, ny = 4, nz = 4;
  std::string traction = "0.05,0,0";
  std::string body = "0,0,0";
  double K = std::nan("");
  std::string kmode = "identity";
  std::string v1_order = "left";
  int steps = 4;
  int samples = 100;
};

int cmd_certify3d(const GlobalOptions& g, const Solid3DOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Vec3 box = parse_vec3(o.box, "--box");
  if (o.nx < 2 || o.ny < 2 || o.nz < 2) throw InvalidModel("need at least 2 elements per axis");
  if (o.nx * o.ny * o.nz > kMaxElements3D) throw InvalidModel("mesh exceeds 8^3 elements");
  if (o.steps < 1) throw InvalidModel("steps must be >= 1");
  if (o.samples < 0) throw InvalidModel("samples must be >= 0");
  const LameParams lame{o.lambda, o.mu};
  lame.validate();
  SolidModel m = SolidModel::unloaded(BoxMesh(box[0], box[1], box[2], o.nx, o.ny, o.nz), lame);
  const Vec3 t = parse_vec3(o.traction, "--traction");
  const Vec3 f = parse_vec3(o.body, "--body");
  m.set_face_traction(1, t);
  m.set_uniform_body(f);

  Certify3DOptions c;
  c.continuation_steps = o.steps;
  c.K = o.K;
  c.delta_mode = o.kmode == "identity" ? DeltaMode::kIdentity : DeltaMode::kDeltaDelta;
  c.v1_order = o.v1_order == "left" ? V1Order::kLeft : V1Order::kRight;
  c.local_min_samples = o.samples;
  c.convexity_samples = o.samples;
  const GapReport rep = certify_3d(m, g.seed, c);

  ordered_json echo = {{"command", "certify3d"},
                       {"lambda", o.lambda},
                       {"mu", o.mu},
                       {"box", {box[0], box[1], box[2]}},
                       {"mesh", {o.nx, o.ny, o.nz}},
                       {"traction_face", "x=L"},
                       {"traction", {t[0], t[1], t[2]}},
                       {"body", {f[0], f[1], f[2]}},
                       {"K", o.K},
                       {"kmode", o.kmode},
                       {"v1_order", o.v1_order},
                       {"steps", o.steps},
                       {"samples", o.samples},
                       {"seed", g.seed}};
  std::map<std::string, double> timings;
  if (g.timings) timings["total_s"] = seconds_since(t0);
  emit(g, report_json(rep, echo, timings).dump(2) + "\n");
  say(LogLevel::kInfo, "certify3d: " + to_string(rep.status) + ", gap " + format_double(rep.gap));
  if (!rep.diagnostics.empty()) say(LogLevel::kInfo, "certify3d: " + rep.diagnostics);
  return exit_code(rep.status);
}

int cmd_ktensor(const GlobalOptions& g, double lambda, double mu, const std::string& samples,
                int points, double k_large) {
  const auto t0 = std::chrono::steady_clock::now();
  const LameParams p{lambda, mu};
  p.validate();
  const std::vector<double> ks = parse_list(samples, "--samples");
  for (double k : ks) {
    if (!(k > 0.0)) throw InvalidModel("sample K values must be positive");
  }
  if (points < 2) throw InvalidModel("--points must be >= 2");

  ordered_json modes = ordered_json::array();
  for (DeltaMode mode : {DeltaMode::kIdentity, DeltaMode::kDeltaDelta}) {
    const KMaxResult km = k_max_bisection(p, mode);
    // Grid over [K_max / 100, 2 K_max]: wide enough to contain the sign change.
    const double lo = km.k_max / 100.0, hi = 2.0 * km.k_max;
    const double sweep = k_max_grid_sweep(p, mode, lo, hi, points);
    ordered_json sample_rows = ordered_json::array();
    for (double k : ks) {
      sample_rows.push_back({{"K", k}, {"min_eig", m_tensor_check(p, k, mode).min_eigenvalue}});
    }
    modes.push_back({{"mode", to_string(mode)},
                     {"K_max", km.k_max},
                     {"K_fail", km.k_fail},
                     {"bisection_iterations", km.iterations},
                     {"grid_sweep", {{"points", points}, {"K_lo", lo}, {"K_hi", hi}, {"K_max", sweep}}},
                     {"abs_difference", std::abs(sweep - km.k_max)},
                     {"samples", std::move(sample_rows)},
                     {"large_K", {{"K", k_large},
                                  {"min_eig", m_tensor_check(p, k_large, mode).min_eigenvalue}}}});
  }
  ordered_json j;
  j["version"] = kReportVersion;
  j["model"] = "ktensor";
  j["config_echo"] = {{"command", "ktensor"}, {"lambda", lambda}, {"mu", mu},
                      {"samples", ks}, {"points", points}, {"large_K", k_large}};
  j["modes"] = std::move(modes);
  if (g.timings) j["timings"] = {{"total_s", seconds_since(t0)}};
  emit(g, j.dump(2) + "\n");
  say(LogLevel::kInfo, "ktensor: done");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Duality certification for the nonlinear bar and solid"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--out", g.out, "output file, '-' for stdout")->capture_default_str();
  app.add_option("--seed", g.seed, "sampling seed")->capture_default_str();
  app.add_flag("--timings", g.timings, "include wall-clock timings in the report");

  Bar1DOptions bar;
  double amp = 0.1;
  auto* c1 = app.add_subcommand("certify1d", "certify the bar at one load amplitude");
  add_bar_options(c1, bar);
  c1->add_option("--amp", amp, "load amplitude p0 in P = p0 sin(mode pi x / L)")
      ->capture_default_str();

  Bar1DOptions sweep_bar;
  std::string amps;
  auto* s1 = app.add_subcommand("sweep1d", "certify the bar over a list of amplitudes (CSV)");
  add_bar_options(s1, sweep_bar);
  s1->add_option("--amps", amps, "comma-separated amplitudes");

  Solid3DOptions solid;
  auto* c3 = app.add_subcommand("certify3d", "certify the clamped box");
  c3->add_option("--lambda", solid.lambda, "Lame lambda")->capture_default_str();
  c3->add_option("--mu", solid.mu, "Lame mu")->capture_default_str();
  c3->add_option("--box", solid.box, "box dimensions lx,ly,lz")->capture_default_str();
  c3->add_option("--nx", solid.nx, "elements along x")->capture_default_str();
  c3->add_option("--ny", solid.ny, "elements along y")->capture_default_str();
  c3->add_option("--nz", solid.nz, "elements along z")->capture_default_str();
  c3->add_option("--traction", solid.traction, "traction on the face x = lx")
      ->capture_default_str();
  c3->add_option("--body", solid.body, "uniform body force")->capture_default_str();
  c3->add_option("--K", solid.K, "perturbation modulus (default: largest admissible)");
  c3->add_option("--kmode", solid.kmode, "reading of the 3/(32K) term of M")
      ->check(CLI::IsMember({"identity", "delta_delta"}))
      ->capture_default_str();
  c3->add_option("--v1-order", solid.v1_order, "product order in the v1 construction")
      ->check(CLI::IsMember({"left", "right"}))
      ->capture_default_str();
  c3->add_option("--steps", solid.steps, "load continuation steps")->capture_default_str();
  c3->add_option("--samples", solid.samples, "local-min and convexity samples")
      ->capture_default_str();

  double k_lambda = 1.0, k_mu = 1.0, k_large = 1e6;
  std::string k_samples = "0.25,0.5,1,1.5,1.8,2,2.5,3";
  int k_points = 10000;
  auto* kt = app.add_subcommand("ktensor", "admissible K for the M tensor, both readings");
  kt->add_option("--lambda", k_lambda, "Lame lambda")->capture_default_str();
  kt->add_option("--mu", k_mu, "Lame mu")->capture_default_str();
  kt->add_option("--samples", k_samples, "K values at which to report min eig(M)")
      ->capture_default_str();
  kt->add_option("--points", k_points, "grid-sweep points")->capture_default_str();
  kt->add_option("--large-K", k_large, "large K probe")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c1) return cmd_certify1d(g, bar, amp);
    if (*s1) return cmd_sweep1d(g, sweep_bar, amps);
    if (*c3) return cmd_certify3d(g, solid);
    if (*kt) return cmd_ktensor(g, k_lambda, k_mu, k_samples, k_points, k_large);
  } catch (const std::exception& e) {
    say(LogLevel::kQuiet, std::string("error: ") + e.what());
    return 1;
  }
  return 1;
}
