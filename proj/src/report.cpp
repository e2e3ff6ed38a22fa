#include "elastodual/report.hpp"

#include <algorithm>

namespace elastodual {

std::string to_string(Status s) {
  switch (s) {
    case Status::kCertified: return "certified";
    case Status::kFailed: return "failed";
    case Status::kHypothesisViolated: return "hypothesis_violated";
    case Status::kNoAdmissibleK: return "no_admissible_k";
    case Status::kSolverError: return "solver_error";
  }
  return "unknown";
}

int exit_code(Status s) noexcept {
  switch (s) {
    case Status::kCertified: return 0;
    case Status::kSolverError: return 1;
    case Status::kHypothesisViolated: return 2;
    case Status::kNoAdmissibleK: return 3;
    case Status::kFailed: return 4;
  }
  return 1;
}

double StationarityResiduals::max() const noexcept {
  double m = 0.0;
  for (double v : {z, v1, v2, u}) {
    if (std::isnan(v)) return kNaN;
    m = std::max(m, v);
  }
  return m;
}

void GapReport::add_check(std::string name, bool passed, double value, double threshold) {
  checks.push_back({std::move(name), passed, value, threshold});
}

bool GapReport::all_checks_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* GapReport::find_check(const std::string& name) const noexcept {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void GapReport::finalize() {
  status = all_checks_passed() ? Status::kCertified : Status::kFailed;
}

namespace {

// Non-finite values become null so the document matches its own dump.
nlohmann::ordered_json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

nlohmann::ordered_json report_json(const GapReport& r, const nlohmann::ordered_json& config_echo,
                               const std::map<std::string, double>& timings) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["version"] = kReportVersion;
  j["model"] = r.model;
  j["status"] = to_string(r.status);
  j["exit_code"] = exit_code(r.status);
  j["diagnostics"] = r.diagnostics;
  j["seed"] = r.seed;
  j["config_echo"] = config_echo.is_null() ? ordered_json::object() : config_echo;

  j["primal"] = {
      {"J", num(r.J_primal)},
      {"residual_norm", num(r.residual_norm)},
      {"min_eig", num(r.min_eig)},
      {"condition_norm", num(r.condition_norm)},
      {"condition_limit", num(r.condition_limit)},
      {"condition_ok", r.condition_ok},
      {"newton_iters", r.newton_iters},
      {"newton_stages", r.newton_stages},
  };
  j["dual"] = {
      {"K", num(r.K)},
      {"J_star", num(r.J_dual)},
      {"gap", num(r.gap)},
      {"positivity_margin", num(r.min_positivity_margin)},
      {"hessian_z_min", num(r.min_hessian_z)},
      {"constraint_residual_norm", num(r.constraint_residual_norm)},
      {"stationarity",
       {{"z", num(r.stationarity.z)},
        {"v1", num(r.stationarity.v1)},
        {"v2", num(r.stationarity.v2)},
        {"u", num(r.stationarity.u)}}},
  };
  j["saddle"] = {
      {"r", num(r.r)},
      {"r1", num(r.r1)},
      {"r2", num(r.r2)},
      {"samples", r.saddle_samples},
      {"passed_z", r.passed_z},
      {"passed_v", r.passed_v},
      {"boundary_minima", r.boundary_minima},
  };
  j["local_min"] = {{"samples", r.local_min_samples}, {"passed", r.local_min_passed}};
  j["upper_bound"] = {{"samples", r.upper_bound_samples}, {"passed", r.upper_bound_passed}};
  j["kkt"] = {
      {"converged", r.kkt_converged},
      {"iters", r.kkt_iters},
      {"dist_v", num(r.kkt_dist_v)},
      {"dist_u", num(r.kkt_dist_u)},
  };

  ordered_json modes = ordered_json::object();
  for (const auto& [k, v] : r.modes) modes[k] = v;
  j["mode"] = std::move(modes);

  ordered_json extra = ordered_json::object();
  for (const auto& [k, v] : r.extra) extra[k] = num(v);
  j["extra"] = std::move(extra);

  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) {
    checks.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"value", num(c.value)}, {"threshold", num(c.threshold)}});
  }
  j["checks"] = std::move(checks);

  if (!timings.empty()) {
    ordered_json t = ordered_json::object();
    for (const auto& [k, v] : timings) t[k] = num(v);
    j["timings"] = std::move(t);
  }
  return j;
}

}  // namespace elastodual
