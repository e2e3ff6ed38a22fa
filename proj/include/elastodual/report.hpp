#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace elastodual {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One named pass/fail check with the measured value and its threshold.
struct Check {
  std::string name;
  bool passed = false;
  double value = kNaN;
  double threshold = kNaN;
};

enum class Status {
  kCertified,
  kFailed,
  kHypothesisViolated,
  kNoAdmissibleK,
  kSolverError,
};

std::string to_string(Status s);

/// Exit code for a report status: 0 certified, 1 solver error, 2 hypothesis
/// violated, 3 no admissible K, 4 checks ran but at least one failed.
int exit_code(Status s) noexcept;

struct StationarityResiduals {
  double z = kNaN;
  double v1 = kNaN;
  double v2 = kNaN;
  double u = kNaN;

  double max() const noexcept;
};

/// Certification record shared by the bar and the solid runs.
struct GapReport {
  std::string model;
  Status status = Status::kFailed;
  std::string diagnostics;
  std::uint64_t seed = 0;

  // primal
  double J_primal = kNaN;
  double residual_norm = kNaN;
  double min_eig = kNaN;
  double condition_norm = kNaN;
  double condition_limit = kNaN;
  bool condition_ok = false;
  int newton_iters = 0;
  int newton_stages = 0;

  // dual
  double K = kNaN;
  double J_dual = kNaN;
  double gap = kNaN;
  double min_positivity_margin = kNaN;
  double min_hessian_z = kNaN;
  double constraint_residual_norm = kNaN;
  StationarityResiduals stationarity;

  // saddle and sampling
  double r = kNaN;
  double r1 = kNaN;
  double r2 = kNaN;
  int saddle_samples = 0;
  int passed_z = 0;
  int passed_v = 0;
  int boundary_minima = 0;
  int local_min_samples = 0;
  int local_min_passed = 0;
  int upper_bound_samples = 0;
  int upper_bound_passed = 0;

  // kkt
  bool kkt_converged = false;
  int kkt_iters = 0;
  double kkt_dist_v = kNaN;
  double kkt_dist_u = kNaN;

  std::map<std::string, std::string> modes;
  /// Model-specific scalar diagnostics (e.g. K_max, skew defect in 3D).
  std::map<std::string, double> extra;
  std::vector<Check> checks;

  void add_check(std::string name, bool passed, double value, double threshold);
  bool all_checks_passed() const noexcept;
  const Check* find_check(const std::string& name) const noexcept;
  /// Sets status to certified or failed from the checks.
  void finalize();
};

/// Machine-readable report. `config_echo` is copied verbatim; timings are
/// only written when `timings` is non-empty so that default output is
/// byte-reproducible.
nlohmann::ordered_json report_json(const GapReport& report,
                               const nlohmann::ordered_json& config_echo = {},
                               const std::map<std::string, double>& timings = {});

inline constexpr int kReportVersion = 1;

}  // namespace elastodual
