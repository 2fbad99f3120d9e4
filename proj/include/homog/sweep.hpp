#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homog/fiber.hpp"
#include "homog/measure.hpp"
#include "homog/spectral.hpp"

namespace homog {

struct ThetaSampling {
  std::vector<double> magnitudes;  // empty: 0, 0.5, 1, 2, 4, ... up to pi/eps (1 - 2^-8)
  bool diagonals = true;
};

struct Tolerances {
  double corrector = 1e-10;
  double solve = 1e-10;
  double remainder = 1e-9;
  double power = 1e-10;
  double eigen = 1e-8;
};

struct ExperimentConfig {
  nlohmann::json measure_doc;
  PeriodicMeasure measure = lebesgue_measure(1);
  std::string coefficient = "1";
  int resolution = 256;
  std::vector<double> eps;  // sorted descending
  ThetaSampling theta;
  Tolerances tolerances;
  int kappa_points = 9;
  std::string output = "report";
  int workers = 1;
  std::uint64_t seed = kDefaultSeed;
};

/// Reads a config document. `base_dir` resolves a relative "measure_file".
/// Unknown keys, an empty eps list and eps outside (0, 1] are ConfigErrors.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Config fields that determine the results (everything but workers and
/// output), in a fixed key order.
nlohmann::ordered_json canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

/// θ = 0 once, then every magnitude times every direction (axes, plus the
/// diagonals (1, ±1, ...)/sqrt(d) when enabled).
std::vector<RVec> theta_samples(double eps, int dim, const ThetaSampling& sampling);

/// Probe data for the remainder and defect statistics: the constant 1,
/// the mode exp(2 pi i y1) and a seeded random vector.
std::vector<CVec> probe_data(const DiscreteSpace& sp, std::uint64_t seed);

/// Everything a sweep needs that does not depend on eps.
struct StudySetup {
  ExperimentConfig cfg;
  CoefficientField coefficient;
  std::shared_ptr<HomogenizationModel> model;
};
StudySetup prepare_study(const ExperimentConfig& cfg);

struct FiberRecord {
  double eps = 0.0;
  RVec theta;
  double sigma = 0.0;
  double rem_osc = 0.0;       // max over probes of ||R - ∫R||_M / ||F||_M
  double rem_mean = 0.0;      // max over probes of eps |∫R| / ||F||_M
  double defect_ratio = 0.0;  // max over probes of ||u - U||_M / (eps ||F||_M)
  double rem_mean_abs = 0.0;  // max over probes of |∫R| / ||F||_M
  double compatibility = 0.0;
};

struct ConvergenceRow {
  double eps = 0.0;
  double sup_sigma = 0.0;
  RVec argmax_theta;
  double rem_osc = 0.0;
  double rem_mean = 0.0;
  double defect_ratio = 0.0;
  double rem_mean_theta0 = 0.0;
  int fibers = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // eps descending
  double slope = 0.0;                // least squares of log sup_sigma on log eps
  Eigen::MatrixXd a_hom;
  std::optional<PoincareEstimate> poincare;
  nlohmann::ordered_json provenance;
};

/// Per-fiber records for one eps. `with_remainder` adds the probe statistics.
std::vector<FiberRecord> study_fibers(const StudySetup& setup, double eps, bool with_remainder);

/// sup over θ of σ(ε, θ) per eps and the fitted slope.
ConvergenceReport run_convergence_study(const StudySetup& setup);
/// Fills the remainder and defect columns of an existing report.
void run_remainder_study(const StudySetup& setup, ConvergenceReport& report);
/// Convergence and remainder studies in one pass over the fibers, plus the
/// Poincare estimate.
ConvergenceReport run_sweep(const StudySetup& setup);

double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::ordered_json report_json(const ConvergenceReport& report);
std::string report_csv(const ConvergenceReport& report);
/// Writes report.json and report.csv into `dir`, creating it if needed.
void emit_report(const ConvergenceReport& report, const std::filesystem::path& dir);

}  // namespace homog
