#include "homog/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "homog/errors.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
T get_field(const json& doc, const char* key, const char* type_name) {
  const json& v = doc.at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: '") + key + "' must be " + type_name);
  }
}

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, _] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

double positive(const json& doc, const char* key) {
  if (!doc.at(key).is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  const double v = doc.at(key).get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config: '") + key + "' must be positive");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json vec_json(const RVec& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json matrix_json(const Eigen::MatrixXd& a) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(vec_json(a.row(i).transpose()));
  return out;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  reject_unknown(doc,
                 {"measure", "measure_file", "coefficient", "resolution", "eps", "theta", "tolerances",
                  "kappa_points", "output", "workers", "seed"},
                 "config");
  ExperimentConfig cfg;

  if (doc.contains("measure") == doc.contains("measure_file"))
    throw ConfigError("config: exactly one of 'measure' and 'measure_file' is required");
  if (doc.contains("measure")) {
    cfg.measure_doc = doc.at("measure");
  } else {
    std::filesystem::path path = get_field<std::string>(doc, "measure_file", "a string");
    if (path.is_relative()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read measure file " + path.string());
    try {
      cfg.measure_doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config: invalid JSON in " + path.string() + ": " + e.what());
    }
  }
  cfg.measure = parse_measure(cfg.measure_doc);

  if (doc.contains("coefficient")) cfg.coefficient = get_field<std::string>(doc, "coefficient", "a string");
  parse_expr(cfg.coefficient, cfg.measure.dim());

  if (doc.contains("resolution")) cfg.resolution = get_field<int>(doc, "resolution", "an integer");
  if (cfg.resolution < 2) throw ConfigError("config: 'resolution' must be >= 2");

  if (!doc.contains("eps")) throw ConfigError("config: missing field 'eps'");
  if (!doc.at("eps").is_array()) throw ConfigError("config: 'eps' must be an array of numbers");
  for (const auto& v : doc.at("eps")) {
    if (!v.is_number()) throw ConfigError("config: 'eps' must be an array of numbers");
    const double e = v.get<double>();
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("config: eps " + format_double(e) + " is outside (0, 1]");
    cfg.eps.push_back(e);
  }
  if (cfg.eps.empty()) throw ConfigError("config: empty eps list");
  std::sort(cfg.eps.begin(), cfg.eps.end(), std::greater<>());
  if (std::adjacent_find(cfg.eps.begin(), cfg.eps.end()) != cfg.eps.end())
    throw ConfigError("config: duplicate eps value");

  if (doc.contains("theta")) {
    const json& t = doc.at("theta");
    if (!t.is_object()) throw ConfigError("config: 'theta' must be an object");
    reject_unknown(t, {"magnitudes", "diagonals"}, "config.theta");
    if (t.contains("magnitudes")) {
      if (!t.at("magnitudes").is_array()) throw ConfigError("config: theta.magnitudes must be an array");
      for (const auto& v : t.at("magnitudes")) {
        if (!v.is_number() || v.get<double>() < 0.0)
          throw ConfigError("config: theta.magnitudes must be nonnegative numbers");
        cfg.theta.magnitudes.push_back(v.get<double>());
      }
    }
    if (t.contains("diagonals")) cfg.theta.diagonals = get_field<bool>(t, "diagonals", "a boolean");
  }

  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    if (!t.is_object()) throw ConfigError("config: 'tolerances' must be an object");
    reject_unknown(t, {"corrector", "solve", "remainder", "power", "eigen"}, "config.tolerances");
    if (t.contains("corrector")) cfg.tolerances.corrector = positive(t, "corrector");
    if (t.contains("solve")) cfg.tolerances.solve = positive(t, "solve");
    if (t.contains("remainder")) cfg.tolerances.remainder = positive(t, "remainder");
    if (t.contains("power")) cfg.tolerances.power = positive(t, "power");
    if (t.contains("eigen")) cfg.tolerances.eigen = positive(t, "eigen");
  }

  if (doc.contains("kappa_points")) cfg.kappa_points = get_field<int>(doc, "kappa_points", "an integer");
  if (cfg.kappa_points < 1) throw ConfigError("config: 'kappa_points' must be >= 1");
  if (doc.contains("output")) cfg.output = get_field<std::string>(doc, "output", "a string");
  if (doc.contains("workers")) cfg.workers = get_field<int>(doc, "workers", "an integer");
  if (cfg.workers < 0) throw ConfigError("config: 'workers' must be >= 0");
  if (doc.contains("seed")) cfg.seed = get_field<std::uint64_t>(doc, "seed", "a nonnegative integer");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

ordered_json canonical_config(const ExperimentConfig& cfg) {
  ordered_json out;
  out["measure"] = ordered_json::parse(to_json(cfg.measure).dump());
  out["coefficient"] = cfg.coefficient;
  out["resolution"] = cfg.resolution;
  out["eps"] = cfg.eps;
  out["theta"] = {{"magnitudes", cfg.theta.magnitudes}, {"diagonals", cfg.theta.diagonals}};
  out["tolerances"] = {{"corrector", cfg.tolerances.corrector},
                       {"solve", cfg.tolerances.solve},
                       {"remainder", cfg.tolerances.remainder},
                       {"power", cfg.tolerances.power},
                       {"eigen", cfg.tolerances.eigen}};
  out["kappa_points"] = cfg.kappa_points;
  out["seed"] = cfg.seed;
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(cfg).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<RVec> theta_samples(double eps, int dim, const ThetaSampling& sampling) {
  if (!(eps > 0.0)) throw ConfigError("theta_samples: eps must be positive");
  const double top = std::numbers::pi / eps * (1.0 - std::ldexp(1.0, -8));
  std::vector<double> magnitudes = sampling.magnitudes;
  if (magnitudes.empty()) {
    magnitudes.push_back(0.5);
    for (double m = 1.0; m < top; m *= 2.0) magnitudes.push_back(m);
    if (magnitudes.back() >= top) magnitudes.pop_back();
    magnitudes.push_back(top);
  }

  std::vector<RVec> directions;
  for (int k = 0; k < dim; ++k) directions.push_back(RVec::Unit(dim, k));
  if (sampling.diagonals && dim >= 2) {
    for (int signs = 0; signs < (1 << (dim - 1)); ++signs) {
      RVec v = RVec::Ones(dim);
      for (int k = 1; k < dim; ++k) {
        if ((signs >> (k - 1)) & 1) v[k] = -1.0;
      }
      directions.push_back(v / std::sqrt(static_cast<double>(dim)));
    }
  }

  std::vector<RVec> out{RVec::Zero(dim)};
  for (double m : magnitudes) {
    if (m == 0.0) continue;
    for (const RVec& dir : directions) {
      const RVec theta = m * dir;
      if (((eps * theta).array() >= std::numbers::pi).any() || ((eps * theta).array() < -std::numbers::pi).any())
        throw ConfigError("theta magnitude " + format_double(m) + " leaves the fundamental domain at eps " +
                          format_double(eps));
      out.push_back(theta);
    }
  }
  return out;
}

std::vector<CVec> probe_data(const DiscreteSpace& sp, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(sp.num_dofs());
  std::vector<CVec> probes;
  probes.push_back(CVec::Ones(n));
  probes.push_back(interpolate(sp, [](std::span<const double> y) {
    return std::exp(cplx(0.0, 2.0 * std::numbers::pi * y[0]));
  }));
  probes.push_back(random_vector(n, seed));
  return probes;
}

StudySetup prepare_study(const ExperimentConfig& cfg) {
  StudySetup setup{cfg, {}, nullptr};
  const Expr expr = parse_expr(cfg.coefficient, cfg.measure.dim());
  setup.coefficient = check_bounds(expr, cfg.measure, cfg.resolution);
  auto space = std::make_shared<const DiscreteSpace>(build_space(cfg.measure, cfg.resolution));
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  setup.model = std::make_shared<HomogenizationModel>(space, setup.coefficient,
                                                      ModelOptions{cfg.tolerances.corrector, workers});
  return setup;
}

std::vector<FiberRecord> study_fibers(const StudySetup& setup, double eps, bool with_remainder) {
  const ExperimentConfig& cfg = setup.cfg;
  const HomogenizationModel& model = *setup.model;
  const auto thetas = theta_samples(eps, model.space().dim(), cfg.theta);
  const auto probes = with_remainder ? probe_data(model.space(), cfg.seed) : std::vector<CVec>{};
  FiberOptions opts;
  opts.solve_tol = cfg.tolerances.solve;
  opts.remainder_tol = cfg.tolerances.remainder;
  opts.power.tol = cfg.tolerances.power;
  opts.power.seed = cfg.seed;

  std::vector<FiberRecord> records(thetas.size());
  const int workers = cfg.workers > 0 ? cfg.workers : default_workers();
  parallel_for(thetas.size(), workers, [&](std::size_t i) {
    FiberRecord& rec = records[i];
    rec.eps = eps;
    rec.theta = thetas[i];
    try {
      const FiberOperator op(model, eps, thetas[i], opts);
      rec.sigma = op.error_operator_norm();
      for (const CVec& f : probes) {
        const double f_norm = m_norm(model.mass(), f);
        if (f_norm == 0.0) continue;
        const RemainderSolution rem = op.solve_remainder(f);
        const CVec osc = rem.R - CVec::Constant(rem.R.size(), rem.mean);
        rec.rem_osc = std::max(rec.rem_osc, m_norm(model.mass(), osc) / f_norm);
        rec.rem_mean = std::max(rec.rem_mean, eps * std::abs(rem.mean) / f_norm);
        rec.rem_mean_abs = std::max(rec.rem_mean_abs, std::abs(rem.mean) / f_norm);
        rec.defect_ratio = std::max(rec.defect_ratio, m_norm(model.mass(), op.defect(f, rem)) / (eps * f_norm));
        rec.compatibility = std::max(rec.compatibility, rem.compatibility);
      }
    } catch (const Error& e) {
      std::ostringstream os;
      os << e.what() << " (eps " << eps << ", theta";
      for (Eigen::Index a = 0; a < thetas[i].size(); ++a) os << ' ' << thetas[i][a];
      os << ')';
      if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(os.str());
      if (dynamic_cast<const HypothesisError*>(&e)) throw HypothesisError(os.str());
      throw NumericalError(os.str());
    }
  });
  return records;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

namespace {

ConvergenceRow summarize(double eps, const std::vector<FiberRecord>& records) {
  ConvergenceRow row;
  row.eps = eps;
  row.fibers = static_cast<int>(records.size());
  row.sup_sigma = -1.0;
  for (const FiberRecord& rec : records) {
    if (rec.sigma > row.sup_sigma) {
      row.sup_sigma = rec.sigma;
      row.argmax_theta = rec.theta;
    }
    row.rem_osc = std::max(row.rem_osc, rec.rem_osc);
    row.rem_mean = std::max(row.rem_mean, rec.rem_mean);
    row.defect_ratio = std::max(row.defect_ratio, rec.defect_ratio);
    if (rec.theta.isZero(0.0)) row.rem_mean_theta0 = std::max(row.rem_mean_theta0, rec.rem_mean_abs);
  }
  return row;
}

ConvergenceReport empty_report(const StudySetup& setup) {
  ConvergenceReport report;
  report.a_hom = setup.model->a_hom();
  report.provenance["config_hash"] = config_hash(setup.cfg);
  report.provenance["version"] = HOMOG_VERSION;
  report.provenance["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                               "." + std::to_string(EIGEN_MINOR_VERSION);
  report.provenance["config"] = canonical_config(setup.cfg);
  return report;
}

void fit(ConvergenceReport& report) {
  std::vector<double> x, y;
  for (const auto& row : report.rows) {
    if (!(row.sup_sigma > 0.0)) continue;
    x.push_back(std::log(row.eps));
    y.push_back(std::log(row.sup_sigma));
  }
  report.slope = fit_slope(x, y);
}

PoincareEstimate study_poincare(const StudySetup& setup) {
  PoincareOptions opts;
  opts.eigen.tol = setup.cfg.tolerances.eigen;
  opts.workers = setup.cfg.workers > 0 ? setup.cfg.workers : default_workers();
  return poincare_constant(setup.model->space(), default_kappa_grid(setup.model->space().dim(), setup.cfg.kappa_points),
                           opts);
}

}  // namespace

ConvergenceReport run_convergence_study(const StudySetup& setup) {
  ConvergenceReport report = empty_report(setup);
  for (double eps : setup.cfg.eps) report.rows.push_back(summarize(eps, study_fibers(setup, eps, false)));
  fit(report);
  return report;
}

void run_remainder_study(const StudySetup& setup, ConvergenceReport& report) {
  for (auto& row : report.rows) {
    const ConvergenceRow full = summarize(row.eps, study_fibers(setup, row.eps, true));
    row.rem_osc = full.rem_osc;
    row.rem_mean = full.rem_mean;
    row.defect_ratio = full.defect_ratio;
    row.rem_mean_theta0 = full.rem_mean_theta0;
  }
}

ConvergenceReport run_sweep(const StudySetup& setup) {
  ConvergenceReport report = empty_report(setup);
  for (double eps : setup.cfg.eps) report.rows.push_back(summarize(eps, study_fibers(setup, eps, true)));
  fit(report);
  report.poincare = study_poincare(setup);
  return report;
}

ordered_json report_json(const ConvergenceReport& report) {
  ordered_json out;
  out["rows"] = ordered_json::array();
  for (const auto& row : report.rows) {
    out["rows"].push_back({{"eps", row.eps},
                           {"sup_sigma", row.sup_sigma},
                           {"argmax_theta", vec_json(row.argmax_theta)},
                           {"rem_osc", row.rem_osc},
                           {"rem_mean", row.rem_mean},
                           {"defect_ratio", row.defect_ratio},
                           {"rem_mean_theta0", row.rem_mean_theta0},
                           {"fibers", row.fibers}});
  }
  out["slope"] = number_or_null(report.slope);
  out["A_hom"] = matrix_json(report.a_hom);
  if (report.poincare) {
    out["poincare"] = {{"lambda_min", report.poincare->lambda_min},
                       {"kappa_argmin", vec_json(report.poincare->kappa_argmin)},
                       {"C_P", report.poincare->C_P},
                       {"grid_points", report.poincare->samples.size()}};
  }
  out["provenance"] = report.provenance;
  return out;
}

std::string report_csv(const ConvergenceReport& report) {
  std::ostringstream os;
  os << "eps,sup_sigma,argmax_theta,rem_osc,rem_mean,defect_ratio\n";
  for (const auto& row : report.rows) {
    os << format_double(row.eps) << ',' << format_double(row.sup_sigma) << ',';
    for (Eigen::Index a = 0; a < row.argmax_theta.size(); ++a) os << (a ? ";" : "") << format_double(row.argmax_theta[a]);
    os << ',' << format_double(row.rem_osc) << ',' << format_double(row.rem_mean) << ','
       << format_double(row.defect_ratio) << '\n';
  }
  return os.str();
}

void emit_report(const ConvergenceReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
  };
  write(dir / "report.json", report_json(report).dump(2) + "\n");
  write(dir / "report.csv", report_csv(report));
}

}  // namespace homog
