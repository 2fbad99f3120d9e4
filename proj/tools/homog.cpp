// homog: cell problems, Poincare constants, fiber solves and convergence
// sweeps for periodic homogenization on singular measures.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "homog/errors.hpp"
#include "homog/parallel.hpp"
#include "homog/sweep.hpp"

namespace {

using namespace homog;
using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_vec(const RVec& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + ")";
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw ConfigError(std::string(what) + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

void write_json(const std::filesystem::path& dir, const std::string& name, const ordered_json& doc) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / name).string());
  out << doc.dump(2) << '\n';
}

struct Common {
  std::string config;
  int workers = -1;
};

ExperimentConfig load(const Common& common) {
  ExperimentConfig cfg = load_config(common.config);
  if (common.workers >= 0) cfg.workers = common.workers;
  if (const char* seed = std::getenv("HOMOG_SEED")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(seed, &used, 0);
      if (used != std::string(seed).size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
      throw ConfigError(std::string("HOMOG_SEED is not an unsigned integer: '") + seed + "'");
    }
  }
  return cfg;
}

void print_warnings(const DiscreteSpace& sp) {
  for (const auto& w : sp.warnings()) std::cerr << "warning: " << w << '\n';
}

int run_check(const Common& common) {
  const ExperimentConfig cfg = load(common);
  const Expr expr = parse_expr(cfg.coefficient, cfg.measure.dim());
  const DiscreteSpace sp = build_space(cfg.measure, cfg.resolution);
  print_warnings(sp);
  std::cout << "measure: dim " << cfg.measure.dim() << ", " << cfg.measure.components().size()
            << " components, mass " << fmt(total_mass(cfg.measure)) << '\n';
  const CoefficientField a = check_bounds(expr, cfg.measure, cfg.resolution);
  std::cout << "coefficient: " << cfg.coefficient << " in [" << fmt(a.a_min) << ", " << fmt(a.a_max) << "]\n";
  const Connectivity c = check_connectivity(sp);
  std::cout << "support: " << sp.num_dofs() << " dofs, " << c.components << " component(s)\n";
  require_connected(sp);
  std::cout << "hypotheses ok\n";
  return 0;
}

int run_cell(const Common& common, const std::string& out) {
  const ExperimentConfig cfg = load(common);
  const StudySetup setup = prepare_study(cfg);
  print_warnings(setup.model->space());
  const auto& a_hom = setup.model->a_hom();
  std::cout << "A_hom (n = " << cfg.resolution << ")\n";
  for (Eigen::Index i = 0; i < a_hom.rows(); ++i) {
    for (Eigen::Index j = 0; j < a_hom.cols(); ++j) std::printf("%s%18.12f", j ? " " : "", a_hom(i, j));
    std::printf("\n");
  }
  std::cout << "corrector residual " << fmt(setup.model->correctors().residual) << ", side condition "
            << fmt(setup.model->correctors().side_condition) << '\n';
  if (!out.empty()) {
    ordered_json doc;
    doc["A_hom"] = ordered_json::array();
    for (Eigen::Index i = 0; i < a_hom.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index j = 0; j < a_hom.cols(); ++j) row.push_back(a_hom(i, j));
      doc["A_hom"].push_back(row);
    }
    doc["resolution"] = cfg.resolution;
    doc["config_hash"] = config_hash(cfg);
    write_json(out, "cell.json", doc);
  }
  return 0;
}

int run_poincare(const Common& common, const std::string& out) {
  const ExperimentConfig cfg = load(common);
  const DiscreteSpace sp = build_space(cfg.measure, cfg.resolution);
  print_warnings(sp);
  PoincareOptions opts;
  opts.eigen.tol = cfg.tolerances.eigen;
  opts.workers = cfg.workers > 0 ? cfg.workers : default_workers();
  const PoincareEstimate est = poincare_constant(sp, default_kappa_grid(sp.dim(), cfg.kappa_points), opts);
  std::cout << "lambda_min " << fmt(est.lambda_min) << '\n'
            << "kappa_argmin " << fmt_vec(est.kappa_argmin) << '\n'
            << "C_P " << fmt(est.C_P) << '\n';
  if (!out.empty()) {
    ordered_json doc;
    doc["lambda_min"] = est.lambda_min;
    doc["kappa_argmin"] = std::vector<double>(est.kappa_argmin.data(), est.kappa_argmin.data() + est.kappa_argmin.size());
    doc["C_P"] = est.C_P;
    doc["grid_points"] = est.samples.size();
    doc["resolution"] = cfg.resolution;
    doc["config_hash"] = config_hash(cfg);
    write_json(out, "poincare.json", doc);
  }
  return 0;
}

int run_fiber(const Common& common, double eps, const std::string& theta_text, const std::string& f_text) {
  const ExperimentConfig cfg = load(common);
  const StudySetup setup = prepare_study(cfg);
  const HomogenizationModel& model = *setup.model;
  const auto theta_list = parse_list(theta_text, "--theta");
  if (static_cast<int>(theta_list.size()) != model.space().dim())
    throw ConfigError("--theta needs " + std::to_string(model.space().dim()) + " components");
  const RVec theta = Eigen::Map<const RVec>(theta_list.data(), static_cast<Eigen::Index>(theta_list.size()));
  const CVec f = interpolate(model.space(), parse_expr(f_text, model.space().dim()));

  FiberOptions opts;
  opts.solve_tol = cfg.tolerances.solve;
  opts.remainder_tol = cfg.tolerances.remainder;
  opts.power.tol = cfg.tolerances.power;
  opts.power.seed = cfg.seed;
  const FiberOperator op(model, eps, theta, opts);
  const double f_norm = m_norm(model.mass(), f);
  const RemainderSolution rem = op.solve_remainder(f);
  const double safe = f_norm > 0.0 ? f_norm : 1.0;

  std::cout << "eps " << fmt(eps) << ", theta " << fmt_vec(theta) << ", kappa " << fmt_vec(op.kappa()) << '\n'
            << "c_theta " << fmt(rem.c.real()) << (rem.c.imag() < 0 ? " - " : " + ") << fmt(std::abs(rem.c.imag()))
            << "i\n"
            << "|u - c_theta|_M / |F|_M " << fmt(m_norm(model.mass(), op.error_map(f)) / safe)
            << '\n'
            << "sigma " << fmt(op.error_operator_norm()) << '\n'
            << "|R - mean R|_M / |F|_M " << fmt(m_norm(model.mass(), rem.R - CVec::Constant(rem.R.size(), rem.mean)) / safe)
            << '\n'
            << "eps |mean R| / |F|_M " << fmt(eps * std::abs(rem.mean) / safe) << '\n'
            << "|u - U|_M / (eps |F|_M) " << fmt(m_norm(model.mass(), op.defect(f, rem)) / (eps * safe)) << '\n'
            << "remainder residual " << fmt(rem.residual) << ", compatibility defect " << fmt(rem.compatibility)
            << '\n';
  return 0;
}

int run_sweep_cmd(const Common& common, const std::string& out) {
  ExperimentConfig cfg = load(common);
  if (!out.empty()) cfg.output = out;
  const StudySetup setup = prepare_study(cfg);
  print_warnings(setup.model->space());
  const ConvergenceReport report = run_sweep(setup);
  emit_report(report, cfg.output);
  std::cout << report_csv(report);
  std::cout << "slope " << fmt(report.slope) << '\n';
  if (report.poincare) std::cout << "lambda_min " << fmt(report.poincare->lambda_min) << ", C_P " << fmt(report.poincare->C_P) << '\n';
  std::cout << "wrote " << (std::filesystem::path(cfg.output) / "report.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic homogenization on singular measures"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--workers", common.workers, "Worker threads (0: all cores); overrides the config")
      ->check(CLI::NonNegativeNumber);

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config,-c", common.config, "Experiment config (JSON)")->required();
  };

  auto* check = app.add_subcommand("check", "Check the standing hypotheses only");
  add_config(check);

  std::string cell_out;
  auto* cell = app.add_subcommand("cell", "Solve the cell problems and print A_hom");
  add_config(cell);
  cell->add_option("--out", cell_out, "Directory for cell.json");

  std::string poincare_out;
  auto* poincare = app.add_subcommand("poincare", "Estimate the Poincare constant over the kappa grid");
  add_config(poincare);
  poincare->add_option("--out", poincare_out, "Directory for poincare.json");

  double eps = 0.0;
  std::string theta_text;
  std::string f_text = "1";
  auto* fiber = app.add_subcommand("fiber", "Solve one fiber problem and report error statistics");
  add_config(fiber);
  fiber->add_option("--eps", eps, "Period eps")->required();
  fiber->add_option("--theta", theta_text, "Comma-separated theta")->required();
  fiber->add_option("--F", f_text, "Datum F(y) as an expression");

  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run the eps-theta convergence sweep");
  add_config(sweep);
  sweep->add_option("--out", sweep_out, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*check) return run_check(common);
    if (*cell) return run_cell(common, cell_out);
    if (*poincare) return run_poincare(common, poincare_out);
    if (*fiber) return run_fiber(common, eps, theta_text, f_text);
    if (*sweep) return run_sweep_cmd(common, sweep_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
