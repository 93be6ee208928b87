#include "tolopt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tolopt/error.hpp"

namespace tolopt {

StudySetup Study::setup() const
{
  StudySetup s;
  s.model = model.get();
  s.base = &base;
  s.kl = &kl;
  s.samples = &samples;
  s.mp = cfg.mp;
  s.saa.threads = cfg.threads;
  s.saa.field_delta = cfg.field_delta;
  s.saa.design_delta = cfg.design_delta;
  s.sqp = cfg.sqp;
  return s;
}

Study make_study(RunConfig cfg)
{
  Study st;
  st.base = parameterize(read_blade_points(cfg.blade_file));
  if (cfg.correlation_w_auto) {
    cfg.correlation.w = auto_correlation_width(st.base);
    cfg.correlation.validate();
  }
  st.kl = kl_decompose(st.base, cfg.correlation, cfg.energy_fraction);
  st.kv = make_knots(st.base.s_min(), st.base.s_max(), cfg.n_basis, cfg.refinement);
  st.samples = cfg.cache_dir.empty() ? make_samples(cfg.seed, cfg.samples, st.kl.n_modes())
                                     : cached_samples(cfg.cache_dir, cfg.seed, cfg.samples, st.kl.n_modes());
  st.model = make_model(cfg.model, st.base);
  st.variability = variability_coefficients(st.kv, st.base);
  st.budget = cfg.budget ? *cfg.budget : cfg.budget_fraction * cfg.sigma_max * st.variability.sum();
  st.cfg = std::move(cfg);
  return st;
}

namespace {

using nlohmann::ordered_json;

std::string hex(std::uint64_t h)
{
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

class Artifacts
{
public:
  Artifacts(const std::string& dir, const std::string& command, const RunConfig& cfg)
      : dir_(dir), command_(command), cfg_(cfg)
  {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
      throw config_error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  /// CSV stream whose first line records the command, config hash and seed.
  std::ofstream csv(const std::string& name, std::uint64_t seed) const
  {
    std::ofstream out(dir_ / name);
    if (!out)
      throw config_error("cannot write " + (dir_ / name).string());
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "# tolopt " << command_ << " config_hash=" << hex(cfg_.hash) << " seed=" << seed << '\n';
    return out;
  }

  ordered_json summary(std::uint64_t seed) const
  {
    ordered_json j;
    j["command"] = command_;
    j["config_hash"] = hex(cfg_.hash);
    j["seed"] = seed;
    return j;
  }

  void write_json(const ordered_json& j) const
  {
    std::ofstream out(dir_ / "result.json");
    if (!out)
      throw config_error("cannot write " + (dir_ / "result.json").string());
    out << j.dump(2) << '\n';
  }

  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  std::string command_;
  const RunConfig& cfg_;
};

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void put_solver(ordered_json& j, const OptimizationResult& r)
{
  j["status"] = to_string(r.status);
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["objective"] = r.objective;
  j["kkt_residual"] = r.kkt_residual;
  j["constraint_violation"] = r.constraint_violation;
  j["x"] = to_std(r.x);
}

void put_design(ordered_json& j, const DesignVector& d)
{
  j["design"] = {{"chebyshev", d.chebyshev}, {"stagger_rad", d.stagger}};
}

void write_history(const Artifacts& art, const OptimizationResult& r, std::uint64_t seed)
{
  auto out = art.csv("history.csv", seed);
  write_history_csv(out, r);
}

void write_profile(const Artifacts& art, const ToleranceField& tol, const BladeSurface& base, std::uint64_t seed)
{
  auto out = art.csv("sigma_profile.csv", seed);
  write_sigma_profile(out, tol, base);
}

int cmd_sample(const Study& st, const Artifacts& art, std::ostream& log)
{
  const std::uint64_t seed = st.cfg.seed;
  const Eigen::VectorXd sigma = st.baseline().on_grid(st.base.s);
  const BladeSurface nominal = apply_design(st.base, st.cfg.initial_design);
  auto out = art.csv("realizations.csv", seed);
  out << "realization,index,s,x,y,e\n";
  const Eigen::Index k_max = std::min(st.cfg.realizations, st.samples.size());
  for (Eigen::Index k = 0; k < k_max; ++k) {
    const Eigen::VectorXd e = scale_field(sample_unit_field(st.kl, st.samples.xi.row(k).transpose()), sigma);
    const BladeSurface m = apply_error(nominal, e);
    for (std::size_t j = 0; j < m.size(); ++j)
      out << k << ',' << j << ',' << m.s[static_cast<Eigen::Index>(j)] << ',' << m.points[j].x() << ','
          << m.points[j].y() << ',' << e[static_cast<Eigen::Index>(j)] << '\n';
  }
  auto j = art.summary(seed);
  j["realizations"] = k_max;
  j["sigma"] = st.cfg.sigma_max;
  art.write_json(j);
  log << "sample: wrote " << k_max << " realizations\n";
  return exit_ok;
}

int cmd_kl_info(const Study& st, const Artifacts& art, std::ostream& log)
{
  const std::uint64_t seed = st.cfg.seed;
  const Eigen::VectorXd& spec = st.kl.spectrum;
  const double trace = spec.cwiseMax(0.0).sum();
  auto out = art.csv("spectrum.csv", seed);
  out << "index,eigenvalue,cumulative_fraction,retained\n";
  double cum = 0.0;
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    cum += std::max(spec[i], 0.0);
    out << i << ',' << spec[i] << ',' << cum / trace << ',' << (i < st.kl.n_modes() ? 1 : 0) << '\n';
  }
  auto j = art.summary(seed);
  j["grid_size"] = st.kl.grid_size();
  j["n_modes"] = st.kl.n_modes();
  j["energy_fraction"] = st.kl.energy_fraction;
  j["positive_eigenvalues"] = st.kl.n_positive;
  j["significant_negative_eigenvalues"] = st.kl.n_significant_negative;
  j["correlation_w"] = st.cfg.correlation.w;
  art.write_json(j);
  log << "kl-info: " << st.kl.n_modes() << " modes of " << spec.size() << '\n';
  return exit_ok;
}

int cmd_optimize_tolerance(const Study& st, const Artifacts& art, std::ostream& log)
{
  const std::uint64_t seed = st.cfg.seed;
  const ToleranceResult r = optimize_tolerance(st.setup(), st.cfg.initial_design, st.kv, st.cfg.sigma_max, st.budget);
  write_history(art, r.opt, seed);
  write_profile(art, r.tol, st.base, seed);
  auto j = art.summary(seed);
  j["samples"] = st.samples.size();
  put_solver(j, r.opt);
  j["initial_objective"] = r.initial_mean_J;
  j["budget"] = st.budget;
  j["variability"] = total_variability(r.tol, st.base);
  j["sigma_max"] = st.cfg.sigma_max;
  j["sigma_coeffs"] = to_std(r.tol.coeffs());
  art.write_json(j);
  log << "optimize-tolerance: " << to_string(r.opt.status) << " after " << r.opt.iterations
      << " iterations, mean J " << r.initial_mean_J << " -> " << r.opt.objective << '\n';
  return r.opt.status == SqpStatus::converged ? exit_ok : exit_numerical;
}

int cmd_optimize_geometry(const Study& st, const Artifacts& art, std::ostream& log)
{
  const std::uint64_t seed = st.cfg.seed;
  const bool robust = st.cfg.geometry_mode == GeometryMode::robust;
  const GeometryResult r = optimize_geometry(st.setup(), st.cfg.geometry_mode, st.bounds(), st.cfg.initial_design,
                                             robust ? std::optional<ToleranceField>(st.baseline()) : std::nullopt,
                                             st.cfg.turning_target);
  write_history(art, r.opt, seed);
  auto j = art.summary(seed);
  j["mode"] = robust ? "robust" : "deterministic";
  put_solver(j, r.opt);
  put_design(j, r.d);
  j["turning_target_rad"] = r.turning_target;
  art.write_json(j);
  log << "optimize-geometry: " << to_string(r.opt.status) << " after " << r.opt.iterations << " iterations, J "
      << r.opt.objective << '\n';
  return r.opt.status == SqpStatus::converged ? exit_ok : exit_numerical;
}

int cmd_optimize_simultaneous(const Study& st, const Artifacts& art, std::ostream& log)
{
  const std::uint64_t seed = st.cfg.seed;
  const SimultaneousResult r = optimize_simultaneous(st.setup(), st.bounds(), st.cfg.initial_design, st.baseline(),
                                                     st.budget, st.cfg.turning_target, st.cfg.freeze);
  write_history(art, r.opt, seed);
  write_profile(art, r.tol, st.base, seed);
  auto j = art.summary(seed);
  j["samples"] = st.samples.size();
  put_solver(j, r.opt);
  put_design(j, r.d);
  j["turning_target_rad"] = r.turning_target;
  j["budget"] = st.budget;
  j["variability"] = total_variability(r.tol, st.base);
  j["sigma_coeffs"] = to_std(r.tol.coeffs());
  art.write_json(j);
  log << "optimize-simultaneous: " << to_string(r.opt.status) << " after " << r.opt.iterations
      << " iterations, mean J " << r.opt.objective << '\n';
  return r.opt.status == SqpStatus::converged ? exit_ok : exit_numerical;
}

int cmd_report(const Study& st, const Artifacts& art, std::ostream& log)
{
  const ToleranceResult opt = optimize_tolerance(st.setup(), st.cfg.initial_design, st.kv, st.cfg.sigma_max,
                                                 st.budget);
  const std::uint64_t seed = st.cfg.report_seed;
  const SampleSet report = make_samples(seed, st.cfg.report_samples, st.kl.n_modes());

  MultiPointSpec sweep;
  sweep.alphas = st.cfg.report_alphas;
  sweep.weights = Eigen::VectorXd::Constant(sweep.alphas.size(), 1.0 / static_cast<double>(sweep.alphas.size()));
  SaaOptions o;
  o.threads = st.cfg.threads;
  o.sigma_gradient = false;
  o.design_gradient = false;
  const DesignVector& d = st.cfg.initial_design;
  const SAAEstimate nominal = nominal_estimate(*st.model, st.base, d, sweep, o);
  const SAAEstimate base = estimate(*st.model, st.base, d, st.baseline(), st.kl, report, sweep, o);
  const SAAEstimate best = estimate(*st.model, st.base, d, opt.tol, st.kl, report, sweep, o);

  bool improved = true;
  {
    auto out = art.csv("loss_bucket.csv", seed);
    out << "alpha_deg,nominal_loss,mean_loss_baseline,mean_loss_optimized\n";
    for (Eigen::Index i = 0; i < sweep.alphas.size(); ++i) {
      out << sweep.alphas[i] * 180.0 / std::numbers::pi << ',' << nominal.mean_loss_per_alpha[i] << ','
          << base.mean_loss_per_alpha[i] << ',' << best.mean_loss_per_alpha[i] << '\n';
      improved = improved && best.mean_loss_per_alpha[i] <= base.mean_loss_per_alpha[i];
    }
  }
  {
    auto out = art.csv("per_sample.csv", seed);
    out << "sample,J_baseline,J_optimized\n";
    for (Eigen::Index n = 0; n < report.size(); ++n)
      out << n << ',' << base.per_sample_J[n] << ',' << best.per_sample_J[n] << '\n';
  }
  write_profile(art, opt.tol, st.base, seed);
  auto j = art.summary(seed);
  j["optimization_seed"] = st.cfg.seed;
  j["optimization_samples"] = st.samples.size();
  j["report_samples"] = report.size();
  j["optimization_status"] = to_string(opt.opt.status);
  j["mean_loss_baseline"] = base.mean_J;
  j["mean_loss_optimized"] = best.mean_J;
  j["improved_at_every_incidence"] = improved;
  art.write_json(j);
  log << "report: mean loss " << base.mean_J << " (uniform sigma_max) -> " << best.mean_J << " (optimized)\n";
  return exit_ok;
}

} // namespace

int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err)
{
  try {
    std::map<std::string, std::string> overrides;
    if (opts.seed)
      overrides["saa.seed"] = std::to_string(*opts.seed);
    if (opts.samples)
      overrides["saa.samples"] = std::to_string(*opts.samples);
    if (opts.out)
      overrides["run.out"] = *opts.out;
    RunConfig cfg = load_config(opts.config, overrides);
    if (opts.threads)
      cfg.threads = *opts.threads;

    using Command = int (*)(const Study&, const Artifacts&, std::ostream&);
    static const std::map<std::string, Command> commands = {
        {"sample", cmd_sample},
        {"kl-info", cmd_kl_info},
        {"optimize-tolerance", cmd_optimize_tolerance},
        {"optimize-geometry", cmd_optimize_geometry},
        {"optimize-simultaneous", cmd_optimize_simultaneous},
        {"report", cmd_report},
    };
    const auto it = commands.find(opts.command);
    if (it == commands.end())
      throw config_error("unknown command '" + opts.command + "'");
    const std::string out_dir = cfg.out_dir;
    const Study st = make_study(std::move(cfg));
    const Artifacts art(out_dir, opts.command, st.cfg);
    return it->second(st, art, log);
  } catch (const Error& e) {
    switch (e.kind()) {
    case ErrorKind::config: err << "config error: " << e.what() << '\n'; return exit_config;
    case ErrorKind::infeasible: err << "infeasible: " << e.what() << '\n'; return exit_infeasible;
    case ErrorKind::numerical: break;
    }
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
}

int cli_main(int argc, char** argv)
{
  CLI::App app{"Manufacturing-tolerance and blade-geometry optimization under random surface error"};
  CliOptions opts;
  std::uint64_t seed = 0, samples = 0;
  unsigned threads = 0;
  std::string out;
  app.add_option("command", opts.command,
                 "sample | kl-info | optimize-tolerance | optimize-geometry | optimize-simultaneous | report")
      ->required();
  app.add_option("--config", opts.config, "Run configuration file")->required();
  auto* out_opt = app.add_option("--out", out, "Output directory (overrides run.out)");
  auto* seed_opt = app.add_option("--seed", seed, "SampleSet seed (overrides saa.seed)");
  auto* samples_opt = app.add_option("--samples", samples, "SAA sample count (overrides saa.samples)");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads, 0 = all cores (overrides saa.threads)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }
  if (*out_opt)
    opts.out = out;
  if (*seed_opt)
    opts.seed = seed;
  if (*samples_opt)
    opts.samples = samples;
  if (*threads_opt)
    opts.threads = threads;
  return run_command(opts, std::cout, std::cerr);
}

} // namespace tolopt
