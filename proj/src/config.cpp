#include "tolopt/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "tolopt/error.hpp"
#include "tolopt/geometry.hpp"

namespace tolopt {

namespace {

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

ConfigText ConfigText::parse(std::istream& in)
{
  ConfigText cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw config_error("line " + std::to_string(lineno) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.has(full))
      throw config_error("line " + std::to_string(lineno) + ": duplicate key " + full);
    cfg.entries_[full] = trim(line.substr(eq + 1));
  }
  return cfg;
}

std::uint64_t ConfigText::hash() const
{
  std::uint64_t h = 14695981039346656037ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& [k, v] : entries_) {
    if (k == "saa.threads" || k == "run.out")
      continue;
    feed(k);
    feed(v);
  }
  return h;
}

namespace {

/// Typed access that remembers which keys were consumed, so leftovers can be reported.
class Reader
{
public:
  explicit Reader(const ConfigText& text) : text_(text) {}

  std::optional<std::string> raw(const std::string& key)
  {
    used_.insert(key);
    auto it = text_.entries().find(key);
    if (it == text_.entries().end())
      return std::nullopt;
    return it->second;
  }

  std::string str(const std::string& key, const std::string& fallback)
  {
    return raw(key).value_or(fallback);
  }

  double num(const std::string& key, double fallback)
  {
    auto v = raw(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::optional<double> opt_num(const std::string& key)
  {
    auto v = raw(key);
    if (!v)
      return std::nullopt;
    return to_double(key, *v);
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback)
  {
    auto v = raw(key);
    if (!v)
      return fallback;
    try {
      std::size_t pos = 0;
      if (!v->empty() && v->front() == '-')
        throw std::invalid_argument("negative");
      const unsigned long long x = std::stoull(*v, &pos);
      if (pos != v->size())
        throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw config_error(key + ": expected a nonnegative integer, got '" + *v + "'");
    }
  }

  std::vector<double> list(const std::string& key)
  {
    auto v = raw(key);
    return v ? split(key, *v) : std::vector<double>{};
  }

  static std::vector<double> split(const std::string& key, std::string s)
  {
    for (char& c : s)
      if (c == ',')
        c = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok)
      out.push_back(to_double(key, tok));
    return out;
  }

  DesignCoeffs coeffs(const std::string& key)
  {
    DesignCoeffs c{};
    const auto v = list(key);
    if (v.empty())
      return c;
    if (v.size() != c.size())
      throw config_error(key + ": expected " + std::to_string(c.size()) + " values");
    std::copy(v.begin(), v.end(), c.begin());
    return c;
  }

  void reject_unused() const
  {
    for (const auto& [k, v] : text_.entries())
      if (!used_.count(k))
        throw config_error("unknown configuration key " + k);
  }

private:
  static double to_double(const std::string& key, const std::string& v)
  {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size() || !std::isfinite(x))
        throw std::invalid_argument("bad");
      return x;
    } catch (const std::exception&) {
      throw config_error(key + ": expected a number, got '" + v + "'");
    }
  }

  const ConfigText& text_;
  std::set<std::string> used_;
};

double deg(double x) { return x * std::numbers::pi / 180.0; }

} // namespace

RunConfig make_run_config(const ConfigText& text, const std::string& base_dir)
{
  Reader r(text);
  RunConfig c;
  c.hash = text.hash();

  const std::string blade = r.str("blade.file", "");
  if (blade.empty())
    throw config_error("blade.file is required");
  std::filesystem::path bp(blade);
  if (bp.is_relative())
    bp = std::filesystem::path(base_dir) / bp;
  c.blade_file = bp.lexically_normal().string();
  if (!std::filesystem::is_regular_file(c.blade_file))
    throw config_error("blade file not found: " + c.blade_file);

  c.correlation.L0 = r.num("correlation.L0", c.correlation.L0);
  c.correlation.L_LE = r.num("correlation.L_LE", c.correlation.L_LE);
  const std::string w = r.str("correlation.w", "auto");
  if (w == "auto") {
    c.correlation_w_auto = true;
  } else {
    ConfigText one;
    one.set("w", w);
    c.correlation.w = Reader(one).num("w", 0.0);
  }
  const std::string form = r.str("correlation.form", "gibbs");
  if (form == "gibbs")
    c.correlation.form = CorrelationForm::gibbs;
  else if (form == "geometric_mean")
    c.correlation.form = CorrelationForm::geometric_mean;
  else
    throw config_error("correlation.form must be gibbs or geometric_mean");
  if (!c.correlation_w_auto)
    c.correlation.validate();

  c.energy_fraction = r.num("kl.energy_fraction", c.energy_fraction);
  if (!(c.energy_fraction > 0.0 && c.energy_fraction <= 1.0))
    throw config_error("kl.energy_fraction must lie in (0, 1]");

  c.n_basis = r.u64("tolerance.n_basis", c.n_basis);
  if (c.n_basis < 4)
    throw config_error("tolerance.n_basis must be at least 4");
  c.sigma_max = r.num("tolerance.sigma_max", c.sigma_max);
  if (!(c.sigma_max > 0.0))
    throw config_error("tolerance.sigma_max must be positive");
  c.budget_fraction = r.num("tolerance.budget_fraction", c.budget_fraction);
  if (!(c.budget_fraction > 0.0 && c.budget_fraction <= 1.0))
    throw config_error("tolerance.budget_fraction must lie in (0, 1]");
  c.budget = r.opt_num("tolerance.budget");
  c.refinement.center = r.num("tolerance.refine_center", 0.0);
  c.refinement.radius = r.num("tolerance.refine_radius", 1.0);
  c.refinement.density_ratio = r.num("tolerance.refine_ratio", 1.0);
  if (!(c.refinement.radius > 0.0) || !(c.refinement.density_ratio >= 1.0))
    throw config_error("tolerance refinement needs radius > 0 and ratio >= 1");

  const auto alphas = r.list("multipoint.alphas_deg");
  if (alphas.empty())
    throw config_error("multipoint.alphas_deg is required");
  c.mp.alphas.resize(static_cast<Eigen::Index>(alphas.size()));
  for (std::size_t i = 0; i < alphas.size(); ++i)
    c.mp.alphas[static_cast<Eigen::Index>(i)] = deg(alphas[i]);
  const auto n_alpha = static_cast<Eigen::Index>(alphas.size());
  const std::string weights = r.str("multipoint.weights", n_alpha == 1 ? "1" : "trapezoid");
  if (weights == "trapezoid") {
    if (n_alpha < 2)
      throw config_error("trapezoid weights need at least two incidence points");
    c.mp.weights = trapezoid_weights(n_alpha);
  } else {
    const auto wv = Reader::split("multipoint.weights", weights);
    c.mp.weights = Eigen::Map<const Eigen::VectorXd>(wv.data(), static_cast<Eigen::Index>(wv.size()));
  }
  c.mp.validate();

  c.seed = r.u64("saa.seed", c.seed);
  c.samples = static_cast<Eigen::Index>(r.u64("saa.samples", static_cast<std::uint64_t>(c.samples)));
  c.report_seed = r.u64("saa.report_seed", c.report_seed);
  c.report_samples = static_cast<Eigen::Index>(r.u64("saa.report_samples", static_cast<std::uint64_t>(c.report_samples)));
  c.realizations = static_cast<Eigen::Index>(r.u64("saa.realizations", static_cast<std::uint64_t>(c.realizations)));
  c.threads = static_cast<unsigned>(r.u64("saa.threads", c.threads));
  c.field_delta = r.num("saa.field_delta", c.field_delta);
  c.design_delta = r.num("saa.design_delta", c.design_delta);
  c.cache_dir = r.str("saa.cache_dir", "");
  if (c.samples < 1 || c.report_samples < 1)
    throw config_error("sample counts must be positive");
  if (!(c.field_delta > 0.0) || !(c.design_delta > 0.0))
    throw config_error("finite-difference steps must be positive");

  auto& m = c.model;
  m.type = r.str("model.type", m.type);
  if (m.type == "surrogate") {
    auto& s = m.surrogate;
    s.omega0 = r.num("model.omega0", s.omega0);
    s.c_alpha = r.num("model.c_alpha", s.c_alpha);
    s.alpha_opt0 = r.num("model.alpha_opt0", s.alpha_opt0);
    s.alpha_opt_coeffs = r.coeffs("model.alpha_opt_coeffs");
    s.kappa_crit = r.num("model.kappa_crit", s.kappa_crit);
    s.kappa_crit_coeffs = r.coeffs("model.kappa_crit_coeffs");
    s.kappa_incidence = r.num("model.kappa_incidence", s.kappa_incidence);
    s.omega_sep = r.num("model.omega_sep", s.omega_sep);
    s.tau = r.num("model.tau", s.tau);
    s.asym_gain = r.num("model.asym_gain", s.asym_gain);
    s.asym_smoothing = r.num("model.asym_smoothing", s.asym_smoothing);
    s.c_rough = r.num("model.c_rough", s.c_rough);
    s.le_weight_width = r.num("model.le_weight_width", s.le_weight_width);
    s.le_weight_cutoff = r.num("model.le_weight_cutoff", s.le_weight_cutoff);
    s.le_window = r.num("model.le_window", s.le_window);
    s.design_quadratic = r.num("model.design_quadratic", s.design_quadratic);
    s.design_ref = r.coeffs("model.design_ref");
    s.turning0 = r.num("model.turning0", s.turning0);
    s.turning_coeffs = r.coeffs("model.turning_coeffs");
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("model: ") + e.what());
    }
  } else if (m.type == "quadratic") {
    m.amplitude = r.num("model.amplitude", m.amplitude);
    m.width = r.num("model.width", m.width);
    m.omega0 = r.num("model.omega0", m.omega0);
    m.c_alpha = r.num("model.c_alpha", m.c_alpha);
    if (!(m.amplitude >= 0.0) || !(m.width > 0.0))
      throw config_error("quadratic model needs amplitude >= 0 and width > 0");
  } else {
    throw config_error("model.type must be surrogate or quadratic");
  }

  c.camber_bound = r.num("design.camber_bound", c.camber_bound);
  c.stagger_bound = r.num("design.stagger_bound_deg", 180.0 / std::numbers::pi * c.stagger_bound);
  c.stagger_bound = deg(c.stagger_bound);
  if (auto t = r.opt_num("design.turning_target_deg"))
    c.turning_target = deg(*t);
  if (const auto init = r.list("design.initial"); !init.empty()) {
    if (init.size() != DesignVector::size)
      throw config_error("design.initial needs " + std::to_string(DesignVector::size) + " values");
    c.initial_design = DesignVector::from_vector(
        Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size())));
  }
  const std::string freeze = r.str("design.freeze", "none");
  if (freeze == "none")
    c.freeze = Freeze::none;
  else if (freeze == "sigma")
    c.freeze = Freeze::sigma;
  else if (freeze == "design")
    c.freeze = Freeze::design;
  else
    throw config_error("design.freeze must be none, sigma or design");

  const std::string mode = r.str("design.mode", "robust");
  if (mode == "robust")
    c.geometry_mode = GeometryMode::robust;
  else if (mode == "deterministic")
    c.geometry_mode = GeometryMode::deterministic;
  else
    throw config_error("design.mode must be robust or deterministic");

  c.sqp.tol_kkt = r.num("optimizer.tol_kkt", c.sqp.tol_kkt);
  c.sqp.tol_con = r.num("optimizer.tol_con", c.sqp.tol_con);
  c.sqp.max_iter = static_cast<int>(r.u64("optimizer.max_iter", static_cast<std::uint64_t>(c.sqp.max_iter)));

  auto sweep = r.list("report.alphas_deg");
  if (sweep.empty())
    sweep = alphas;
  c.report_alphas.resize(static_cast<Eigen::Index>(sweep.size()));
  for (std::size_t i = 0; i < sweep.size(); ++i)
    c.report_alphas[static_cast<Eigen::Index>(i)] = deg(sweep[i]);

  c.out_dir = r.str("run.out", c.out_dir);
  r.reject_unused();
  return c;
}

RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides)
{
  std::ifstream in(path);
  if (!in)
    throw config_error("cannot open config file: " + path);
  ConfigText text = ConfigText::parse(in);
  for (const auto& [k, v] : overrides)
    text.set(k, v);
  const auto dir = std::filesystem::path(path).parent_path();
  return make_run_config(text, dir.empty() ? "." : dir.string());
}

double auto_correlation_width(const BladeSurface& surface)
{
  const std::size_t n = surface.size(), i = surface.le_index;
  const double kappa = std::abs(three_point_curvature(surface.points[(i + n - 1) % n], surface.points[i],
                                                      surface.points[(i + 1) % n]));
  if (!(kappa > 0.0))
    throw config_error("cannot derive a correlation width from a flat leading edge");
  return (1.0 / kappa) / (0.5 * surface.perimeter);
}

std::unique_ptr<PerformanceModel> make_model(const ModelSettings& settings, const BladeSurface& surface)
{
  if (settings.type == "surrogate")
    return std::make_unique<SurrogateCascade>(settings.surrogate);
  QuadraticModelConfig q;
  q.omega0 = settings.omega0;
  q.c_alpha = settings.c_alpha;
  q.node_weights.resize(static_cast<Eigen::Index>(surface.size()));
  for (Eigen::Index j = 0; j < q.node_weights.size(); ++j) {
    const double r = surface.s[j] / settings.width;
    q.node_weights[j] = settings.amplitude * surface.quad_weights[j] * std::exp(-r * r);
  }
  return std::make_unique<QuadraticModel>(std::move(q));
}

} // namespace tolopt
