#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tolopt/design.hpp"
#include "tolopt/perf.hpp"
#include "tolopt/randfield.hpp"
#include "tolopt/saa.hpp"
#include "tolopt/splines.hpp"
#include "tolopt/sqp.hpp"

namespace tolopt {

/// Flat "key = value" text grouped under [section] headers; '#' starts a comment. Keys are stored
/// as "section.key".
class ConfigText
{
public:
  static ConfigText parse(std::istream& in);
  const std::map<std::string, std::string>& entries() const { return entries_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  /// FNV-1a over the sorted entries, so comments and layout do not change it. Keys that cannot
  /// change results (saa.threads, run.out) are left out.
  std::uint64_t hash() const;

private:
  std::map<std::string, std::string> entries_;
};

struct ModelSettings
{
  std::string type = "surrogate"; ///< surrogate | quadratic
  SurrogateCascadeConfig surrogate;
  /// quadratic: a_j = amplitude w_j exp(-(s_j / width)^2)
  double amplitude = 1.0;
  double width = 0.05;
  double omega0 = 0.0;
  double c_alpha = 0.0;
};

struct RunConfig
{
  std::string blade_file;
  CorrelationSpec correlation;
  bool correlation_w_auto = false;
  double energy_fraction = 0.99;

  std::size_t n_basis = 41;
  double sigma_max = 8e-4;
  double budget_fraction = 0.98;
  std::optional<double> budget; ///< absolute V_b, overrides the fraction
  KnotRefinement refinement;

  MultiPointSpec mp;

  std::uint64_t seed = 1;
  Eigen::Index samples = 200;
  std::uint64_t report_seed = 1001;
  Eigen::Index report_samples = 2000;
  Eigen::Index realizations = 5; ///< surfaces written by the sample command
  unsigned threads = 1;
  double field_delta = 1e-6;
  double design_delta = 1e-6;
  std::string cache_dir;

  ModelSettings model;

  double camber_bound = 0.01;
  double stagger_bound = 0.05;
  std::optional<double> turning_target;
  DesignVector initial_design;
  Freeze freeze = Freeze::none;
  GeometryMode geometry_mode = GeometryMode::robust;

  SqpOptions sqp;

  Eigen::VectorXd report_alphas; ///< rad

  std::string out_dir = "out";
  std::uint64_t hash = 0;
};

/// Interprets parsed text. Relative file names are resolved against `base_dir`.
RunConfig make_run_config(const ConfigText& text, const std::string& base_dir);
RunConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {});

std::unique_ptr<PerformanceModel> make_model(const ModelSettings& settings, const BladeSurface& surface);

/// Correlation half-width at the leading edge: its radius of curvature in s units.
double auto_correlation_width(const BladeSurface& surface);

} // namespace tolopt
