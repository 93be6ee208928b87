#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "tolopt/config.hpp"
#include "tolopt/design.hpp"

namespace tolopt {

/// Everything a command needs, assembled once from a RunConfig.
struct Study
{
  RunConfig cfg;
  BladeSurface base;
  KLBasis kl;
  KnotVector kv{std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1}};
  SampleSet samples;
  std::unique_ptr<PerformanceModel> model;
  Eigen::VectorXd variability; ///< a_i with V = a . sigma
  double budget = 0.0;         ///< V_b

  StudySetup setup() const;
  ToleranceField baseline() const { return ToleranceField::uniform(kv, cfg.sigma_max, cfg.sigma_max); }
  DesignBounds bounds() const { return DesignBounds::symmetric(cfg.camber_bound, cfg.stagger_bound); }
};

Study make_study(RunConfig cfg);

struct CliOptions
{
  std::string command;
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<unsigned> threads; ///< 0 = all hardware threads
};

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_infeasible = 3, exit_numerical = 4 };

/// Runs one command and writes its artifacts. Errors are reported on `err` and mapped to exit codes.
int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err);

/// Argument parsing front-end used by the tolopt executable.
int cli_main(int argc, char** argv);

} // namespace tolopt
