#pragma once

#include <optional>

#include "tolopt/geometry.hpp"
#include "tolopt/perf.hpp"
#include "tolopt/randfield.hpp"
#include "tolopt/saa.hpp"
#include "tolopt/sqp.hpp"
#include "tolopt/tolerance.hpp"

namespace tolopt {

/// Everything the drivers share: model, baseline blade, K-L basis and the fixed SampleSet.
struct StudySetup
{
  const PerformanceModel* model = nullptr;
  const BladeSurface* base = nullptr;
  const KLBasis* kl = nullptr;
  const SampleSet* samples = nullptr;
  MultiPointSpec mp;
  SaaOptions saa;
  SqpOptions sqp;
};

struct DesignBounds
{
  DesignVector lower;
  DesignVector upper;

  /// Symmetric box: |chebyshev_k| <= camber, |stagger| <= stagger.
  static DesignBounds symmetric(double camber, double stagger);
  void validate() const;
};

struct ToleranceResult
{
  ToleranceField tol;
  OptimizationResult opt;
  double initial_mean_J = 0.0;
};

/// min mean_J(sigma) s.t. a . sigma = V_b, 0 <= sigma_i <= sigma_max with the design held at d.
/// Starts from the uniform field meeting the budget.
ToleranceResult optimize_tolerance(const StudySetup& setup, const DesignVector& d, const KnotVector& kv,
                                   double sigma_max, double V_b);

enum class GeometryMode { deterministic, robust };

struct GeometryResult
{
  DesignVector d;
  OptimizationResult opt;
  double turning_target = 0.0;
};

/// Deterministic: min J(d) s.t. turning(d) = target. Robust: mean loss and mean turning over the
/// SampleSet at tolerance `tol` (required in robust mode). The target defaults to the turning at d0.
GeometryResult optimize_geometry(const StudySetup& setup, GeometryMode mode, const DesignBounds& bounds,
                                 const DesignVector& d0, const std::optional<ToleranceField>& tol = std::nullopt,
                                 std::optional<double> turning_target = std::nullopt);

enum class Freeze { none, sigma, design };

struct SimultaneousResult
{
  DesignVector d;
  ToleranceField tol;
  OptimizationResult opt;
  double turning_target = 0.0;
};

/// Joint (d, sigma) problem with the mean-turning and variability equalities. `tol0` supplies the
/// knots and sigma_max, and the sigma values when sigma is frozen; otherwise sigma starts uniform.
SimultaneousResult optimize_simultaneous(const StudySetup& setup, const DesignBounds& bounds, const DesignVector& d0,
                                         const ToleranceField& tol0, double V_b,
                                         std::optional<double> turning_target = std::nullopt,
                                         Freeze freeze = Freeze::none);

struct SequentialResult
{
  GeometryResult geometry;
  ToleranceResult tolerance;
};

/// Deterministic geometry optimization followed by tolerance optimization at the resulting design.
SequentialResult optimize_sequential(const StudySetup& setup, const DesignBounds& bounds, const DesignVector& d0,
                                     const KnotVector& kv, double sigma_max, double V_b,
                                     std::optional<double> turning_target = std::nullopt);

} // namespace tolopt
