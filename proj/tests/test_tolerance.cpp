#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "tolopt/error.hpp"
#include "tolopt/tolerance.hpp"

using namespace tolopt;
using tolopt::test::circle;
using tolopt::test::naca;

namespace {

// Exact integral of a degree-p B-spline in s: (t_{i+p+1} - t_i) / (p + 1).
double spline_integral(const KnotVector& kv, std::size_t i)
{
  const auto& t = kv.knots();
  return (t[i + KnotVector::degree + 1] - t[i]) / static_cast<double>(KnotVector::degree + 1);
}

} // namespace

TEST_CASE("variability of simple fields")
{
  const BladeSurface b = parameterize(naca(80, 0.1, 0.02));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 21);
  CHECK(total_variability(ToleranceField::uniform(kv, 0.0, 1e-3), b) == 0.0);
  CHECK(total_variability(ToleranceField::uniform(kv, 4e-4, 1e-3), b) ==
        doctest::Approx(4e-4 * b.perimeter).epsilon(1e-13));
  const Eigen::VectorXd a = variability_coefficients(kv, b);
  CHECK(a.sum() == doctest::Approx(b.perimeter).epsilon(1e-13));
  CHECK((a.array() > 0.0).all());
  for (std::size_t i = 0; i < kv.n_basis(); ++i) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(21);
    c[static_cast<Eigen::Index>(i)] = 1.0;
    CHECK(total_variability(ToleranceField(c, kv, 1.0), b) == doctest::Approx(a[static_cast<Eigen::Index>(i)]));
  }
}

TEST_CASE("variability coefficients converge to the exact basis integrals")
{
  // On a finely sampled circle the surface quadrature of B_i approaches (P/2) * int B_i ds.
  const BladeSurface b = parameterize(circle(8000));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 25, {0.0, 0.3, 4.0});
  const Eigen::VectorXd a = variability_coefficients(kv, b);
  const double half = 0.5 * b.perimeter;
  const auto n = static_cast<Eigen::Index>(kv.n_basis());
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    CHECK(std::abs(a[i] - half * spline_integral(kv, static_cast<std::size_t>(i))) < 1e-6);
  // The seam point carries its full periodic weight into B_0, so only the end pair is compared.
  CHECK(std::abs(a[0] + a[n - 1] - half * (spline_integral(kv, 0) + spline_integral(kv, kv.n_basis() - 1))) < 1e-6);
}

TEST_CASE("variability is linear in the coefficients")
{
  const BladeSurface b = parameterize(naca(60));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 15);
  const Eigen::VectorXd c1 = Eigen::VectorXd::LinSpaced(15, 0.0, 5e-4);
  const Eigen::VectorXd c2 = Eigen::VectorXd::LinSpaced(15, 5e-4, 1e-4);
  const ToleranceField f1(c1, kv, 1e-3);
  const ToleranceField f2(c2, kv, 1e-3);
  for (auto [al, be] : {std::pair{0.3, 0.7}, std::pair{1.0, 0.0}, std::pair{0.25, 1.5}}) {
    const ToleranceField mix(al * c1 + be * c2, kv, 1e-3);
    const double lhs = total_variability(mix, b);
    const double rhs = al * total_variability(f1, b) + be * total_variability(f2, b);
    CHECK(std::abs(lhs - rhs) < 1e-15 * std::max(1.0, std::abs(rhs)) + 1e-18);
  }
}

TEST_CASE("coefficient bounds bound the field")
{
  const BladeSurface b = parameterize(naca(70, 0.08, -0.02));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 31, {0.0, 0.15, 5.0});
  const double smax = 8e-4;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    Eigen::VectorXd c(31);
    for (Eigen::Index i = 0; i < 31; ++i)
      c[i] = smax * (0.5 + 0.5 * std::sin(12.9898 * seed + 78.233 * static_cast<double>(i)));
    c = c.cwiseMax(0.0).cwiseMin(smax);
    const Eigen::VectorXd sig = ToleranceField(c, kv, smax).on_grid(b.s);
    CHECK(sig.minCoeff() >= -1e-18);
    CHECK(sig.maxCoeff() <= smax * (1.0 + 1e-14));
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(31, 1e-4);
  bad[3] = -1e-9;
  CHECK_THROWS_AS(ToleranceField(bad, kv, smax), std::invalid_argument);
  bad[3] = 2.0 * smax;
  CHECK_THROWS_AS(ToleranceField(bad, kv, smax), std::invalid_argument);
  CHECK_THROWS_AS(ToleranceField(Eigen::VectorXd::Zero(30), kv, smax), std::invalid_argument);
  CHECK_THROWS_AS(ToleranceField(Eigen::VectorXd::Zero(31), kv, 0.0), std::invalid_argument);
}

TEST_CASE("scheme error examples")
{
  const BladeSurface b = parameterize(naca(100));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 41);
  const double smax = 1e-3;
  const ToleranceField full = ToleranceField::uniform(kv, smax, smax);

  Eigen::VectorXd ca = Eigen::VectorXd::Constant(41, smax);
  Eigen::VectorXd cb = ca;
  ca.segment(5, 3).setConstant(0.2 * smax);
  cb.segment(30, 3).setConstant(0.2 * smax);
  const ToleranceField a(ca, kv, smax);
  const ToleranceField bb(cb, kv, smax);

  CHECK(scheme_error(a, a, b) == 0.0);
  CHECK(scheme_error(a, bb, b) == scheme_error(bb, a, b));
  // Disjoint dips: |ra - rb| = ra + rb pointwise.
  CHECK(scheme_error(a, bb, b) == doctest::Approx(1.0).epsilon(1e-14));
  // Against an undipped field the error is 1 as well; halving the dip depth gives 1/3.
  CHECK(scheme_error(a, full, b) == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::VectorXd ch = ca;
  ch.segment(5, 3).setConstant(0.6 * smax);
  const double e = scheme_error(a, ToleranceField(ch, kv, smax), b);
  CHECK(e == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(scheme_error(full, full, b), Error);
  CHECK_THROWS_AS(scheme_error(a, ToleranceField::uniform(kv, 0.0, 2e-3), b), std::invalid_argument);
}

TEST_CASE("scheme error stays in the unit interval")
{
  const BladeSurface b = parameterize(naca(60));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 17);
  const double smax = 1.0;
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd c1(17), c2(17);
    for (Eigen::Index i = 0; i < 17; ++i) {
      c1[i] = 0.5 + 0.5 * std::sin(1.7 * k + 0.9 * static_cast<double>(i));
      c2[i] = 0.5 + 0.5 * std::cos(2.3 * k - 1.3 * static_cast<double>(i));
    }
    const double e = scheme_error(ToleranceField(c1, kv, smax), ToleranceField(c2, kv, smax), b);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
}

TEST_CASE("sigma profile CSV")
{
  const BladeSurface b = parameterize(naca(40));
  const KnotVector kv = make_knots(b.s_min(), b.s_max(), 9);
  std::ostringstream out;
  write_sigma_profile(out, ToleranceField::uniform(kv, 2e-4, 1e-3), b);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "s,sigma");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    CHECK(std::stod(line.substr(comma + 1)) == doctest::Approx(2e-4));
    ++rows;
  }
  CHECK(rows == b.size());
}
