#include <doctest.h>

#include <algorithm>
#include <random>

#include <Eigen/LU>

#include "tolopt/splines.hpp"

using namespace tolopt;

TEST_CASE("uniform knots without refinement")
{
  const KnotVector kv = make_knots(-1.0, 1.0, 8);
  const std::vector<double> expected = {-0.6, -0.2, 0.2, 0.6};
  const auto interior = kv.interior();
  REQUIRE(interior.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(interior[k] == doctest::Approx(expected[k]).epsilon(1e-14));
  CHECK(kv.n_basis() == 8);
  CHECK(kv.knots().size() == 12);
}

TEST_CASE("refined knots concentrate inside the window")
{
  const KnotVector kv = make_knots(-1.0, 1.0, 41, {0.0, 0.1, 4.0});
  const auto interior = kv.interior();
  CHECK(interior.size() == 37);
  const auto inside = std::count_if(interior.begin(), interior.end(), [](double s) { return std::abs(s) < 0.1; });
  // window holds mass 0.8 of 2.6 -> 37 * 0.8 / 2.6 ~ 11.4 knots, versus 1.85 for uniform spacing
  CHECK(inside >= 11);
  CHECK(inside <= 12);
  for (std::size_t k = 1; k < interior.size(); ++k)
    CHECK(interior[k] > interior[k - 1]);
}

TEST_CASE("knot construction rejects bad input")
{
  CHECK_THROWS_AS(make_knots(0.0, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_knots(1.0, 1.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_knots(0.0, 1.0, 8, {0.5, 0.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_knots(0.0, 1.0, 8, {0.5, 0.1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_knots(0.0, 1.0, 4, {0.5, 0.1, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(KnotVector({0, 0, 0, 1, 1, 1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(KnotVector({0, 0, 0, 0, 0.7, 0.3, 1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("cardinal cubic peaks at 2/3 on its central knot")
{
  const KnotVector kv({0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 6, 6, 6});
  CHECK(basis_value(kv, 3, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(basis_value(kv, 3, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(basis_value(kv, 0, 3.5) == 0.0);
  CHECK_THROWS_AS(basis_value(kv, 0, 6.5), std::out_of_range);
  CHECK_THROWS_AS(basis_value(kv, 0, -0.1), std::out_of_range);
}

TEST_CASE("partition of unity, nonnegativity and local support at random points")
{
  const KnotVector kv = make_knots(-1.0, 1.0, 41, {0.0, 0.15, 5.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto& t = kv.knots();
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = u(rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < kv.n_basis(); ++i) {
      const double b = basis_value(kv, i, s);
      CHECK(b >= 0.0);
      if (s < t[i] || s > t[i + 4])
        CHECK(b == 0.0);
      sum += b;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const LocalBasis lb = local_basis(kv, s);
    for (int k = 0; k < 4; ++k)
      CHECK(lb.values[static_cast<std::size_t>(k)] ==
            doctest::Approx(basis_value(kv, lb.first + static_cast<std::size_t>(k), s)).epsilon(1e-13));
  }
  CHECK(std::abs(eval_spline(Eigen::VectorXd::Ones(41), kv, 1.0) - 1.0) < 1e-12);
  CHECK(std::abs(eval_spline(Eigen::VectorXd::Ones(41), kv, -1.0) - 1.0) < 1e-12);
}

TEST_CASE("spline evaluation is linear in the coefficients")
{
  const KnotVector kv = make_knots(0.0, 2.0, 12);
  Eigen::VectorXd c = Eigen::VectorXd::Constant(12, 0.37);
  for (double s : {0.0, 0.31, 1.0, 1.77, 2.0}) {
    CHECK(eval_spline(c, kv, s) == doctest::Approx(0.37).epsilon(1e-14));
    CHECK(eval_spline(Eigen::VectorXd::Zero(12), kv, s) == 0.0);
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(eval_spline(Eigen::VectorXd::Unit(12, static_cast<Eigen::Index>(i)), kv, s) ==
            doctest::Approx(basis_value(kv, i, s)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(eval_spline(Eigen::VectorXd::Zero(11), kv, 0.5), std::invalid_argument);
}

TEST_CASE("second derivative is continuous across interior knots")
{
  const KnotVector kv = make_knots(0.0, 1.0, 10, {0.5, 0.2, 3.0});
  Eigen::VectorXd c(10);
  c << 0.3, -1.0, 2.0, 0.5, 1.5, -0.7, 0.1, 0.9, -0.4, 1.2;
  const auto& t = kv.knots();
  double min_span = 1.0;
  for (std::size_t k = 3; k + 4 < t.size(); ++k)
    min_span = std::min(min_span, t[k + 1] - t[k]);
  const double h = min_span / 5.0;
  // the spline is an exact cubic on each span: fit it from four samples on one side and
  // differentiate the fit at the knot
  auto one_sided_second = [&](double knot, double dir) {
    Eigen::Matrix4d V;
    Eigen::Vector4d f;
    for (int k = 0; k < 4; ++k) {
      const double x = dir * h * (k + 1);
      V.row(k) << 1.0, x, x * x, x * x * x;
      f[k] = eval_spline(c, kv, knot + x);
    }
    const Eigen::Vector4d poly = V.fullPivLu().solve(f);
    return 2.0 * poly[2];
  };
  for (double knot : kv.interior()) {
    const double left = one_sided_second(knot, -1.0), right = one_sided_second(knot, 1.0);
    CHECK(std::abs(left - right) <= 1e-6 * std::max({std::abs(left), std::abs(right), 1.0}));
  }
}

TEST_CASE("collocation matrix rows are the basis values")
{
  const KnotVector kv = make_knots(-1.0, 1.0, 9);
  Eigen::VectorXd s(5);
  s << -1.0, -0.3, 0.0, 0.45, 1.0;
  const Eigen::MatrixXd B = basis_matrix(kv, s);
  CHECK(B.rows() == 5);
  CHECK(B.cols() == 9);
  for (Eigen::Index j = 0; j < 5; ++j) {
    CHECK(B.row(j).sum() == doctest::Approx(1.0).epsilon(1e-13));
    for (Eigen::Index i = 0; i < 9; ++i)
      CHECK(B(j, i) == doctest::Approx(basis_value(kv, static_cast<std::size_t>(i), s[j])).epsilon(1e-13));
  }
}
