#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pinchsec/piecewise.hpp"
#include "pinchsec/quadrature.hpp"

using namespace pinchsec;

namespace {

PiecewisePdf uniform_pdf(double lo, double hi) {
  PdfBranch b;
  b.lo = lo;
  b.hi = hi;
  const double inv = 1.0 / (hi - lo);
  b.density = [inv](double) { return inv; };
  b.exact_integral = 1.0;
  return PiecewisePdf({b});
}

}  // namespace

TEST_CASE("Gauss-Legendre panel integrates smooth functions to near machine precision") {
  const double got = quad::gl_panel([](double x) { return std::exp(x); }, 0.0, 1.0);
  CHECK(got == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  const double poly = quad::gl_panel([](double x) { return 5.0 * x * x * x * x; }, -1.0, 2.0);
  CHECK(poly == doctest::Approx(32.0 + 1.0).epsilon(1e-14));
}

TEST_CASE("endpoint substitution handles inverse-sqrt singularities") {
  const double left = quad::segment_sqrt_ends([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
  CHECK(left == doctest::Approx(2.0).epsilon(1e-12));
  const double right =
      quad::segment_sqrt_ends([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0);
  CHECK(right == doctest::Approx(2.0).epsilon(1e-12));
  const double both = quad::segment_sqrt_ends(
      [](double x) { return 1.0 / std::sqrt(x * (1.0 - x)); }, 0.0, 1.0);
  CHECK(both == doctest::Approx(std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("kink-splitting integrates piecewise-smooth integrands exactly") {
  const std::vector<double> knots{0.3};
  const double got =
      quad::integrate_kinked([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, knots);
  CHECK(got == doctest::Approx(0.5 * 0.09 + 0.5 * 0.49).epsilon(1e-13));
}

TEST_CASE("adaptive integrator reaches requested absolute tolerance") {
  const auto smooth = quad::integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
  CHECK(smooth.converged);
  CHECK(smooth.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
  CHECK(smooth.evaluations >= 15);

  // Sharp Gaussian spike: total mass 1, located by the forced knot at 0.
  const double sigma = 1e-3;
  const std::vector<double> knots{0.0};
  const auto spike = quad::integrate_adaptive(
      [&](double x) {
        const double z = x / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
      },
      -8.0, 8.0, 1e-10, knots);
  CHECK(spike.converged);
  CHECK(spike.value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cubic table validates its construction inputs") {
  CHECK_THROWS_AS(CubicTable({0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CubicTable({0.0, 1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CubicTable({0.0, 1.0, 1.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(CubicTable({0.0, 1.0, 0.5}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("cubic table reproduces linear data exactly") {
  const CubicTable t({0.0, 0.5, 2.0, 3.0}, {1.0, 2.0, 5.0, 7.0});
  for (double q : {0.1, 0.25, 0.5, 1.3, 2.9})
    CHECK(t(q) == doctest::Approx(1.0 + 2.0 * q).epsilon(1e-14));
  CHECK(t(-1.0) == 1.0);   // clamped low
  CHECK(t(10.0) == 7.0);   // clamped high
  CHECK(t.integral() == doctest::Approx(3.0 + 9.0).epsilon(1e-14));  // int of 1+2q over [0,3]
}

TEST_CASE("cubic table preserves monotonicity of monotone data") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 10; ++i) {
    xs.push_back(static_cast<double>(i));
    ys.push_back(std::tanh(static_cast<double>(i) - 5.0));
  }
  const CubicTable t(xs, ys);
  double prev = t(0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double q = 10.0 * i / 10000.0;
    const double v = t(q);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("closed-form cell integrals agree with independent quadrature") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 20; ++i) {
    const double x = 0.5 * i;
    xs.push_back(x);
    ys.push_back(std::tanh(x - 5.0));
  }
  const CubicTable t(xs, ys);
  const auto oracle =
      quad::integrate_adaptive([&](double q) { return t(q); }, 0.3, 7.7, 1e-12, xs);
  CHECK(t.integral_between(0.3, 7.7) == doctest::Approx(oracle.value).epsilon(1e-11));
  // Additivity and clamping outside the grid.
  CHECK(t.integral_between(0.3, 7.7) ==
        doctest::Approx(t.integral_between(0.3, 4.1) + t.integral_between(4.1, 7.7))
            .epsilon(1e-13));
  CHECK(t.integral_between(-5.0, 20.0) == doctest::Approx(t.integral()).epsilon(1e-13));
}

TEST_CASE("piecewise density validates support tiling, sign, and normalization") {
  PdfBranch a;
  a.lo = 0.0;
  a.hi = 1.0;
  a.density = [](double) { return 0.25; };
  PdfBranch b;
  b.lo = 1.0;
  b.hi = 2.0;
  b.density = [](double) { return 0.75; };

  const PiecewisePdf pdf({a, b});
  CHECK(pdf.branch_count() == 2);
  CHECK(pdf.support_min() == 0.0);
  CHECK(pdf.support_max() == 2.0);
  CHECK(pdf(0.5) == 0.25);
  CHECK(pdf(1.0) == 0.75);  // branch boundaries belong to the upper branch
  CHECK(pdf(2.0) == 0.75);  // the last branch owns its upper endpoint
  CHECK(pdf(-0.1) == 0.0);
  CHECK(pdf(2.1) == 0.0);
  CHECK(pdf.normalization_residual() <= 1e-12);
  REQUIRE(pdf.knots().size() == 3);
  CHECK(pdf.knots()[1] == 1.0);

  SUBCASE("a gap between branches is rejected") {
    PdfBranch c = b;
    c.lo = 1.1;
    CHECK_THROWS_AS(PiecewisePdf({a, c}), std::invalid_argument);
  }
  SUBCASE("a negative density is rejected") {
    PdfBranch c = b;
    c.density = [](double) { return -0.75; };
    CHECK_THROWS_AS(PiecewisePdf({a, c}), std::invalid_argument);
  }
  SUBCASE("a NaN density is rejected") {
    PdfBranch c = b;
    c.density = [](double) { return std::nan(""); };
    CHECK_THROWS_AS(PiecewisePdf({a, c}), std::invalid_argument);
  }
  SUBCASE("a non-normalized density is rejected") {
    PdfBranch c = a;
    c.density = [](double) { return 0.5; };
    c.exact_integral = std::numeric_limits<double>::quiet_NaN();
    PdfBranch d = b;
    d.exact_integral = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(PiecewisePdf({c, d}), std::invalid_argument);
  }
  SUBCASE("interior knots are exposed through knots()") {
    PdfBranch c = a;
    c.interior_knots = {0.5};
    const PiecewisePdf with_knot({c, b});
    REQUIRE(with_knot.knots().size() == 4);
    CHECK(with_knot.knots()[1] == 0.5);
  }
}

TEST_CASE("integrable endpoint blow-ups are accepted as densities") {
  PdfBranch b;
  b.lo = 0.0;
  b.hi = 1.0;
  b.density = [](double u) { return 0.5 / std::sqrt(u); };
  const PiecewisePdf pdf({b});
  CHECK(pdf.normalization_residual() <= 1e-9);
  CHECK(pdf(0.25) == doctest::Approx(1.0));
}

TEST_CASE("clustered grid covers the span and refines toward kinks") {
  const std::vector<double> kinks{0.4};
  const auto grid = clustered_grid(0.0, 2.0, kinks, 64);
  REQUIRE(grid.size() >= 66);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 2.0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) CHECK(grid[i + 1] > grid[i]);
  // Refinement reaches well below 1e-9 of the span around the kink.
  double nearest = 1e9;
  for (double g : grid)
    if (g != 0.4) nearest = std::min(nearest, std::abs(g - 0.4));
  CHECK(nearest < 1e-9);
}

TEST_CASE("convolution of two uniforms reproduces the triangle density") {
  const PiecewisePdf u1 = uniform_pdf(0.0, 1.0);
  const PiecewisePdf u2 = uniform_pdf(0.0, 1.0);

  auto triangle = [](double s) {
    if (s <= 0.0 || s >= 2.0) return 0.0;
    return s <= 1.0 ? s : 2.0 - s;
  };

  // Pointwise evaluator first (no tabulation involved).
  for (double s : {0.05, 0.3, 0.77, 1.0, 1.31, 1.9, 1.999})
    CHECK(convolve_at(u1, u2, s) == doctest::Approx(triangle(s)).epsilon(1e-12));

  const PiecewisePdf sum = numeric_convolution(u1, u2, 1024);
  CHECK(sum.support_min() == doctest::Approx(0.0));
  CHECK(sum.support_max() == doctest::Approx(2.0));
  double worst = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double s = 2.0 * i / 2000.0;
    worst = std::max(worst, std::abs(sum(s) - triangle(s)));
  }
  CHECK(worst <= 1e-9);
  CHECK(sum.normalization_residual() <= 1e-9);
}

TEST_CASE("convolution with an inverse-sqrt factor matches the closed form") {
  // A has density 1/(2 sqrt(u)) on (0,1]; B is uniform on [0,1].  The sum has
  // density sqrt(min(1,s)) - sqrt(max(0,s-1)) on (0,2).
  PdfBranch a;
  a.lo = 0.0;
  a.hi = 1.0;
  a.density = [](double u) { return 0.5 / std::sqrt(u); };
  const PiecewisePdf A({a});
  const PiecewisePdf B = uniform_pdf(0.0, 1.0);

  auto oracle = [](double s) {
    return std::sqrt(std::min(1.0, s)) - std::sqrt(std::max(0.0, s - 1.0));
  };

  for (double s : {1e-4, 0.02, 0.4, 0.999, 1.0, 1.001, 1.5, 1.98})
    CHECK(convolve_at(A, B, s) == doctest::Approx(oracle(s)).epsilon(1e-10));

  const PiecewisePdf sum = numeric_convolution(A, B, 2048);
  double worst = 0.0;
  for (int i = 1; i <= 4000; ++i) {
    const double s = 2.0 * i / 4001.0;
    worst = std::max(worst, std::abs(sum(s) - oracle(s)));
  }
  CHECK(worst <= 2e-4);
  CHECK(sum.normalization_residual() <= 1e-8);
}

TEST_CASE("CDF tables validate their inputs") {
  CHECK_THROWS_AS(TabulatedCdf({0.0, 1.0}, {0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TabulatedCdf({0.0, 1.0}, {0.0, 0.9}), std::invalid_argument);
  CHECK_THROWS_AS(TabulatedCdf({0.0, 0.5, 1.0}, {0.0, 0.8, 0.5}), std::invalid_argument);
  const TabulatedCdf ok({0.0, 1.0}, {0.0, 1.0});
  CHECK(ok(0.5) == doctest::Approx(0.5));
  CHECK(ok(-1.0) == 0.0);
  CHECK(ok(2.0) == 1.0);
}

TEST_CASE("CDF of a uniform density is the identity ramp") {
  const TabulatedCdf cdf = cdf_of(uniform_pdf(0.0, 1.0), 512);
  CHECK(cdf.support_min() == doctest::Approx(0.0));
  CHECK(cdf.support_max() == doctest::Approx(1.0));
  CHECK(cdf.raw_total() == doctest::Approx(1.0).epsilon(1e-10));
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    CHECK(cdf(x) == doctest::Approx(x).epsilon(1e-10));
  }
}

TEST_CASE("CDF of the triangle density matches its closed form") {
  const PiecewisePdf tri = numeric_convolution(uniform_pdf(0.0, 1.0), uniform_pdf(0.0, 1.0), 1024);
  auto oracle = [](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 2.0) return 1.0;
    return s <= 1.0 ? 0.5 * s * s : 1.0 - 0.5 * (2.0 - s) * (2.0 - s);
  };
  auto worst_error = [&](const TabulatedCdf& cdf) {
    double worst = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double s = 2.0 * i / 2000.0;
      worst = std::max(worst, std::abs(cdf(s) - oracle(s)));
    }
    return worst;
  };
  // Interpolation error scales like (span / grid)^3.
  CHECK(worst_error(cdf_of(tri, 1024)) <= 5e-7);
  CHECK(worst_error(cdf_of(tri)) <= 5e-9);
}
