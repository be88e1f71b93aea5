#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "pinchsec/geometry.hpp"
#include "pinchsec/marginals.hpp"
#include "pinchsec/piecewise.hpp"
#include "pinchsec/quadrature.hpp"

using namespace pinchsec;

namespace {

SystemGeometry default_geometry() { return SystemGeometry{}; }

SystemGeometry with_halfwidth(double delta) {
  SystemGeometry g;
  g.error_halfwidth = delta;
  return g;
}

PiecewisePdf displacement_sq_pdf(const SystemGeometry& g) {
  PdfBranch b;
  const double D = g.side_length, d = g.error_halfwidth;
  b.lo = 0.0;
  b.hi = (D + d) * (D + d);
  b.density = [g](double u) {
    const double r = std::sqrt(u);
    return pdf_z(g, r) / r;
  };
  b.interior_knots = {d * d, (D - d) * (D - d)};
  return PiecewisePdf({b});
}

PiecewisePdf offset_sq_pdf(const SystemGeometry& g) {
  PdfBranch b;
  const double D = g.side_length;
  b.lo = 0.0;
  b.hi = D * D / 4.0;
  b.density = [D](double v) { return 1.0 / (D * std::sqrt(v)); };
  return PiecewisePdf({b});
}

}  // namespace

TEST_CASE("triangular separation density") {
  const auto g = default_geometry();
  CHECK(pdf_x_separation(g, 0.0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(pdf_x_separation(g, 10.0) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(pdf_x_separation(g, -10.0) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(pdf_x_separation(g, 20.0) == 0.0);
  CHECK(pdf_x_separation(g, -20.0) == 0.0);
  CHECK(pdf_x_separation(g, 20.5) == 0.0);
  const double knots[] = {0.0};
  const double mass =
      quad::integrate_kinked([&](double x) { return pdf_x_separation(g, x); }, -20.0, 20.0, knots);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("displaced separation density") {
  const auto g = default_geometry();  // D = 20, delta = 1
  CHECK(pdf_z(g, 0.0) == doctest::Approx(0.04875).epsilon(1e-15));
  CHECK(pdf_z(g, 10.0) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(pdf_z(g, 20.5) == doctest::Approx(0.00015625).epsilon(1e-15));
  CHECK(pdf_z(g, 21.0) == 0.0);
  CHECK(pdf_z(g, -21.5) == 0.0);

  // Continuity across the three pieces.
  for (double edge : {1.0, 19.0, -1.0, -19.0}) {
    const double a = pdf_z(g, std::nextafter(edge, -100.0));
    const double b = pdf_z(g, std::nextafter(edge, 100.0));
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }

  // Oracle: the density is the uniform smoothing of the triangle.
  for (double delta : {1.0, 7.0, 10.0}) {
    const auto gg = with_halfwidth(delta);
    const double tri_knots[] = {-20.0, 0.0, 20.0};
    for (double z = -21.8; z <= 21.8; z += 1.37) {
      const double smoothed =
          quad::integrate_kinked([&](double u) { return pdf_x_separation(gg, u); }, z - delta,
                                 z + delta, tri_knots) /
          (2.0 * delta);
      CHECK(pdf_z(gg, z) == doctest::Approx(smoothed).epsilon(1e-10).scale(1.0));
    }
    const double z_knots[] = {-20.0 - delta, -delta, delta, 20.0 - delta, delta - 20.0,
                              20.0 + delta};
    const double mass = quad::integrate_kinked([&](double z) { return pdf_z(gg, z); },
                                               -20.0 - delta, 20.0 + delta, z_knots);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(pdf_z(with_halfwidth(0.0), 0.3), std::invalid_argument);
}

TEST_CASE("legitimate-link squared-distance density: closed forms") {
  const auto g = default_geometry();
  // Frozen high-precision references.
  CHECK(pdf_w(g, 0.5) == doctest::Approx(0.07853981633974483).epsilon(1e-14));
  CHECK(pdf_w(g, 1.0) == doctest::Approx(0.07853981633974483).epsilon(1e-14));
  CHECK(pdf_w(g, 50.0) == doctest::Approx(0.007094852730208196).epsilon(1e-14));
  CHECK(pdf_w(g, 100.5) == doctest::Approx(0.001466196194197174).epsilon(1e-13));
  CHECK(pdf_w(g, 0.0) == 0.0);
  CHECK(pdf_w(g, -3.0) == 0.0);
  // The density vanishes exactly at the top of the support.
  CHECK(pdf_w(g, 101.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(pdf_w(g, 100.9) > 0.0);
  CHECK(pdf_w(g, 101.0 + 1e-9) == 0.0);

  // Continuity at the two interior seams (the seam at D^2/4 has a
  // square-root approach, so one ulp of argument moves the value ~1e-10).
  for (double edge : {1.0, 100.0}) {
    const double lo = pdf_w(g, std::nextafter(edge, 0.0));
    const double hi = pdf_w(g, std::nextafter(edge, 200.0));
    CHECK(lo == doctest::Approx(hi).epsilon(1e-7).scale(0.01));
  }

  // Exact branch masses (antiderivative w*asin(d/sqrt(w)) + d*sqrt(w - d^2)).
  auto mass_between = [&](double a, double b) {
    return quad::integrate_adaptive([&](double w) { return pdf_w(g, w); }, a, b, 1e-12).value;
  };
  CHECK(mass_between(0.0, 1.0) == doctest::Approx(0.07853981633974483).epsilon(1e-10));
  CHECK(mass_between(1.0, 100.0) == doctest::Approx(0.9197910080213641).epsilon(1e-9));
  CHECK(mass_between(100.0, 101.0) == doctest::Approx(0.001669175638891041).epsilon(1e-8));

  CHECK_THROWS_AS(pdf_w(with_halfwidth(0.0), 0.5), std::invalid_argument);
}

TEST_CASE("marginal bundle at defaults: oracle check and normalization") {
  const auto g = default_geometry();
  const auto set = MarginalSet::build(g);

  CHECK(set.oracle_check().ran);
  CHECK_FALSE(set.oracle_check().fallback_w);
  CHECK_FALSE(set.oracle_check().fallback_s);
  CHECK(set.oracle_check().max_error_w <= 1e-6);
  CHECK(set.oracle_check().max_error_s <= 1e-5);

  CHECK(set.w_density().normalization_residual() <= 1e-6);
  CHECK(set.s_density().normalization_residual() <= 1e-7);
  CHECK(set.bob_density().normalization_residual() <= 1e-6);
  CHECK(set.eve_density().normalization_residual() <= 1e-5);

  // Piecewise bundle agrees with the free closed forms.
  for (int i = 0; i <= 1000; ++i) {
    const double w = 101.0 * (i + 0.5) / 1001.0;
    CHECK(set.pdf_w(w) == doctest::Approx(pdf_w(g, w)).epsilon(1e-13));
  }

  // Frozen values for the eavesdropper closed branches.
  CHECK(set.pdf_s(0.5) == doctest::Approx(0.00760854470791278).epsilon(1e-13));
  CHECK(set.pdf_s(50.0) == doctest::Approx(0.006080316206510950).epsilon(1e-13));

  // Tabulated tail matches a freshly computed convolution away from the grid.
  const auto disp = displacement_sq_pdf(g);
  const auto off = offset_sq_pdf(g);
  for (double s : {150.0, 250.0, 350.0, 450.0, 530.0}) {
    const double exact = convolve_at(disp, off, s);
    CHECK(set.pdf_s(s) == doctest::Approx(exact).epsilon(1e-6).scale(0.01));
  }

  // Support endpoints line up with the geometry helpers.
  CHECK(set.bob_density().support_min() == doctest::Approx(g.bob_snr_min()).epsilon(1e-14));
  CHECK(set.bob_density().support_max() == doctest::Approx(g.bob_snr_max()).epsilon(1e-14));
  CHECK(set.eve_density().support_min() == doctest::Approx(g.eve_snr_min()).epsilon(1e-14));
  CHECK(set.eve_density().support_max() == doctest::Approx(g.eve_snr_max()).epsilon(1e-14));

  // Rebuilds are deterministic.
  const auto again = MarginalSet::build(g);
  for (double s : {0.25, 3.0, 77.0, 123.0, 444.0})
    CHECK(set.pdf_s(s) == again.pdf_s(s));
}

TEST_CASE("snr densities are the squared-distance densities under the change of variables") {
  for (double snr : {1e12, 1e4}) {
    SystemGeometry g;
    g.mean_snr = snr;
    const auto set = MarginalSet::build(g);
    const double h2 = g.height * g.height;

    const double bob_lo = set.bob_density().support_min();
    const double bob_hi = set.bob_density().support_max();
    for (int i = 1; i < 1000; ++i) {
      const double gamma = bob_lo + (bob_hi - bob_lo) * i / 1000.0;
      const double via_w = pdf_w(g, g.mean_snr / gamma - h2) * g.mean_snr / (gamma * gamma);
      CHECK(set.pdf_gamma_bob(gamma) ==
            doctest::Approx(via_w).epsilon(1e-10).scale(1.0 / gamma));
      CHECK(pdf_gamma_bob(g, gamma) ==
            doctest::Approx(via_w).epsilon(1e-10).scale(1.0 / gamma));
    }

    const double eve_lo = set.eve_density().support_min();
    const double eve_hi = set.eve_density().support_max();
    for (int i = 1; i < 1000; ++i) {
      const double gamma = eve_lo + (eve_hi - eve_lo) * i / 1000.0;
      const double via_s = set.pdf_s(g.mean_snr / gamma - h2) * g.mean_snr / (gamma * gamma);
      CHECK(set.pdf_gamma_eve(gamma) ==
            doctest::Approx(via_s).epsilon(1e-10).scale(1.0 / gamma));
    }
  }

  // Frozen spot value: w = 50 maps to gamma = 1e12 / 75.
  const auto g = default_geometry();
  CHECK(pdf_gamma_bob(g, 1e12 / 75.0) ==
        doctest::Approx(3.990854660742110e-11).epsilon(1e-13));
  CHECK_THROWS_AS(pdf_gamma_bob(with_halfwidth(0.0), 1e10), std::invalid_argument);
}

TEST_CASE("cdf tables integrate the densities") {
  const auto g = default_geometry();
  const auto set = MarginalSet::build(g);

  CHECK(set.w_cdf()(0.0) == 0.0);
  CHECK(set.w_cdf()(-5.0) == 0.0);
  CHECK(set.w_cdf()(101.0) == 1.0);
  CHECK(set.w_cdf()(500.0) == 1.0);
  CHECK(set.s_cdf()(0.0) == 0.0);
  CHECK(set.s_cdf()(541.0) == 1.0);

  // Monotone in between.
  double prev = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double v = set.w_cdf()(101.0 * i / 2000.0);
    CHECK(v >= prev);
    prev = v;
  }

  // Against an adaptive integral of the density.
  const auto& wk = set.w_density().knots();
  for (double w0 : {0.3, 1.0, 7.0, 42.0, 99.9, 100.7}) {
    const double ref =
        quad::integrate_adaptive([&](double w) { return set.pdf_w(w); }, 0.0, w0, 1e-11, wk)
            .value;
    CHECK(set.w_cdf()(w0) == doctest::Approx(ref).scale(1.0).epsilon(1e-8));
  }
  const auto& sk = set.s_density().knots();
  for (double s0 : {0.6, 30.0, 120.0, 333.0, 505.0}) {
    const double ref =
        quad::integrate_adaptive([&](double s) { return set.pdf_s(s); }, 0.0, s0, 1e-11, sk)
            .value;
    CHECK(set.s_cdf()(s0) == doctest::Approx(ref).scale(1.0).epsilon(1e-8));
  }

  // SNR-space CDFs through the decreasing map.  Strictly outside the support
  // the values are exact; at the endpoints allow round-off in the map.
  CHECK(set.cdf_gamma_bob(g.bob_snr_min() * 0.5) == 0.0);
  CHECK(set.cdf_gamma_bob(g.bob_snr_max() * 2.0) == 1.0);
  CHECK(set.cdf_gamma_bob(-1.0) == 0.0);
  CHECK(set.cdf_gamma_bob(g.bob_snr_min()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(set.cdf_gamma_bob(g.bob_snr_max()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(set.cdf_gamma_eve(g.eve_snr_min()) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(set.cdf_gamma_eve(g.eve_snr_max()) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(set.cdf_gamma_eve(g.eve_snr_min() * 0.5) == 0.0);
  CHECK(set.cdf_gamma_eve(g.eve_snr_max() * 2.0) == 1.0);

  const auto& bk = set.bob_density().knots();
  for (double q : {0.15, 0.5, 0.85}) {
    const double gamma = g.bob_snr_min() + (g.bob_snr_max() - g.bob_snr_min()) * q;
    const double ref = quad::integrate_adaptive([&](double x) { return set.pdf_gamma_bob(x); },
                                                g.bob_snr_min(), gamma, 1e-9, bk)
                           .value;
    CHECK(set.cdf_gamma_bob(gamma) == doctest::Approx(ref).scale(1.0).epsilon(1e-7));
  }
  const auto& ek = set.eve_density().knots();
  for (double q : {0.2, 0.6, 0.9}) {
    const double gamma = g.eve_snr_min() + (g.eve_snr_max() - g.eve_snr_min()) * q;
    const double ref = quad::integrate_adaptive([&](double x) { return set.pdf_gamma_eve(x); },
                                                g.eve_snr_min(), gamma, 1e-9, ek)
                           .value;
    CHECK(set.cdf_gamma_eve(gamma) == doctest::Approx(ref).scale(1.0).epsilon(1e-7));
  }
}

TEST_CASE("sampled snr distributions match the analytic marginals") {
  const auto g = default_geometry();
  const auto set = MarginalSet::build(g);
  constexpr std::uint64_t kSeed = 20240817;
  constexpr std::size_t kSamples = 1'000'000;

  std::vector<double> bob(kSamples), eve(kSamples);
  for (std::size_t i = 0; i < kSamples; ++i) {
    const auto r = sample_realization(g, kSeed, i);
    bob[i] = snr_bob(g, r);
    eve[i] = snr_eve(g, r);
  }

  // Histogram L1 distance for the eavesdropper SNR.
  constexpr int kBins = 50;
  const double lo = g.eve_snr_min(), hi = g.eve_snr_max();
  std::vector<double> counts(kBins, 0.0);
  for (double v : eve) {
    int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
    b = std::clamp(b, 0, kBins - 1);
    counts[b] += 1.0;
  }
  double l1 = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double a = lo + (hi - lo) * b / kBins;
    const double c = lo + (hi - lo) * (b + 1) / kBins;
    const double expected = set.cdf_gamma_eve(c) - set.cdf_gamma_eve(a);
    l1 += std::abs(counts[b] / kSamples - expected);
  }
  CHECK(l1 <= 0.02);

  // Empirical CDF at ten fixed quantile-ish points, both links.
  std::sort(bob.begin(), bob.end());
  std::sort(eve.begin(), eve.end());
  auto empirical = [&](const std::vector<double>& sorted, double x) {
    return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), x) -
                               sorted.begin()) /
           static_cast<double>(sorted.size());
  };
  for (int i = 1; i <= 10; ++i) {
    const double gb = g.bob_snr_min() + (g.bob_snr_max() - g.bob_snr_min()) * i / 11.0;
    CHECK(std::abs(empirical(bob, gb) - set.cdf_gamma_bob(gb)) <= 0.005);
    const double ge = g.eve_snr_min() + (g.eve_snr_max() - g.eve_snr_min()) * i / 11.0;
    CHECK(std::abs(empirical(eve, ge) - set.cdf_gamma_eve(ge)) <= 0.005);
  }
}

TEST_CASE("edge geometries") {
  // No-error limit: analytic machinery refuses, with a clear message.
  CHECK_THROWS_AS(MarginalSet::build(with_halfwidth(0.0)), std::invalid_argument);

  // Maximal halfwidth delta = D/2 collapses the middle branches.
  {
    const auto g = with_halfwidth(10.0);
    const auto set = MarginalSet::build(g);
    CHECK(set.w_density().branch_count() == 2);
    CHECK(set.s_density().branch_count() == 2);
    CHECK(set.bob_density().branch_count() == 2);
    CHECK(set.eve_density().branch_count() == 2);
    CHECK_FALSE(set.oracle_check().fallback_w);
    CHECK_FALSE(set.oracle_check().fallback_s);
    CHECK(set.oracle_check().max_error_w <= 1e-6);
    CHECK(set.oracle_check().max_error_s <= 1e-5);
    CHECK(set.w_density().support_max() == doctest::Approx(200.0).epsilon(1e-15));
    CHECK(set.bob_density().support_min() == doctest::Approx(g.bob_snr_min()).epsilon(1e-14));
    const double mass = quad::integrate_adaptive([&](double w) { return set.pdf_w(w); }, 0.0,
                                                 200.0, 1e-10, set.w_density().knots())
                            .value;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  }

  // Near-degenerate tiny halfwidth must still build cleanly.
  {
    const auto g = with_halfwidth(2e-5);
    const auto set = MarginalSet::build(g);
    CHECK(set.w_density().branch_count() == 3);
    CHECK_FALSE(set.oracle_check().fallback_w);
    CHECK_FALSE(set.oracle_check().fallback_s);
    CHECK(set.oracle_check().max_error_w <= 1e-6);
    CHECK(set.oracle_check().max_error_s <= 1e-5);
    CHECK(set.eve_density().support_min() == doctest::Approx(g.eve_snr_min()).epsilon(1e-14));
    // In this limit W collapses to y1^2, so P(gamma_bob <= gbar/(50 + h^2))
    // = P(y1^2 >= 50) = 1 - sqrt(50)/10.
    const double limit = 1.0 - std::sqrt(50.0) / 10.0;
    CHECK(set.cdf_gamma_bob(g.mean_snr / 75.0) ==
          doctest::Approx(limit).epsilon(1e-4).scale(1.0));
  }

  // Options validation.
  MarginalOptions bad;
  bad.s_grid_size = 32;
  CHECK_THROWS_AS(MarginalSet::build(default_geometry(), bad), std::invalid_argument);
  MarginalOptions no_oracle;
  no_oracle.run_oracle_check = false;
  const auto quick = MarginalSet::build(default_geometry(), no_oracle);
  CHECK_FALSE(quick.oracle_check().ran);
  CHECK_FALSE(quick.oracle_check().fallback_w);
}
