#include "pinchsec/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pinchsec/quadrature.hpp"

namespace pinchsec {

namespace {

// Absorbs floating-point overshoot at branch edges where the argument is
// mathematically in [-1, 1].
double clamped_asin(double x) { return std::asin(std::clamp(x, -1.0, 1.0)); }

// Tail-branch factor asin(d/sqrt(w)) - asin(sqrt(1 - quarter/w)) on
// quarter < w <= quarter + d^2. The difference is non-negative throughout and
// reaches zero exactly at the upper end, where both terms agree to leading
// order; 1 - quarter/w then cancels catastrophically and rounding can push the
// computed difference a hair below zero. Any negative value here is noise
// around that zero, so clamp it out.
double tail_bracket(double d, double quarter, double w) {
  const double lead = clamped_asin(d / std::sqrt(w));
  const double inner = clamped_asin(std::sqrt(std::max(0.0, 1.0 - quarter / w)));
  return std::max(0.0, lead - inner);
}

void require_positive_error(const SystemGeometry& g, const char* who) {
  g.validate();
  if (!(g.error_halfwidth > 0.0))
    throw std::invalid_argument(std::string(who) +
                                ": requires error_halfwidth > 0 (the no-error limit has no "
                                "analytic branch structure; use Monte Carlo there)");
}

}  // namespace

double pdf_x_separation(const SystemGeometry& g, double x) {
  g.validate();
  const double D = g.side_length;
  const double ax = std::abs(x);
  if (ax > D) return 0.0;
  return (D - ax) / (D * D);
}

double pdf_z(const SystemGeometry& g, double z) {
  require_positive_error(g, "pdf_z");
  const double D = g.side_length, d = g.error_halfwidth;
  const double az = std::abs(z);
  if (az <= d) return (2.0 * D * d - d * d - z * z) / (2.0 * d * D * D);
  if (az <= D - d) return (D - az) / (D * D);
  if (az <= D + d) {
    const double t = D + d - az;
    return t * t / (4.0 * d * D * D);
  }
  return 0.0;
}

double pdf_w(const SystemGeometry& g, double w) {
  require_positive_error(g, "pdf_w");
  const double D = g.side_length, d = g.error_halfwidth;
  const double dd = d * d, quarter = D * D / 4.0;
  if (!(w > 0.0) || w > dd + quarter) return 0.0;
  if (w <= dd) return std::numbers::pi / (2.0 * d * D);
  if (w <= quarter) return clamped_asin(d / std::sqrt(w)) / (d * D);
  return tail_bracket(d, quarter, w) / (d * D);
}

double pdf_gamma_bob(const SystemGeometry& g, double gamma) {
  require_positive_error(g, "pdf_gamma_bob");
  const double D = g.side_length, d = g.error_halfwidth, gbar = g.mean_snr;
  const double h2 = g.height * g.height;
  const double dd = d * d, quarter = D * D / 4.0;
  if (!(gamma >= gbar / (h2 + dd + quarter)) || gamma > gbar / h2) return 0.0;
  const double pref = gbar / (gamma * gamma);
  if (gamma >= gbar / (h2 + dd)) return pref * std::numbers::pi / (2.0 * d * D);
  const double w = gbar / gamma - h2;
  if (gamma >= gbar / (h2 + quarter)) return pref * clamped_asin(d / std::sqrt(w)) / (d * D);
  return pref * tail_bracket(d, quarter, w) / (d * D);
}

namespace {

PdfBranch make_branch(double lo, double hi, std::function<double(double)> density) {
  PdfBranch b;
  b.lo = lo;
  b.hi = hi;
  b.density = std::move(density);
  return b;
}

// Octave ladder lo*4, lo*16, ... strictly below hi.  The arcsine factors in
// the closed forms vary on the scale of delta^2 inside branches that can be
// many decades wider; panel quadrature needs cuts through that transition
// zone or it integrates the asymptote and misses mass when delta is tiny.
std::vector<double> octave_ladder(double lo, double hi) {
  std::vector<double> out;
  for (double m = 4.0 * lo; m < hi && out.size() < 64; m *= 4.0) out.push_back(m);
  return out;
}

// Exact convolution values of a + b sampled on a kink-clustered grid over
// [lo, hi].  Endpoints are included in the grid but carry degenerate limits
// when they coincide with the ends of the summed support, so comparisons use
// interior nodes only.
struct OracleNodes {
  std::vector<double> xs;
  std::vector<double> vals;
};

OracleNodes sample_convolution(const PiecewisePdf& a, const PiecewisePdf& b, double lo, double hi,
                               std::span<const double> kinks, std::size_t grid_size) {
  OracleNodes out;
  out.xs = clustered_grid(lo, hi, kinks, grid_size);
  out.vals.resize(out.xs.size());
  for (std::size_t i = 0; i < out.xs.size(); ++i) out.vals[i] = convolve_at(a, b, out.xs[i]);
  return out;
}

// Worst |closed(x) - oracle(x)| over the oracle nodes strictly inside
// (lo, hi).
double max_mismatch(const OracleNodes& nodes, double lo, double hi,
                    const std::function<double(double)>& closed) {
  double worst = 0.0;
  for (std::size_t i = 0; i < nodes.xs.size(); ++i) {
    const double x = nodes.xs[i];
    if (x <= lo || x >= hi) continue;
    worst = std::max(worst, std::abs(closed(x) - nodes.vals[i]));
  }
  return worst;
}

// Tabulated replacement for a closed-form branch that failed the oracle
// check: monotone-cubic fit through the oracle nodes inside [lo, hi].
PdfBranch tabulated_branch(const OracleNodes& nodes, double lo, double hi,
                           std::vector<double> interior_knots) {
  std::vector<double> xs, vals;
  for (std::size_t i = 0; i < nodes.xs.size(); ++i) {
    if (nodes.xs[i] < lo || nodes.xs[i] > hi) continue;
    xs.push_back(nodes.xs[i]);
    vals.push_back(nodes.vals[i]);
  }
  if (xs.size() < 4) throw std::logic_error("tabulated_branch: too few oracle nodes");
  if (xs.front() != lo) {
    xs.insert(xs.begin(), lo);
    vals.insert(vals.begin(), vals.front());
  }
  if (xs.back() != hi) {
    xs.push_back(hi);
    vals.push_back(vals.back());
  }
  // A node at the end of the summed support carries a degenerate zero-width
  // value; carry the interior limit outward instead.
  if (vals.front() == 0.0 && vals[1] > 0.0) vals.front() = vals[1];
  if (vals.back() == 0.0 && vals[vals.size() - 2] > 0.0) vals.back() = vals[vals.size() - 2];
  auto table = std::make_shared<CubicTable>(std::move(xs), std::move(vals));
  PdfBranch b;
  b.lo = lo;
  b.hi = hi;
  b.table = table;
  b.density = [table](double x) { return std::max(0.0, (*table)(x)); };
  b.interior_knots = std::move(interior_knots);
  b.exact_integral = table->integral();
  return b;
}

}  // namespace

MarginalSet MarginalSet::build(const SystemGeometry& g, const MarginalOptions& opts) {
  require_positive_error(g, "MarginalSet::build");
  if (opts.s_grid_size < 64 || opts.cdf_grid_size < 64)
    throw std::invalid_argument("MarginalSet::build: grid sizes must be >= 64");
  if (!(opts.oracle_tol > 0.0))
    throw std::invalid_argument("MarginalSet::build: oracle_tol must be > 0");

  const double D = g.side_length, d = g.error_halfwidth, gbar = g.mean_snr;
  const double h2 = g.height * g.height;
  const double dd = d * d;
  const double quarter = D * D / 4.0;
  const double wmax = dd + quarter;
  const double reach = D + d;
  const double smax = reach * reach + quarter;
  // delta == D/2 collapses the middle branch of both squared-distance
  // densities to zero width.
  const bool has_middle = quarter - dd > 1e-12 * wmax;

  MarginalSet out;
  out.geom_ = g;

  // --- building blocks -------------------------------------------------------
  const PiecewisePdf error_sq(
      {make_branch(0.0, dd, [d](double u) { return 1.0 / (2.0 * d * std::sqrt(u)); })});
  const PiecewisePdf offset_sq(
      {make_branch(0.0, quarter, [D](double v) { return 1.0 / (D * std::sqrt(v)); })});
  PdfBranch disp_sq_branch = make_branch(0.0, reach * reach, [g](double u) {
    const double r = std::sqrt(u);
    return pdf_z(g, r) / r;
  });
  disp_sq_branch.interior_knots = {dd, (D - d) * (D - d)};
  for (double m : octave_ladder(dd, (D - d) * (D - d)))
    disp_sq_branch.interior_knots.push_back(m);
  const PiecewisePdf displacement_sq({disp_sq_branch});

  // --- closed-form branch formulas -------------------------------------------
  auto w_flat = [d, D](double) { return std::numbers::pi / (2.0 * d * D); };
  auto w_mid = [d, D](double w) { return clamped_asin(d / std::sqrt(w)) / (d * D); };
  auto w_tail = [d, D, quarter](double w) { return tail_bracket(d, quarter, w) / (d * D); };
  auto s_head = [d, D](double s) {
    return std::numbers::pi / (2.0 * d * D * D * D) * (2.0 * D * d - d * d - 0.5 * s);
  };
  auto s_mid = [d, D, dd](double s) {
    return (2.0 * d * D * std::numbers::pi - (2.0 * dd + s) * clamped_asin(d / std::sqrt(s)) -
            3.0 * d * std::sqrt(std::max(0.0, s - dd))) /
           (2.0 * d * D * D * D);
  };
  const std::vector<double> mid_ladder = octave_ladder(dd, quarter);

  // --- tail branch of the eavesdropper squared distance (tabulated) ----------
  std::vector<double> s_kinks;
  for (double ku : {0.0, dd, (D - d) * (D - d), reach * reach})
    for (double kv : {0.0, quarter}) {
      const double s = ku + kv;
      if (s > quarter && s < smax) s_kinks.push_back(s);
    }
  std::sort(s_kinks.begin(), s_kinks.end());
  s_kinks.erase(std::unique(s_kinks.begin(), s_kinks.end()), s_kinks.end());

  const OracleNodes tail_nodes =
      sample_convolution(displacement_sq, offset_sq, quarter, smax, s_kinks, opts.s_grid_size);
  PdfBranch s3 = [&] {
    // s = smax is a genuine zero of the density; s = quarter is interior to
    // the summed support, where convolve_at is exact, so no endpoint fixes.
    auto table = std::make_shared<CubicTable>(tail_nodes.xs, tail_nodes.vals);
    PdfBranch b;
    b.lo = quarter;
    b.hi = smax;
    b.table = table;
    b.density = [table](double s) { return std::max(0.0, (*table)(s)); };
    b.interior_knots = s_kinks;
    b.exact_integral = table->integral();
    return b;
  }();

  // --- oracle cross-check of every closed-form branch ------------------------
  bool fb_w1 = false, fb_w2 = false, fb_w3 = false, fb_s1 = false, fb_s2 = false;
  OracleNodes w_nodes, s_head_nodes;
  if (opts.run_oracle_check) {
    out.check_.ran = true;
    w_nodes = sample_convolution(error_sq, offset_sq, 0.0, wmax, std::vector<double>{dd, quarter},
                                 4096);
    const double e_w1 = max_mismatch(w_nodes, 0.0, dd, w_flat);
    const double e_w2 = has_middle ? max_mismatch(w_nodes, dd, quarter, w_mid) : 0.0;
    const double e_w3 = max_mismatch(w_nodes, has_middle ? quarter : dd, wmax, w_tail);
    out.check_.max_error_w = std::max({e_w1, e_w2, e_w3});
    fb_w1 = e_w1 > opts.oracle_tol;
    fb_w2 = e_w2 > opts.oracle_tol;
    fb_w3 = e_w3 > opts.oracle_tol;
    out.check_.fallback_w = fb_w1 || fb_w2 || fb_w3;

    s_head_nodes = sample_convolution(displacement_sq, offset_sq, 0.0, quarter,
                                      std::vector<double>{dd}, 2048);
    const double e_s1 = max_mismatch(s_head_nodes, 0.0, dd, s_head);
    const double e_s2 = has_middle ? max_mismatch(s_head_nodes, dd, quarter, s_mid) : 0.0;
    out.check_.max_error_s = std::max(e_s1, e_s2);
    fb_s1 = e_s1 > opts.oracle_tol;
    fb_s2 = e_s2 > opts.oracle_tol;
    out.check_.fallback_s = fb_s1 || fb_s2;
  }

  // --- squared-distance densities ---------------------------------------------
  {
    std::vector<PdfBranch> bs;
    bs.push_back(fb_w1 ? tabulated_branch(w_nodes, 0.0, dd, {}) : make_branch(0.0, dd, w_flat));
    if (has_middle) {
      bs.push_back(fb_w2 ? tabulated_branch(w_nodes, dd, quarter, mid_ladder)
                         : make_branch(dd, quarter, w_mid));
      if (!fb_w2) bs.back().interior_knots = mid_ladder;
    }
    const double tail_lo = has_middle ? quarter : dd;
    bs.push_back(fb_w3 ? tabulated_branch(w_nodes, tail_lo, wmax, {})
                       : make_branch(tail_lo, wmax, w_tail));
    out.w_pdf_ = std::make_shared<const PiecewisePdf>(std::move(bs), 1e-6);
  }
  {
    std::vector<PdfBranch> bs;
    bs.push_back(fb_s1 ? tabulated_branch(s_head_nodes, 0.0, dd, {})
                       : make_branch(0.0, dd, s_head));
    if (has_middle)
      bs.push_back(fb_s2 ? tabulated_branch(s_head_nodes, dd, quarter, {})
                         : make_branch(dd, quarter, s_mid));
    if (!has_middle) s3.lo = dd;
    bs.push_back(s3);
    out.s_pdf_ = std::make_shared<const PiecewisePdf>(std::move(bs), 1e-5);
  }

  // --- SNR densities (gamma space) --------------------------------------------
  const double bob_lo = gbar / (h2 + wmax);
  const double bob_mid = gbar / (h2 + quarter);
  const double bob_hi_edge = gbar / (h2 + dd);
  const double gamma_max = gbar / h2;
  const double eve_lo = gbar / (h2 + smax);

  {
    // Verbatim gamma-space transcription unless a fallback replaced the
    // underlying w-space form, in which case the change of variables routes
    // through the validated w density.
    const bool compose = fb_w1 || fb_w2 || fb_w3;
    auto w_ref = out.w_pdf_;
    auto density = [g, compose, w_ref, h2, gbar](double gamma) {
      if (!compose) return pinchsec::pdf_gamma_bob(g, gamma);
      return gbar / (gamma * gamma) * (*w_ref)(gbar / gamma - h2);
    };
    std::vector<PdfBranch> bs;
    bs.push_back(make_branch(bob_lo, has_middle ? bob_mid : bob_hi_edge, density));
    if (has_middle) {
      bs.push_back(make_branch(bob_mid, bob_hi_edge, density));
      for (double m : mid_ladder) bs.back().interior_knots.push_back(gbar / (h2 + m));
    }
    bs.push_back(make_branch(bob_hi_edge, gamma_max, density));
    out.bob_pdf_ = std::make_shared<const PiecewisePdf>(std::move(bs), 1e-6);
  }
  {
    const bool compose = fb_s1 || fb_s2;
    auto s_ref = out.s_pdf_;
    auto head = [compose, s_ref, h2, gbar, s_head](double gamma) {
      const double s = gbar / gamma - h2;
      if (compose) return gbar / (gamma * gamma) * (*s_ref)(s);
      return gbar / (gamma * gamma) * s_head(s);
    };
    auto mid = [compose, s_ref, h2, gbar, s_mid](double gamma) {
      const double s = gbar / gamma - h2;
      if (compose) return gbar / (gamma * gamma) * (*s_ref)(s);
      return gbar / (gamma * gamma) * s_mid(s);
    };
    auto s3_table = s3.table;
    auto tail = [s3_table, h2, gbar](double gamma) {
      const double s = gbar / gamma - h2;
      return gbar / (gamma * gamma) * std::max(0.0, (*s3_table)(s));
    };
    PdfBranch e3 = make_branch(eve_lo, has_middle ? bob_mid : bob_hi_edge, tail);
    for (double sk : s_kinks) e3.interior_knots.push_back(gbar / (h2 + sk));
    // The map gamma = gbar / (s + h^2) preserves mass exactly, so the branch
    // integral is the backing table's integral.
    e3.exact_integral = s3.exact_integral;
    std::vector<PdfBranch> bs;
    bs.push_back(std::move(e3));
    if (has_middle) bs.push_back(make_branch(bob_mid, bob_hi_edge, mid));
    bs.push_back(make_branch(bob_hi_edge, gamma_max, head));
    out.eve_pdf_ = std::make_shared<const PiecewisePdf>(std::move(bs), 1e-5);
  }

  // --- CDF tables in w/s space -------------------------------------------------
  out.w_cdf_ = std::make_shared<const TabulatedCdf>(cdf_of(*out.w_pdf_, opts.cdf_grid_size));
  out.s_cdf_ = std::make_shared<const TabulatedCdf>(cdf_of(*out.s_pdf_, opts.cdf_grid_size));
  return out;
}

double MarginalSet::cdf_gamma_bob(double gamma) const {
  if (!(gamma > 0.0)) return 0.0;
  const double h2 = geom_.height * geom_.height;
  return 1.0 - (*w_cdf_)(geom_.mean_snr / gamma - h2);
}

double MarginalSet::cdf_gamma_eve(double gamma) const {
  if (!(gamma > 0.0)) return 0.0;
  const double h2 = geom_.height * geom_.height;
  return 1.0 - (*s_cdf_)(geom_.mean_snr / gamma - h2);
}

}  // namespace pinchsec
