#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

// Panel quadrature tuned for the densities in this project: integrable
// 1/sqrt singularities at interval ends and square-root kinks at known
// interior points.  Strategy everywhere: split at the known points, then
// integrate each piece with the substitution u = end +/- t^2 toward both
// ends, which turns sqrt behaviour into something analytic.
namespace pinchsec::quad {

namespace detail {

inline std::pair<std::vector<double>, std::vector<double>> legendre_rule(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 64; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return {x, w};
}

inline const std::pair<std::vector<double>, std::vector<double>>& gl32() {
  static const auto rule = legendre_rule(32);
  return rule;
}

inline const std::pair<std::vector<double>, std::vector<double>>& gl16() {
  static const auto rule = legendre_rule(16);
  return rule;
}

}  // namespace detail

// Plain Gauss-Legendre panel on [a, b].
template <class F>
double gl_panel(F&& f, double a, double b, bool coarse = false) {
  const auto& [xs, ws] = coarse ? detail::gl16() : detail::gl32();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += ws[i] * f(mid + half * xs[i]);
  return half * sum;
}

// Integrate f over [a, b] tolerating 1/sqrt blow-ups anchored at anchor_lo
// <= a and anchor_hi >= b: split at the midpoint and substitute
// u = anchor_lo + t^2 on the left half, u = anchor_hi - t^2 on the right, so
// sqrt(u - anchor_lo)- and sqrt(anchor_hi - u)-type factors become analytic
// in t even when the anchor sits slightly outside the segment.  Evaluation
// points are clamped one ulp inside an endpoint that is itself an anchor, so
// rounding in anchor +/- t^2 never lands exactly on a blow-up point.
template <class F>
double segment_sqrt_anchored(F&& f, double a, double b, double anchor_lo, double anchor_hi,
                             bool coarse = false) {
  if (!(b > a)) return 0.0;
  const double in_lo = anchor_lo < a ? a : std::nextafter(a, b);
  const double in_hi = anchor_hi > b ? b : std::nextafter(b, a);
  if (!(in_lo <= in_hi)) return 0.0;
  auto pinned = [&](double u) { return f(std::min(std::max(u, in_lo), in_hi)); };
  const double m = 0.5 * (a + b);
  const double left = gl_panel([&](double t) { return 2.0 * t * pinned(anchor_lo + t * t); },
                               std::sqrt(a - anchor_lo), std::sqrt(m - anchor_lo), coarse);
  const double right = gl_panel([&](double t) { return 2.0 * t * pinned(anchor_hi - t * t); },
                                std::sqrt(anchor_hi - b), std::sqrt(anchor_hi - m), coarse);
  return left + right;
}

// Integrate f over [a, b] tolerating 1/sqrt blow-ups at either end.
template <class F>
double segment_sqrt_ends(F&& f, double a, double b, bool coarse = false) {
  return segment_sqrt_anchored(std::forward<F>(f), a, b, a, b, coarse);
}

// Split [a, b] at the interior knots and apply segment_sqrt_ends per piece.
template <class F>
double integrate_kinked(F&& f, double a, double b, std::span<const double> knots,
                        bool coarse = false) {
  if (!(b > a)) return 0.0;
  std::vector<double> cuts{a, b};
  for (double k : knots)
    if (k > a && k < b) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += segment_sqrt_ends(f, cuts[i], cuts[i + 1], coarse);
  return total;
}

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7-15 node pair (QUADPACK dqk15 constants).
inline constexpr double kGk15X[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kGk15Wk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679,  0.1903505780647854,  0.2044329400752989, 0.2094821410847278};
inline constexpr double kGk15Wg[4] = {0.1294849661688697, 0.2797053914892767,
                                      0.3818300505051189, 0.4179591836734694};

template <class F>
std::pair<double, double> gk15(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(mid);
  double kron = kGk15Wk[7] * fc;
  double gauss = kGk15Wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGk15X[i];
    const double fsum = f(mid - dx) + f(mid + dx);
    kron += kGk15Wk[i] * fsum;
    if (i % 2 == 1) gauss += kGk15Wg[i / 2] * fsum;
  }
  kron *= half;
  gauss *= half;
  return {kron, std::abs(kron - gauss)};
}

template <class F>
void adapt_segment(F&& f, double a, double b, double tol, int depth, int min_depth, int max_depth,
                   AdaptiveResult& out) {
  const auto [value, err] = gk15(f, a, b);
  out.evaluations += 15;
  const double width_floor = 64.0 * 2.2e-16 * std::max({std::abs(a), std::abs(b), 1.0});
  // The first min_depth levels subdivide unconditionally: a feature narrower
  // than the node spacing can look converged at low depth because every node
  // misses it.
  const bool may_stop = depth >= min_depth || depth >= max_depth || (b - a) <= width_floor;
  if (may_stop && (err <= tol || depth >= max_depth || (b - a) <= width_floor)) {
    out.value += value;
    out.error_estimate += err;
    if (err > tol) out.converged = false;
    return;
  }
  const double m = 0.5 * (a + b);
  adapt_segment(f, a, m, 0.5 * tol, depth + 1, min_depth, max_depth, out);
  adapt_segment(f, m, b, 0.5 * tol, depth + 1, min_depth, max_depth, out);
}

}  // namespace detail

// Adaptive Gauss-Kronrod with forced subdivision at the supplied knots.
// abs_tol is a global absolute target, distributed over segments by width.
// Every knot segment is pre-subdivided min_depth levels before error control
// may declare convergence, so narrow features near knots are not skipped.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                                  std::span<const double> knots = {}, int max_depth = 48,
                                  int min_depth = 4) {
  AdaptiveResult out;
  if (!(b > a)) return out;
  std::vector<double> cuts{a, b};
  for (double k : knots)
    if (k > a && k < b) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double frac = (cuts[i + 1] - cuts[i]) / (b - a);
    detail::adapt_segment(f, cuts[i], cuts[i + 1], abs_tol * std::max(frac, 1e-6), 0, min_depth,
                          max_depth, out);
  }
  return out;
}

}  // namespace pinchsec::quad
