#include "pinchsec/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pinchsec/quadrature.hpp"

namespace pinchsec {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Validation shared by TabulatedCdf construction: ends at 0 and 1 within
// 1e-9, non-decreasing; tiny violations are clamped, real ones throw.
CubicTable make_cdf_table(std::vector<double> xs, std::vector<double> values) {
  if (values.size() != xs.size() || values.size() < 2)
    throw std::invalid_argument("TabulatedCdf: need matching grids of >= 2 points");
  if (std::abs(values.front()) > 1e-9)
    throw std::invalid_argument("TabulatedCdf: CDF must start at 0");
  if (std::abs(values.back() - 1.0) > 1e-9)
    throw std::invalid_argument("TabulatedCdf: CDF must end at 1");
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (values[i + 1] < values[i] - 1e-12)
      throw std::invalid_argument("TabulatedCdf: values must be non-decreasing");
  values.front() = 0.0;
  values.back() = 1.0;
  double running = 0.0;
  for (double& v : values) {
    running = std::max(running, std::min(v, 1.0));
    v = running;
  }
  return CubicTable(std::move(xs), std::move(values));
}

}  // namespace

CubicTable::CubicTable(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  const std::size_t n = xs_.size();
  if (n < 2 || ys_.size() != n)
    throw std::invalid_argument("CubicTable: need >= 2 matching abscissae/values");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(xs_[i + 1] > xs_[i]))
      throw std::invalid_argument("CubicTable: abscissae must be strictly increasing");

  // Fritsch-Carlson derivative limiting (the MATLAB pchip rules).
  d_.assign(n, 0.0);
  std::vector<double> h(n - 1), slope(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs_[i + 1] - xs_[i];
    slope[i] = (ys_[i + 1] - ys_[i]) / h[i];
  }
  if (n == 2) {
    d_[0] = d_[1] = slope[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (slope[i - 1] * slope[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
    }
  }
  auto end_derivative = [](double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (sign_of(d) != sign_of(s0))
      d = 0.0;
    else if (sign_of(s0) != sign_of(s1) && std::abs(d) > 3.0 * std::abs(s0))
      d = 3.0 * s0;
    return d;
  };
  d_[0] = end_derivative(h[0], h[1], slope[0], slope[1]);
  d_[n - 1] = end_derivative(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
}

std::size_t CubicTable::cell_of(double q) const {
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), q);
  const std::size_t idx = static_cast<std::size_t>(it - xs_.begin());
  if (idx == 0) return 0;
  if (idx >= xs_.size()) return xs_.size() - 2;
  return idx - 1;
}

double CubicTable::operator()(double q) const {
  if (q <= xs_.front()) return ys_.front();
  if (q >= xs_.back()) return ys_.back();
  const std::size_t i = cell_of(q);
  const double h = xs_[i + 1] - xs_[i];
  const double t = (q - xs_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * ys_[i] + (t3 - 2.0 * t2 + t) * h * d_[i] +
         (-2.0 * t3 + 3.0 * t2) * ys_[i + 1] + (t3 - t2) * h * d_[i + 1];
}

double CubicTable::integral() const { return integral_between(xs_.front(), xs_.back()); }

double CubicTable::integral_between(double a, double b) const {
  a = std::max(a, xs_.front());
  b = std::min(b, xs_.back());
  if (!(b > a)) return 0.0;
  // Exact antiderivative of the Hermite cubic on cell i, from the cell start
  // to local coordinate t = (q - x_i) / h.
  auto cell_integral_to = [&](std::size_t i, double q) {
    const double h = xs_[i + 1] - xs_[i];
    const double t = (q - xs_[i]) / h;
    const double dy = ys_[i + 1] - ys_[i];
    const double c0 = ys_[i];
    const double c1 = h * d_[i];
    const double c2 = 3.0 * dy - h * (2.0 * d_[i] + d_[i + 1]);
    const double c3 = -2.0 * dy + h * (d_[i] + d_[i + 1]);
    return h * t * (c0 + t * (0.5 * c1 + t * (c2 / 3.0 + 0.25 * c3 * t)));
  };
  const std::size_t ia = cell_of(a), ib = cell_of(b);
  if (ia == ib) return cell_integral_to(ia, b) - cell_integral_to(ia, a);
  double total = cell_integral_to(ia, xs_[ia + 1]) - cell_integral_to(ia, a);
  for (std::size_t i = ia + 1; i < ib; ++i) {
    const double h = xs_[i + 1] - xs_[i];
    total += 0.5 * h * (ys_[i] + ys_[i + 1]) + h * h * (d_[i] - d_[i + 1]) / 12.0;
  }
  total += cell_integral_to(ib, b);
  return total;
}

void CubicTable::rescale(double factor) {
  for (double& y : ys_) y *= factor;
  for (double& d : d_) d *= factor;
}

PiecewisePdf::PiecewisePdf(std::vector<PdfBranch> branches, double normalization_tol)
    : branches_(std::move(branches)) {
  if (branches_.empty()) throw std::invalid_argument("PiecewisePdf: no branches");
  for (const auto& b : branches_) {
    if (!(b.hi > b.lo)) throw std::invalid_argument("PiecewisePdf: branch with hi <= lo");
    if (!b.density) throw std::invalid_argument("PiecewisePdf: branch without a density");
  }
  const double span = branches_.back().hi - branches_.front().lo;
  for (std::size_t i = 0; i + 1 < branches_.size(); ++i) {
    if (std::abs(branches_[i + 1].lo - branches_[i].hi) > 1e-12 * std::max(span, 1.0))
      throw std::invalid_argument("PiecewisePdf: branches must tile the support");
    branches_[i + 1].lo = branches_[i].hi;  // snap away representation noise
  }

  knots_.push_back(branches_.front().lo);
  for (const auto& b : branches_) {
    for (double k : b.interior_knots)
      if (k > b.lo && k < b.hi) knots_.push_back(k);
    knots_.push_back(b.hi);
  }
  std::sort(knots_.begin(), knots_.end());
  knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());

  // Nonnegativity probe: interior points plus geometric offsets toward the
  // edges.  Integrable blow-ups evaluate to +inf, which passes; NaN or a
  // genuinely negative value does not.
  for (const auto& b : branches_) {
    const double w = b.hi - b.lo;
    auto probe = [&](double x) {
      const double v = b.density(x);
      if (std::isnan(v) || v < -1e-12)
        throw std::invalid_argument("PiecewisePdf: density is negative or NaN on its support");
    };
    for (int i = 0; i < 33; ++i) probe(b.lo + w * (i + 0.5) / 33.0);
    for (int k = 4; k <= 40; k += 6) {
      probe(b.lo + w * std::exp2(-k));
      probe(b.hi - w * std::exp2(-k));
    }
  }

  double total = 0.0;
  for (const auto& b : branches_) {
    if (std::isfinite(b.exact_integral))
      total += b.exact_integral;
    else
      total += quad::integrate_kinked([&](double x) { return b.density(x); }, b.lo, b.hi,
                                      b.interior_knots);
  }
  normalization_residual_ = std::abs(total - 1.0);
  if (normalization_residual_ > normalization_tol)
    throw std::invalid_argument("PiecewisePdf: density does not integrate to 1 (residual " +
                                std::to_string(normalization_residual_) + ")");
}

double PiecewisePdf::operator()(double x) const {
  if (x < support_min() || x > support_max()) return 0.0;
  if (x == support_max()) return branches_.back().density(x);
  // Linear scan: these densities never have more than a handful of branches.
  for (const auto& b : branches_)
    if (x < b.hi) return b.density(x);
  return branches_.back().density(x);
}

TabulatedCdf::TabulatedCdf(std::vector<double> xs, std::vector<double> values, double raw_total)
    : table_(make_cdf_table(std::move(xs), std::move(values))), raw_total_(raw_total) {}

double TabulatedCdf::operator()(double x) const {
  if (x <= support_min()) return 0.0;
  if (x >= support_max()) return 1.0;
  return std::clamp(table_(x), 0.0, 1.0);
}

double TabulatedCdf::support_min() const { return table_.xs().front(); }
double TabulatedCdf::support_max() const { return table_.xs().back(); }

std::vector<double> clustered_grid(double lo, double hi, std::span<const double> kinks,
                                   std::size_t uniform_count) {
  if (!(hi > lo)) throw std::invalid_argument("clustered_grid: hi must exceed lo");
  uniform_count = std::max<std::size_t>(uniform_count, 8);
  const double span = hi - lo;
  std::vector<double> pts;
  pts.reserve(uniform_count + 1 + (kinks.size() + 2) * 2 * 260);
  for (std::size_t i = 0; i <= uniform_count; ++i)
    pts.push_back(lo + span * static_cast<double>(i) / static_cast<double>(uniform_count));

  std::vector<double> sites{lo, hi};
  for (double k : kinks)
    if (k > lo && k < hi) sites.push_back(k);
  // Offsets span * 2^(-j/6), from span/4 down to about span * 2^-45.
  for (double site : sites) {
    if (site > lo && site < hi) pts.push_back(site);
    for (int j = 12; j <= 270; ++j) {
      const double off = span * std::exp2(-j / 6.0);
      const double up = site + off, down = site - off;
      if (up < hi) pts.push_back(up);
      if (down > lo) pts.push_back(down);
    }
  }
  std::sort(pts.begin(), pts.end());
  const double min_gap = span * 1e-14;
  std::vector<double> grid;
  grid.reserve(pts.size() + 2);
  grid.push_back(lo);
  for (double p : pts)
    if (p - grid.back() > min_gap && p < hi) grid.push_back(p);
  grid.push_back(hi);
  return grid;
}

namespace {

// True when f grows like an inverse square root approaching c from the given
// side: values at distance delta and 4*delta should differ by a factor ~2.
template <class F>
bool probes_sharp(F&& f, double c, double inward, double delta) {
  const double f1 = f(c + std::copysign(delta, inward - c));
  const double f2 = f(c + std::copysign(4.0 * delta, inward - c));
  if (!std::isfinite(f1)) return true;
  if (!(f2 > 0.0) || !std::isfinite(f2)) return false;
  return f1 >= 1.5 * f2;
}

}  // namespace

double convolve_at(const PiecewisePdf& a, const PiecewisePdf& b, double s) {
  const double lo = std::max(a.support_min(), s - b.support_max());
  const double hi = std::min(a.support_max(), s - b.support_min());
  if (!(hi > lo)) return 0.0;
  // Every inverse-sqrt feature of the integrand sits at a knot of a or at a
  // mirrored knot of b.  Points inside the range become cuts; a blow-up a
  // hair OUTSIDE a segment end still matters, because it leaves a
  // sqrt(gap)-scale feature plain Gauss-Legendre cannot resolve.  Each
  // segment end is therefore anchored at the nearest nearby candidate that
  // actually probes as an inverse-sqrt blow-up of the integrand.
  std::vector<double> cand;
  for (double k : a.knots()) cand.push_back(k);
  for (double k : b.knots()) cand.push_back(s - k);
  std::vector<double> cuts{lo, hi};
  for (double c : cand)
    if (c > lo && c < hi) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  auto f = [&](double u) { return a(u) * b(s - u); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x0 = cuts[i], x1 = cuts[i + 1];
    if (!(x1 > x0)) continue;
    const double width = x1 - x0;
    const double margin = width * 0x1p-10;
    const double floor_delta =
        std::max(width * 0x1p-40, (std::fabs(x0) + std::fabs(x1)) * 0x1p-48);
    double anchor_lo = x0, anchor_hi = x1;
    if (8.0 * std::max(floor_delta, 2.0 * margin) < width) {
      std::vector<double> below, above;
      for (double c : cand) {
        if (c <= x0 && x0 - c <= margin) below.push_back(c);
        if (c >= x1 && c - x1 <= margin) above.push_back(c);
      }
      // Closest candidate first: a sharp candidate farther out would probe
      // sharp even when the true blow-up sits nearer, and anchoring past a
      // blow-up is far worse than anchoring short of one.
      std::sort(below.rbegin(), below.rend());
      std::sort(above.begin(), above.end());
      for (double c : below) {
        if (probes_sharp(f, c, x1, std::max(2.0 * (x0 - c), floor_delta))) {
          anchor_lo = c;
          break;
        }
      }
      for (double c : above) {
        if (probes_sharp(f, c, x0, std::max(2.0 * (c - x1), floor_delta))) {
          anchor_hi = c;
          break;
        }
      }
    }
    total += quad::segment_sqrt_anchored(f, x0, x1, anchor_lo, anchor_hi);
  }
  return total;
}

PiecewisePdf numeric_convolution(const PiecewisePdf& a, const PiecewisePdf& b,
                                 std::size_t grid_size) {
  const double lo = a.support_min() + b.support_min();
  const double hi = a.support_max() + b.support_max();
  // The sum density inherits a kink wherever kinks of the inputs line up.
  std::vector<double> kinks;
  for (double ka : a.knots())
    for (double kb : b.knots()) {
      const double s = ka + kb;
      if (s > lo && s < hi) kinks.push_back(s);
    }
  std::sort(kinks.begin(), kinks.end());
  kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());

  std::vector<double> grid = clustered_grid(lo, hi, kinks, grid_size);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = convolve_at(a, b, grid[i]);
  // The integral collapses to zero width exactly at the ends; carry the limit
  // in from the nearest interior point instead.
  if (vals.size() >= 3) {
    vals.front() = vals[1];
    vals.back() = vals[vals.size() - 2];
  }

  auto table = std::make_shared<CubicTable>(std::move(grid), std::move(vals));
  const double mass = table->integral();
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw std::invalid_argument("numeric_convolution: inputs do not convolve to a density");
  table->rescale(1.0 / mass);

  PdfBranch branch;
  branch.lo = lo;
  branch.hi = hi;
  branch.table = table;
  branch.density = [table](double x) { return std::max(0.0, (*table)(x)); };
  branch.interior_knots = std::move(kinks);
  branch.exact_integral = table->integral();
  return PiecewisePdf({std::move(branch)});
}

TabulatedCdf cdf_of(const PiecewisePdf& pdf, std::size_t grid_size) {
  std::vector<double> interior;
  for (double k : pdf.knots())
    if (k > pdf.support_min() && k < pdf.support_max()) interior.push_back(k);
  std::vector<double> grid =
      clustered_grid(pdf.support_min(), pdf.support_max(), interior, grid_size);
  std::vector<double> cum(grid.size(), 0.0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double inc =
        quad::segment_sqrt_ends([&](double x) { return pdf(x); }, grid[i], grid[i + 1], true);
    cum[i + 1] = cum[i] + std::max(inc, 0.0);
  }
  const double total = cum.back();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("cdf_of: density has no positive mass");
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = cum[i] / total;
  vals.back() = 1.0;
  return TabulatedCdf(std::move(grid), std::move(vals), total);
}

}  // namespace pinchsec
