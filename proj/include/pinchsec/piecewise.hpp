#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace pinchsec {

// Shape-preserving piecewise-cubic Hermite table (Fritsch-Carlson limited
// derivatives).  Monotone data gives a monotone interpolant, and cell
// integrals are available in closed form.
class CubicTable {
 public:
  CubicTable(std::vector<double> xs, std::vector<double> ys);

  double operator()(double q) const;  // clamped to the end values outside
  double integral() const;
  double integral_between(double a, double b) const;
  void rescale(double factor);

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::size_t cell_of(double q) const;
  std::vector<double> xs_, ys_, d_;
};

// One piece of a piecewise density.  Branches are half-open [lo, hi) in
// ascending order; the last branch also owns its upper endpoint.
struct PdfBranch {
  double lo = 0.0, hi = 0.0;
  std::function<double(double)> density;
  // Points inside (lo, hi) where the density has a kink; quadrature and CDF
  // grids split there.
  std::vector<double> interior_knots;
  // Set when the branch is backed by a table rather than a closed form.
  std::shared_ptr<const CubicTable> table;
  // When finite, trusted instead of numeric integration during validation.
  double exact_integral = std::numeric_limits<double>::quiet_NaN();
};

// Validated piecewise density: branches tile the support with no gaps or
// overlaps, the density is nonnegative, and the total integral is 1 within
// normalization_tol (all checked at construction).
class PiecewisePdf {
 public:
  explicit PiecewisePdf(std::vector<PdfBranch> branches, double normalization_tol = 1e-6);

  double operator()(double x) const;  // 0 outside the support
  double support_min() const { return branches_.front().lo; }
  double support_max() const { return branches_.back().hi; }
  // Branch boundaries plus interior knots, sorted; includes both support ends.
  std::span<const double> knots() const { return knots_; }
  double normalization_residual() const { return normalization_residual_; }
  std::size_t branch_count() const { return branches_.size(); }
  const PdfBranch& branch(std::size_t i) const { return branches_[i]; }

 private:
  std::vector<PdfBranch> branches_;
  std::vector<double> knots_;
  double normalization_residual_ = 0.0;
};

// Monotone CDF table on a strictly increasing grid; 0 below the support and
// 1 above it.  raw_total records the pre-normalization mass.
class TabulatedCdf {
 public:
  TabulatedCdf(std::vector<double> xs, std::vector<double> values, double raw_total = 1.0);

  double operator()(double x) const;
  double support_min() const;
  double support_max() const;
  double raw_total() const { return raw_total_; }

 private:
  CubicTable table_;
  double raw_total_;
};

// Grid points over [lo, hi]: uniform_count uniform cells plus geometric
// refinement toward every kink site (and both ends), so sqrt-type behaviour
// is resolved down to ~2^-45 of the span.
std::vector<double> clustered_grid(double lo, double hi, std::span<const double> kinks,
                                   std::size_t uniform_count);

// Exact pointwise density of A + B at s for independent A, B.
double convolve_at(const PiecewisePdf& a, const PiecewisePdf& b, double s);

// Tabulated density of A + B, normalized to unit mass.  grid_size controls
// the uniform part of the grid; refinement near inherited kinks is automatic.
PiecewisePdf numeric_convolution(const PiecewisePdf& a, const PiecewisePdf& b,
                                 std::size_t grid_size = 4096);

// CDF table of a piecewise density (clamped partial sums, normalized ends).
TabulatedCdf cdf_of(const PiecewisePdf& pdf, std::size_t grid_size = 8192);

}  // namespace pinchsec
