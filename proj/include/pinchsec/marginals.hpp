#pragma once

#include <cstddef>
#include <memory>

#include "pinchsec/geometry.hpp"
#include "pinchsec/piecewise.hpp"

namespace pinchsec {

// ---------------------------------------------------------------------------
// Closed-form scalar densities (verbatim transcriptions; zero outside their
// supports).  The validated piecewise objects in MarginalSet are built from
// these and cross-checked against the convolution oracle at construction.
// ---------------------------------------------------------------------------

// Horizontal separation x1 - x2 of two independent uniforms: triangular on
// [-D, D].
double pdf_x_separation(const SystemGeometry& g, double x);

// Displaced separation z = x1 + e - x2: three-branch convolution of the
// triangle with Unif[-delta, delta].  Requires delta > 0.
double pdf_z(const SystemGeometry& g, double z);

// W = e^2 + y1^2 (squared distance terms of the legitimate link), support
// (0, delta^2 + D^2/4].  Requires delta > 0.
double pdf_w(const SystemGeometry& g, double w);

// Legitimate-user SNR density (closed form in gamma space).  Requires
// delta > 0.
double pdf_gamma_bob(const SystemGeometry& g, double gamma);

// ---------------------------------------------------------------------------
// Validated marginal bundle
// ---------------------------------------------------------------------------

struct MarginalOptions {
  // Tabulation grid for the closed-form-free tail branch of the
  // eavesdropper's squared-distance density.
  std::size_t s_grid_size = 4096;
  // Grid for the CDF tables.
  std::size_t cdf_grid_size = 8192;
  // Max |closed form - exact convolution| (at convolution grid nodes, in
  // w/s space) tolerated before the closed form is replaced by the table.
  double oracle_tol = 1e-3;
  bool run_oracle_check = true;
};

// Outcome of the construction-time cross-check of every closed-form branch
// against the numerical convolution oracle.
struct OracleCheck {
  double max_error_w = 0.0;   // legitimate link, w space
  double max_error_s = 0.0;   // eavesdropper link, s space, closed branches
  bool fallback_w = false;    // true -> tabulated oracle replaced the closed form
  bool fallback_s = false;
  bool ran = false;
};

// Immutable bundle of the four distributions the outage computation needs:
// squared-distance densities (w, s), SNR densities (gamma space), and CDF
// tables.  Construction validates normalization and runs the oracle check.
// Thread-safe for concurrent reads after construction.
class MarginalSet {
 public:
  // Throws std::invalid_argument for invalid geometry or delta == 0 (the
  // closed-form branch structure degenerates in the no-error limit; Monte
  // Carlo still works there).
  static MarginalSet build(const SystemGeometry& g, const MarginalOptions& opts = {});

  const SystemGeometry& geometry() const { return geom_; }
  const OracleCheck& oracle_check() const { return check_; }

  // Squared-distance densities.
  double pdf_w(double w) const { return (*w_pdf_)(w); }
  double pdf_s(double s) const { return (*s_pdf_)(s); }

  // SNR densities.
  double pdf_gamma_bob(double gamma) const { return (*bob_pdf_)(gamma); }
  double pdf_gamma_eve(double gamma) const { return (*eve_pdf_)(gamma); }

  // SNR CDFs, evaluated through the strictly decreasing map
  // gamma = mean_snr / (w + h^2):  F_gamma(g) = 1 - F_w(mean_snr/g - h^2).
  double cdf_gamma_bob(double gamma) const;
  double cdf_gamma_eve(double gamma) const;

  const PiecewisePdf& w_density() const { return *w_pdf_; }
  const PiecewisePdf& s_density() const { return *s_pdf_; }
  const PiecewisePdf& bob_density() const { return *bob_pdf_; }
  const PiecewisePdf& eve_density() const { return *eve_pdf_; }
  const TabulatedCdf& w_cdf() const { return *w_cdf_; }
  const TabulatedCdf& s_cdf() const { return *s_cdf_; }

 private:
  MarginalSet() = default;

  SystemGeometry geom_;
  OracleCheck check_;
  std::shared_ptr<const PiecewisePdf> w_pdf_, s_pdf_, bob_pdf_, eve_pdf_;
  std::shared_ptr<const TabulatedCdf> w_cdf_, s_cdf_;
};

}  // namespace pinchsec
