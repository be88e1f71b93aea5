#pragma once

#include <span>
#include <utility>

namespace pinchsec {

// Gaussian dependence model between the two SNR margins.  Kept as a struct so
// alternative copula families could slot in behind the same call shape.
struct CopulaModel {
  double rho = 0.0;  // correlation of the latent normals, |rho| < 1 strictly

  void validate() const;  // throws std::invalid_argument when |rho| >= 1
};

// Clamp a probability into [1e-15, 1 - 1e-15] so the normal quantile stays
// finite when a tabulated CDF rounds to an exact 0 or 1.
double clamp_probability(double p);

// F(u | v) for the Gaussian copula: Phi((Phi^-1(u) - rho Phi^-1(v)) / sqrt(1 - rho^2)).
// u and v are clamped via clamp_probability first; rho = 0 returns u exactly.
double conditional_cdf(const CopulaModel& model, double u, double v);

// Normal-scores estimate of rho from paired samples (snr_bob, snr_eve):
// rank-transform each margin to (rank - 0.5)/n, map through the normal
// quantile, return the sample correlation of the scores clamped to
// [-0.999, 0.999].  Invariant under strictly increasing margin transforms.
// Throws std::invalid_argument for fewer than 100 pairs.
double estimate_rho(std::span<const std::pair<double, double>> pairs);

}  // namespace pinchsec
