#pragma once

namespace pinchsec {

double std_normal_pdf(double z);

// Phi(z) through erfc; absolute error well under 1e-12 across the real line.
double std_normal_cdf(double z);

// Inverse of std_normal_cdf on (0, 1); throws std::domain_error outside.
// Rational approximation refined by one Newton step, relative error ~1e-14
// for p in [1e-12, 1 - 1e-12].
double std_normal_quantile(double p);

}  // namespace pinchsec
