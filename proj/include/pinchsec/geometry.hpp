#pragma once

#include <cstdint>

namespace pinchsec {

// Downlink layout: users fall uniformly in a D x D square centred on the
// waveguide, which runs along the x-axis at height h.  The pinch is steered to
// the legitimate user's x-coordinate but lands at x1 + e, with the position
// error e uniform on [-delta, delta].
//
// delta == 0 is the degenerate no-error limit: geometry sampling and Monte
// Carlo accept it, the analytic marginal builder requires delta > 0.
struct SystemGeometry {
  double side_length = 20.0;      // D [m]
  double height = 5.0;            // h [m]
  double error_halfwidth = 1.0;   // delta [m], 0 <= delta <= D/2
  double mean_snr = 1e12;         // gamma_bar = eta * Ps / sigma^2, linear

  void validate() const;  // throws std::invalid_argument naming the constraint

  // SNR support bounds implied by the layout.
  double bob_snr_min() const;
  double bob_snr_max() const;
  double eve_snr_min() const;
  double eve_snr_max() const;
};

struct UserRealization {
  double x1 = 0, y1 = 0;  // legitimate user
  double x2 = 0, y2 = 0;  // eavesdropper
  double error_e = 0;     // pinch position error
};

// gamma_bar from linear antenna gain and powers in watts; all must be > 0.
double effective_snr(double antenna_gain, double transmit_power_w, double noise_power_w);

double dbm_to_watts(double dbm);
double db_to_linear(double db);
double linear_to_db(double linear);

// Deterministic: identical (seed, index) yields the identical realization.
UserRealization sample_realization(const SystemGeometry& g, std::uint64_t seed,
                                   std::uint64_t index = 0);

// Free-space path-loss SNRs for one realization.
double snr_bob(const SystemGeometry& g, const UserRealization& r);
double snr_eve(const SystemGeometry& g, const UserRealization& r);

}  // namespace pinchsec
