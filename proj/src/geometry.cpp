#include "pinchsec/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "pinchsec/rng.hpp"

namespace pinchsec {

void SystemGeometry::validate() const {
  if (!(side_length > 0.0))
    throw std::invalid_argument("geometry: side_length must be > 0");
  if (!(height > 0.0))
    throw std::invalid_argument("geometry: height must be > 0");
  if (!(mean_snr > 0.0))
    throw std::invalid_argument("geometry: mean_snr must be > 0");
  if (!(error_halfwidth >= 0.0) || error_halfwidth > 0.5 * side_length)
    throw std::invalid_argument(
        "geometry: error_halfwidth must satisfy 0 <= delta <= side_length / 2");
}

double SystemGeometry::bob_snr_min() const {
  const double dd = error_halfwidth * error_halfwidth;
  const double quarter = side_length * side_length / 4.0;
  return mean_snr / (height * height + dd + quarter);
}

double SystemGeometry::bob_snr_max() const { return mean_snr / (height * height); }

double SystemGeometry::eve_snr_min() const {
  const double reach = side_length + error_halfwidth;  // |x1 + e - x2| at worst
  const double quarter = side_length * side_length / 4.0;
  return mean_snr / (height * height + reach * reach + quarter);
}

double SystemGeometry::eve_snr_max() const { return mean_snr / (height * height); }

double effective_snr(double antenna_gain, double transmit_power_w, double noise_power_w) {
  if (!(antenna_gain > 0.0))
    throw std::invalid_argument("effective_snr: antenna_gain must be > 0");
  if (!(transmit_power_w > 0.0))
    throw std::invalid_argument("effective_snr: transmit_power_w must be > 0");
  if (!(noise_power_w > 0.0))
    throw std::invalid_argument("effective_snr: noise_power_w must be > 0");
  return antenna_gain * transmit_power_w / noise_power_w;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

UserRealization sample_realization(const SystemGeometry& g, std::uint64_t seed,
                                   std::uint64_t index) {
  g.validate();
  const std::uint64_t key = rng::derive_key(seed, index);
  const double half = 0.5 * g.side_length;
  UserRealization r;
  r.x1 = rng::uniform_at(key, 0, -half, half);
  r.y1 = rng::uniform_at(key, 1, -half, half);
  r.x2 = rng::uniform_at(key, 2, -half, half);
  r.y2 = rng::uniform_at(key, 3, -half, half);
  r.error_e = rng::uniform_at(key, 4, -g.error_halfwidth, g.error_halfwidth);
  return r;
}

double snr_bob(const SystemGeometry& g, const UserRealization& r) {
  const double d2 = r.error_e * r.error_e + r.y1 * r.y1 + g.height * g.height;
  return g.mean_snr / d2;
}

double snr_eve(const SystemGeometry& g, const UserRealization& r) {
  const double dx = r.x1 + r.error_e - r.x2;
  const double d2 = dx * dx + r.y2 * r.y2 + g.height * g.height;
  return g.mean_snr / d2;
}

}  // namespace pinchsec
