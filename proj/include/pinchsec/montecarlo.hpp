#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pinchsec/geometry.hpp"

namespace pinchsec {

// Sampling models for the Monte Carlo validator.
//  - pinching: the physical system; the pinch tracks the legitimate user up to
//    the position error, which couples both links through x1 and e.
//  - fixed_antenna: benchmark with the radiator pinned at the waveguide
//    centre; user positions are drawn identically but no pinching happens.
//  - forced_independent: the legitimate link is sampled physically while the
//    eavesdropper's SNR is regenerated from fresh variates with the identical
//    marginal law, severing the cross-link dependence.  Validates the
//    independence-limit evaluator.
enum class McMode { pinching, fixed_antenna, forced_independent };

const char* mc_mode_name(McMode mode);

struct SnrPair {
  double bob = 0.0;
  double eve = 0.0;
};

struct McEstimate {
  double sop = 0.0;
  long samples = 0;
  double std_error = 0.0;  // binomial sqrt(p (1 - p) / n)
  std::uint64_t seed = 0;
  McMode mode = McMode::pinching;
};

// SNR pair for one realization.  Pure function of (geometry, seed, index,
// mode): identical arguments reproduce the identical pair on any thread or
// run, so estimates are bit-stable under chunked evaluation.
SnrPair mc_snr_pair(const SystemGeometry& g, std::uint64_t seed, std::uint64_t index, McMode mode);

// Outage frequency over `samples` realizations of the chosen mode.  Requires
// samples >= 1000 (below that the binomial error bar is too wide to validate
// anything) and rate_threshold >= 0.
McEstimate mc_sop(const SystemGeometry& g, double rate_threshold, long samples,
                  std::uint64_t seed, McMode mode = McMode::pinching);

// First `count` (bob, eve) SNR pairs (count >= 100) in the shape estimate_rho
// consumes.
std::vector<std::pair<double, double>> mc_pairs(const SystemGeometry& g, long count,
                                                std::uint64_t seed,
                                                McMode mode = McMode::pinching);

}  // namespace pinchsec
