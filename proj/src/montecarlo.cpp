#include "pinchsec/montecarlo.hpp"

#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pinchsec/rng.hpp"
#include "pinchsec/sop.hpp"

namespace pinchsec {

const char* mc_mode_name(McMode mode) {
  switch (mode) {
    case McMode::pinching: return "pinching";
    case McMode::fixed_antenna: return "fixed-antenna";
    case McMode::forced_independent: return "forced-independent";
  }
  throw std::invalid_argument("mc_mode_name: unknown mode");
}

SnrPair mc_snr_pair(const SystemGeometry& g, std::uint64_t seed, std::uint64_t index,
                    McMode mode) {
  const UserRealization r = sample_realization(g, seed, index);
  const double h2 = g.height * g.height;
  switch (mode) {
    case McMode::pinching:
      return {snr_bob(g, r), snr_eve(g, r)};
    case McMode::fixed_antenna:
      // Radiator pinned at the waveguide centre; the position error never
      // enters.
      return {g.mean_snr / (r.x1 * r.x1 + r.y1 * r.y1 + h2),
              g.mean_snr / (r.x2 * r.x2 + r.y2 * r.y2 + h2)};
    case McMode::forced_independent: {
      // Fresh variates for everything the eavesdropper's SNR shares with the
      // legitimate link (x1 and e; x2 is resampled alongside to keep the slot
      // layout self-contained).  y2 never enters the legitimate link, so the
      // original draw is reused and the pair is independent by construction
      // while both marginal laws stay exact.
      const std::uint64_t key = rng::derive_key(seed, index);
      const double half = 0.5 * g.side_length;
      const double x1f = rng::uniform_at(key, 5, -half, half);
      const double x2f = rng::uniform_at(key, 6, -half, half);
      const double ef = rng::uniform_at(key, 7, -g.error_halfwidth, g.error_halfwidth);
      const double dx = x1f + ef - x2f;
      return {snr_bob(g, r), g.mean_snr / (dx * dx + r.y2 * r.y2 + h2)};
    }
  }
  throw std::invalid_argument("mc_snr_pair: unknown mode");
}

namespace {

long count_outages(const SystemGeometry& g, double rate_threshold, std::uint64_t seed,
                   McMode mode, std::uint64_t begin, std::uint64_t end) {
  long hits = 0;
  for (std::uint64_t i = begin; i < end; ++i) {
    const SnrPair p = mc_snr_pair(g, seed, i, mode);
    if (p.bob < wiretap_threshold(p.eve, rate_threshold)) ++hits;
  }
  return hits;
}

}  // namespace

McEstimate mc_sop(const SystemGeometry& g, double rate_threshold, long samples,
                  std::uint64_t seed, McMode mode) {
  g.validate();
  if (!(rate_threshold >= 0.0))
    throw std::invalid_argument("mc_sop: rate_threshold must be >= 0");
  if (samples < 1000) throw std::invalid_argument("mc_sop: requires samples >= 1000");

  // Fixed-size chunks keep the work partition independent of the thread
  // count; realizations are pure functions of (seed, index) and the per-chunk
  // tallies are integers, so the merged count is identical no matter how the
  // chunks are scheduled.
  const std::uint64_t n = static_cast<std::uint64_t>(samples);
  const std::uint64_t chunk = 1u << 16;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  long hits = 0;
  if (hw == 1 || n <= chunk) {
    hits = count_outages(g, rate_threshold, seed, mode, 0, n);
  } else {
    std::vector<std::future<long>> parts;
    for (std::uint64_t a = 0; a < n; a += chunk) {
      const std::uint64_t b = std::min(n, a + chunk);
      parts.push_back(std::async(std::launch::async | std::launch::deferred,
                                 [&g, rate_threshold, seed, mode, a, b] {
                                   return count_outages(g, rate_threshold, seed, mode, a, b);
                                 }));
    }
    for (auto& f : parts) hits += f.get();
  }

  McEstimate est;
  est.sop = static_cast<double>(hits) / static_cast<double>(samples);
  est.samples = samples;
  est.std_error = std::sqrt(est.sop * (1.0 - est.sop) / static_cast<double>(samples));
  est.seed = seed;
  est.mode = mode;
  return est;
}

std::vector<std::pair<double, double>> mc_pairs(const SystemGeometry& g, long count,
                                                std::uint64_t seed, McMode mode) {
  g.validate();
  if (count < 100) throw std::invalid_argument("mc_pairs: requires count >= 100");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    const SnrPair p = mc_snr_pair(g, seed, static_cast<std::uint64_t>(i), mode);
    out.emplace_back(p.bob, p.eve);
  }
  return out;
}

}  // namespace pinchsec
