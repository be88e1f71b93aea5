#include "pinchsec/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pinchsec/normal.hpp"

namespace pinchsec {

void CopulaModel::validate() const {
  if (!(std::abs(rho) < 1.0))
    throw std::invalid_argument("copula: rho must satisfy |rho| < 1");
}

double clamp_probability(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

double conditional_cdf(const CopulaModel& model, double u, double v) {
  model.validate();
  u = clamp_probability(u);
  if (model.rho == 0.0) return u;
  v = clamp_probability(v);
  const double zu = std_normal_quantile(u);
  const double zv = std_normal_quantile(v);
  return std_normal_cdf((zu - model.rho * zv) / std::sqrt(1.0 - model.rho * model.rho));
}

namespace {

// Normal scores of one margin: quantile((rank + 0.5) / n), ties broken by
// original order (the physical samples are continuous, so ties are measure
// zero anyway).
std::vector<double> normal_scores(std::span<const std::pair<double, double>> pairs, bool second) {
  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = second ? pairs[a].second : pairs[a].first;
    const double vb = second ? pairs[b].second : pairs[b].first;
    return va < vb;
  });
  std::vector<double> scores(n);
  for (std::size_t rank = 0; rank < n; ++rank)
    scores[order[rank]] =
        std_normal_quantile((static_cast<double>(rank) + 0.5) / static_cast<double>(n));
  return scores;
}

}  // namespace

double estimate_rho(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 100)
    throw std::invalid_argument("estimate_rho: need at least 100 pairs");
  const std::vector<double> a = normal_scores(pairs, false);
  const std::vector<double> b = normal_scores(pairs, true);
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(a.size());
  mean_b /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0))
    throw std::invalid_argument("estimate_rho: degenerate margin (zero variance)");
  return std::clamp(sab / std::sqrt(saa * sbb), -0.999, 0.999);
}

}  // namespace pinchsec
