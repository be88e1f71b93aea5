#include "pinchsec/sop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pinchsec/piecewise.hpp"
#include "pinchsec/quadrature.hpp"

namespace pinchsec {

double wiretap_threshold(double gamma_e, double rth) {
  return std::exp2(rth) * (1.0 + gamma_e) - 1.0;
}

std::vector<double> chebyshev_nodes(int n) {
  if (n < 1) throw std::invalid_argument("chebyshev_nodes: node count must be >= 1");
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    nodes[static_cast<std::size_t>(i)] =
        std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * n));
  return nodes;
}

const char* sop_method_name(SopMethod method) {
  switch (method) {
    case SopMethod::chebyshev:
      return "chebyshev";
    case SopMethod::adaptive_reference:
      return "adaptive-reference";
    case SopMethod::independence:
      return "independence";
  }
  return "unknown";
}

void SopRequest::validate() const {
  geometry.validate();
  if (!(rate_threshold >= 0.0))
    throw std::invalid_argument("SopRequest: rate_threshold must be >= 0");
  if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("SopRequest: |rho| must be < 1");
  if (node_count < 1) throw std::invalid_argument("SopRequest: node_count must be >= 1");
}

namespace {

void require_request(const SopRequest& req, SopMethod expected, const MarginalSet& marginals) {
  req.validate();
  if (req.method != expected)
    throw std::invalid_argument(std::string("sop: request method is ") +
                                sop_method_name(req.method) + " but the evaluator handles " +
                                sop_method_name(expected));
  const SystemGeometry& a = req.geometry;
  const SystemGeometry& b = marginals.geometry();
  if (a.side_length != b.side_length || a.height != b.height ||
      a.error_halfwidth != b.error_halfwidth || a.mean_snr != b.mean_snr)
    throw std::invalid_argument("sop: marginals were built for a different geometry");
}

double clamp_unit(double p) { return std::min(1.0, std::max(0.0, p)); }

SopResult result_shell(const SopRequest& req, SopMethod tag, const MarginalSet& marginals) {
  SopResult out;
  out.method = tag;
  out.node_count = tag == SopMethod::chebyshev ? req.node_count : 0;
  out.fallback_w = marginals.oracle_check().fallback_w;
  out.fallback_s = marginals.oracle_check().fallback_s;
  return out;
}

// A wiretap threshold beyond Bob's SNR support settles the outcome without
// quadrature: past the top every conditional CDF value is 1, below the bottom
// it is 0, and Eve's density integrates to one.
bool support_short_circuit(const SopRequest& req, const MarginalSet& m, double& out) {
  const double ymin = m.eve_density().support_min();
  const double ymax = m.eve_density().support_max();
  if (wiretap_threshold(ymin, req.rate_threshold) >= m.bob_density().support_max()) {
    out = 1.0;
    return true;
  }
  if (wiretap_threshold(ymax, req.rate_threshold) <= m.bob_density().support_min()) {
    out = 0.0;
    return true;
  }
  return false;
}

// Kinks of the outage integrand: every knot of Eve's density, plus every knot
// of Bob's density pulled back through the wiretap-threshold map (Bob's CDF
// bends where his density has a knot, and the integrand composes that CDF
// with the threshold).
std::vector<double> integrand_knots(const SopRequest& req, const MarginalSet& m) {
  std::vector<double> ks;
  for (double k : m.eve_density().knots()) ks.push_back(k);
  const double inv_rate = std::exp2(-req.rate_threshold);
  for (double k : m.bob_density().knots()) ks.push_back((k + 1.0) * inv_rate - 1.0);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

template <class F>
SopResult run_adaptive(const SopRequest& req, const MarginalSet& marginals, SopMethod tag,
                       F&& conditional_outage) {
  SopResult out = result_shell(req, tag, marginals);
  if (support_short_circuit(req, marginals, out.probability)) return out;
  const double ymin = marginals.eve_density().support_min();
  const double ymax = marginals.eve_density().support_max();
  auto integrand = [&](double y) { return conditional_outage(y) * marginals.pdf_gamma_eve(y); };
  const std::vector<double> ks = integrand_knots(req, marginals);
  const quad::AdaptiveResult res = quad::integrate_adaptive(integrand, ymin, ymax, 1e-8, ks);
  out.error_estimate = res.error_estimate;
  out.evaluations = res.evaluations;
  out.probability = clamp_unit(res.value);
  if (!res.converged)
    throw QuadratureError("sop: adaptive integration did not reach tolerance 1e-8",
                          out.probability);
  return out;
}

}  // namespace

SopResult sop_chebyshev(const SopRequest& req, const MarginalSet& marginals,
                        const CopulaModel& copula) {
  require_request(req, SopMethod::chebyshev, marginals);
  copula.validate();
  if (req.rho != copula.rho)
    throw std::invalid_argument("sop: request rho and copula rho disagree");
  SopResult out = result_shell(req, SopMethod::chebyshev, marginals);
  if (support_short_circuit(req, marginals, out.probability)) return out;
  const double ymin = marginals.eve_density().support_min();
  const double ymax = marginals.eve_density().support_max();
  const double half = 0.5 * (ymax - ymin), mid = 0.5 * (ymax + ymin);
  double sum = 0.0;
  for (double xi : chebyshev_nodes(req.node_count)) {
    const double y = half * xi + mid;
    const double u = marginals.cdf_gamma_bob(wiretap_threshold(y, req.rate_threshold));
    const double v = marginals.cdf_gamma_eve(y);
    sum += std::sqrt(1.0 - xi * xi) * conditional_cdf(copula, u, v) *
           marginals.pdf_gamma_eve(y) * half;
  }
  out.probability = clamp_unit(std::numbers::pi / req.node_count * sum);
  return out;
}

SopResult sop_adaptive_reference(const SopRequest& req, const MarginalSet& marginals,
                                 const CopulaModel& copula) {
  require_request(req, SopMethod::adaptive_reference, marginals);
  copula.validate();
  if (req.rho != copula.rho)
    throw std::invalid_argument("sop: request rho and copula rho disagree");
  return run_adaptive(req, marginals, SopMethod::adaptive_reference, [&](double y) {
    const double u = marginals.cdf_gamma_bob(wiretap_threshold(y, req.rate_threshold));
    return conditional_cdf(copula, u, marginals.cdf_gamma_eve(y));
  });
}

SopResult sop_independence(const SopRequest& req, const MarginalSet& marginals) {
  require_request(req, SopMethod::independence, marginals);
  return run_adaptive(req, marginals, SopMethod::independence, [&](double y) {
    return marginals.cdf_gamma_bob(wiretap_threshold(y, req.rate_threshold));
  });
}

}  // namespace pinchsec
