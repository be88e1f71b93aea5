#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pinchsec/copula.hpp"
#include "pinchsec/geometry.hpp"
#include "pinchsec/marginals.hpp"

namespace pinchsec {

// Minimum eavesdropper SNR that puts the legitimate link in secrecy outage at
// rate rth: 2^rth * (1 + gamma_e) - 1.  Equals gamma_e when rth = 0.
double wiretap_threshold(double gamma_e, double rth);

// Chebyshev abscissae cos((2n - 1) pi / (2N)) for n = 1..N, strictly
// decreasing, all in (-1, 1).  Throws std::invalid_argument for N < 1.
std::vector<double> chebyshev_nodes(int n);

enum class SopMethod { chebyshev, adaptive_reference, independence };

const char* sop_method_name(SopMethod method);

struct SopRequest {
  SystemGeometry geometry;
  double rate_threshold = 0.5;  // bits/s/Hz, >= 0
  double rho = 0.0;             // latent correlation, |rho| < 1
  int node_count = 200;         // Chebyshev evaluator only, >= 1
  SopMethod method = SopMethod::chebyshev;

  void validate() const;  // throws std::invalid_argument naming the constraint
};

struct SopResult {
  double probability = 0.0;  // clamped into [0, 1]
  SopMethod method = SopMethod::chebyshev;
  int node_count = 0;           // Chebyshev evaluator: nodes used
  double error_estimate = 0.0;  // adaptive paths: achieved absolute estimate
  long evaluations = 0;         // adaptive paths: integrand evaluations
  bool fallback_w = false;      // propagated marginal-construction diagnostics
  bool fallback_s = false;
};

// Adaptive integration failed to reach tolerance; carries the best estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

// Outage probability via the N-node Gauss-Chebyshev sum over Eve's SNR range.
SopResult sop_chebyshev(const SopRequest& req, const MarginalSet& marginals,
                        const CopulaModel& copula);

// Same integrand, integrated adaptively to 1e-8 absolute with subdivision
// forced at every density knot of either link.  The reference evaluator.
SopResult sop_adaptive_reference(const SopRequest& req, const MarginalSet& marginals,
                                 const CopulaModel& copula);

// Independence-limit expression: the conditional CDF degenerates to Bob's
// marginal CDF, integrated by the same adaptive scheme.
SopResult sop_independence(const SopRequest& req, const MarginalSet& marginals);

}  // namespace pinchsec
