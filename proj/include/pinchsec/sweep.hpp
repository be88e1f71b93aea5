#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinchsec/geometry.hpp"

namespace pinchsec {

// Configuration rejected: carries the dotted path of the offending field when
// one is identifiable.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& field_path() const { return path_; }

 private:
  std::string path_;
};

// Everything a sweep row can run: the three analytic evaluators plus the two
// Monte Carlo benchmarks.
enum class RunMethod { chebyshev, adaptive_reference, independence, mc_pinching, mc_fixed };
const char* run_method_name(RunMethod m);

enum class RhoSource { fixed, estimated };

struct RhoSpec {
  RhoSource source = RhoSource::fixed;
  double value = 0.3;   // fixed: the latent correlation itself
  long pairs = 100000;  // estimated: realizations fed to the rank estimator
};

enum class SweepAxis { snr_db, rate_threshold, rho, delta };
const char* sweep_axis_name(SweepAxis a);

struct SweepSpec {
  SweepAxis axis = SweepAxis::snr_db;
  std::vector<double> values;
};

struct ScenarioConfig {
  SystemGeometry geometry;  // mean_snr always mirrors snr_db
  double snr_db = 25.0;
  double rate_threshold = 0.5;
  RhoSpec rho;
  RunMethod method = RunMethod::chebyshev;
  int nodes = 200;
  long mc_samples = 1000000;
  std::uint64_t seed = 42;
  std::optional<SweepSpec> sweep;
};

// Parse and strictly validate a JSON scenario: unknown keys anywhere are
// errors, as are structurally valid but semantically contradictory settings.
// `overrides` are dotted key=value assignments (e.g. "geometry.snr_db=30",
// "sweep.values=[10,20]") applied to the document before validation.
ScenarioConfig load_scenario(const std::string& json_text,
                             const std::vector<std::string>& overrides = {});
ScenarioConfig load_scenario_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {});

// Structural observations about a parsed scenario (degenerate limits, rows
// that are bound to fail, redundant settings).  Empty means nothing to note.
std::vector<std::string> validate_scenario(const ScenarioConfig& cfg);

struct SweepRow {
  std::string axis_name;
  double axis_value = 0.0;
  std::string method;
  std::optional<double> sop;
  std::optional<double> std_error;  // Monte Carlo rows only
  std::optional<double> rho;        // dependence-aware analytic rows only
  std::string rho_source;           // "fixed" | "estimated" | "axis" | empty
  std::string diagnostics;          // "k=v;..." on success, "error: ..." on row failure
};

// One row per axis value; a failing row records its error in `diagnostics`
// and leaves the value cells empty rather than aborting the sweep.
std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg);

// Evaluate the scenario's base point (no sweep section required).
SweepRow run_point(const ScenarioConfig& cfg);

// Exact schema: axis_name,axis_value,method,sop,std_error,rho,rho_source,diagnostics
// Numbers are written with %.12g; inapplicable cells stay empty.
void write_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// Margin tables for plotting: kind,x,pdf,cdf over both SNR margins and the
// underlying squared-distance margins, `points` rows per kind.
void write_density_table(const ScenarioConfig& cfg, int points, std::ostream& out);

}  // namespace pinchsec
