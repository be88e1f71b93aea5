#include "pinchsec/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pinchsec/copula.hpp"
#include "pinchsec/marginals.hpp"
#include "pinchsec/montecarlo.hpp"
#include "pinchsec/sop.hpp"

namespace pinchsec {

using nlohmann::json;

const char* run_method_name(RunMethod m) {
  switch (m) {
    case RunMethod::chebyshev: return "chebyshev";
    case RunMethod::adaptive_reference: return "adaptive-reference";
    case RunMethod::independence: return "independence";
    case RunMethod::mc_pinching: return "mc-pinching";
    case RunMethod::mc_fixed: return "mc-fixed";
  }
  throw std::invalid_argument("run_method_name: unknown method");
}

const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::snr_db: return "snr_db";
    case SweepAxis::rate_threshold: return "rate_threshold";
    case SweepAxis::rho: return "rho";
    case SweepAxis::delta: return "delta";
  }
  throw std::invalid_argument("sweep_axis_name: unknown axis");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path, what);
}

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void check_keys(const json& o, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& item : o.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(join_path(path, item.key()), "unknown key");
  }
}

double as_finite(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(path, "expected an integer");
  return v.get<long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One-slot cache: consecutive rows that share a geometry (rate or correlation
// axes) reuse the marginal construction instead of repeating it.
struct MarginalCache {
  std::optional<SystemGeometry> key;
  std::shared_ptr<const MarginalSet> value;

  const MarginalSet& get(const SystemGeometry& g) {
    if (!key || key->side_length != g.side_length || key->height != g.height ||
        key->error_halfwidth != g.error_halfwidth || key->mean_snr != g.mean_snr) {
      value = std::make_shared<const MarginalSet>(MarginalSet::build(g));
      key = g;
    }
    return *value;
  }
};

std::string adaptive_diagnostics(const SopResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "est=%.3e;evals=%ld", r.error_estimate, r.evaluations);
  return buf;
}

SweepRow evaluate(const ScenarioConfig& pt, const std::string& axis_name, double axis_value,
                  bool axis_sets_rho, MarginalCache& cache) {
  SweepRow row;
  row.axis_name = axis_name;
  row.axis_value = axis_value;
  row.method = run_method_name(pt.method);
  try {
    switch (pt.method) {
      case RunMethod::mc_pinching:
      case RunMethod::mc_fixed: {
        if (axis_sets_rho)
          throw std::invalid_argument(
              "Monte Carlo sampling realizes the physical dependence and cannot impose a model "
              "correlation; use an analytic method on this axis");
        const McMode mode =
            pt.method == RunMethod::mc_pinching ? McMode::pinching : McMode::fixed_antenna;
        const McEstimate est = mc_sop(pt.geometry, pt.rate_threshold, pt.mc_samples, pt.seed, mode);
        row.sop = est.sop;
        row.std_error = est.std_error;
        row.diagnostics =
            "samples=" + std::to_string(est.samples) + ";seed=" + std::to_string(est.seed);
        break;
      }
      case RunMethod::independence: {
        const MarginalSet& m = cache.get(pt.geometry);
        const SopRequest req{pt.geometry, pt.rate_threshold, 0.0, pt.nodes,
                             SopMethod::independence};
        const SopResult r = sop_independence(req, m);
        row.sop = r.probability;
        row.diagnostics = adaptive_diagnostics(r);
        break;
      }
      case RunMethod::chebyshev:
      case RunMethod::adaptive_reference: {
        double rho = pt.rho.value;
        if (axis_sets_rho) {
          row.rho_source = "axis";
        } else if (pt.rho.source == RhoSource::estimated) {
          rho = estimate_rho(mc_pairs(pt.geometry, pt.rho.pairs, pt.seed));
          row.rho_source = "estimated";
        } else {
          row.rho_source = "fixed";
        }
        const MarginalSet& m = cache.get(pt.geometry);
        const CopulaModel cop{rho};
        const SopMethod sm = pt.method == RunMethod::chebyshev ? SopMethod::chebyshev
                                                               : SopMethod::adaptive_reference;
        const SopRequest req{pt.geometry, pt.rate_threshold, rho, pt.nodes, sm};
        const SopResult r =
            sm == SopMethod::chebyshev ? sop_chebyshev(req, m, cop) : sop_adaptive_reference(req, m, cop);
        row.sop = r.probability;
        row.rho = rho;
        row.diagnostics = sm == SopMethod::chebyshev ? "nodes=" + std::to_string(r.node_count)
                                                     : adaptive_diagnostics(r);
        break;
      }
    }
  } catch (const std::exception& e) {
    row.sop.reset();
    row.std_error.reset();
    row.rho.reset();
    row.rho_source.clear();
    row.diagnostics = std::string("error: ") + e.what();
  }
  return row;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& json_text,
                             const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail("", std::string("invalid JSON: ") + e.what());
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) fail("--set", "expected key=value, got '" + ov + "'");
    std::string ptr = "/" + ov.substr(0, eq);
    std::replace(ptr.begin(), ptr.end(), '.', '/');
    json val;
    const std::string rhs = ov.substr(eq + 1);
    try {
      val = json::parse(rhs);
    } catch (...) {
      val = rhs;  // bare words are string values
    }
    try {
      doc[json::json_pointer(ptr)] = val;
    } catch (const std::exception& e) {
      fail(ov.substr(0, eq), std::string("cannot apply override: ") + e.what());
    }
  }

  if (!doc.is_object()) fail("", "top level must be a JSON object");
  check_keys(doc, "", {"geometry", "rate_threshold", "rho", "method", "nodes", "mc", "sweep"});

  ScenarioConfig cfg;
  if (const auto it = doc.find("geometry"); it != doc.end()) {
    if (!it->is_object()) fail("geometry", "expected an object");
    check_keys(*it, "geometry", {"side_length", "height", "error_halfwidth", "snr_db"});
    if (const auto f = it->find("side_length"); f != it->end())
      cfg.geometry.side_length = as_finite(*f, "geometry.side_length");
    if (const auto f = it->find("height"); f != it->end())
      cfg.geometry.height = as_finite(*f, "geometry.height");
    if (const auto f = it->find("error_halfwidth"); f != it->end())
      cfg.geometry.error_halfwidth = as_finite(*f, "geometry.error_halfwidth");
    if (const auto f = it->find("snr_db"); f != it->end())
      cfg.snr_db = as_finite(*f, "geometry.snr_db");
  }
  cfg.geometry.mean_snr = db_to_linear(cfg.snr_db);
  try {
    cfg.geometry.validate();
  } catch (const std::exception& e) {
    fail("geometry", e.what());
  }

  if (const auto it = doc.find("rate_threshold"); it != doc.end()) {
    cfg.rate_threshold = as_finite(*it, "rate_threshold");
    if (cfg.rate_threshold < 0.0) fail("rate_threshold", "must be >= 0");
  }

  if (const auto it = doc.find("rho"); it != doc.end()) {
    if (it->is_number()) {
      cfg.rho.source = RhoSource::fixed;
      cfg.rho.value = as_finite(*it, "rho");
    } else if (it->is_object()) {
      check_keys(*it, "rho", {"source", "value", "pairs"});
      std::string source = "fixed";
      if (const auto f = it->find("source"); f != it->end()) source = as_string(*f, "rho.source");
      if (source == "fixed") {
        cfg.rho.source = RhoSource::fixed;
        if (it->contains("pairs")) fail("rho.pairs", "only meaningful when source is \"estimated\"");
        if (const auto f = it->find("value"); f != it->end())
          cfg.rho.value = as_finite(*f, "rho.value");
      } else if (source == "estimated") {
        cfg.rho.source = RhoSource::estimated;
        if (it->contains("value")) fail("rho.value", "only meaningful when source is \"fixed\"");
        if (const auto f = it->find("pairs"); f != it->end()) {
          cfg.rho.pairs = as_integer(*f, "rho.pairs");
          if (cfg.rho.pairs < 100) fail("rho.pairs", "must be >= 100");
        }
      } else {
        fail("rho.source", "expected \"fixed\" or \"estimated\", got \"" + source + "\"");
      }
    } else {
      fail("rho", "expected a number or an object");
    }
    if (!(std::fabs(cfg.rho.value) < 1.0)) fail("rho.value", "must lie in (-1, 1)");
  }

  if (const auto it = doc.find("method"); it != doc.end()) {
    const std::string name = as_string(*it, "method");
    bool matched = false;
    for (RunMethod m : {RunMethod::chebyshev, RunMethod::adaptive_reference,
                        RunMethod::independence, RunMethod::mc_pinching, RunMethod::mc_fixed})
      if (name == run_method_name(m)) {
        cfg.method = m;
        matched = true;
        break;
      }
    if (!matched)
      fail("method",
           "expected one of chebyshev, adaptive-reference, independence, mc-pinching, mc-fixed; "
           "got \"" +
               name + "\"");
  }

  if (const auto it = doc.find("nodes"); it != doc.end()) {
    const long n = as_integer(*it, "nodes");
    if (n < 1) fail("nodes", "must be >= 1");
    cfg.nodes = static_cast<int>(n);
  }

  if (const auto it = doc.find("mc"); it != doc.end()) {
    if (!it->is_object()) fail("mc", "expected an object");
    check_keys(*it, "mc", {"samples", "seed"});
    if (const auto f = it->find("samples"); f != it->end()) {
      cfg.mc_samples = as_integer(*f, "mc.samples");
      if (cfg.mc_samples < 1000) fail("mc.samples", "must be >= 1000");
    }
    if (const auto f = it->find("seed"); f != it->end()) {
      const long s = as_integer(*f, "mc.seed");
      if (s < 0) fail("mc.seed", "must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(s);
    }
  }

  if (const auto it = doc.find("sweep"); it != doc.end()) {
    if (!it->is_object()) fail("sweep", "expected an object");
    check_keys(*it, "sweep", {"axis", "values"});
    SweepSpec spec;
    const auto ax = it->find("axis");
    if (ax == it->end()) fail("sweep.axis", "required");
    const std::string axis = as_string(*ax, "sweep.axis");
    bool matched = false;
    for (SweepAxis a :
         {SweepAxis::snr_db, SweepAxis::rate_threshold, SweepAxis::rho, SweepAxis::delta})
      if (axis == sweep_axis_name(a)) {
        spec.axis = a;
        matched = true;
        break;
      }
    if (!matched)
      fail("sweep.axis",
           "expected one of snr_db, rate_threshold, rho, delta; got \"" + axis + "\"");
    const auto vals = it->find("values");
    if (vals == it->end()) fail("sweep.values", "required");
    if (!vals->is_array() || vals->empty()) fail("sweep.values", "expected a non-empty array");
    for (std::size_t i = 0; i < vals->size(); ++i) {
      const std::string path = "sweep.values[" + std::to_string(i) + "]";
      const double v = as_finite((*vals)[i], path);
      switch (spec.axis) {
        case SweepAxis::rate_threshold:
          if (v < 0.0) fail(path, "rate thresholds must be >= 0");
          break;
        case SweepAxis::rho:
          if (!(std::fabs(v) < 1.0)) fail(path, "correlations must lie in (-1, 1)");
          break;
        case SweepAxis::delta:
          if (v < 0.0 || v > 0.5 * cfg.geometry.side_length)
            fail(path, "error halfwidths must lie in [0, side_length / 2]");
          break;
        case SweepAxis::snr_db:
          break;
      }
      spec.values.push_back(v);
    }
    if (spec.axis == SweepAxis::rho && cfg.rho.source == RhoSource::estimated)
      fail("rho.source", "an estimated correlation contradicts sweeping the correlation axis");
    cfg.sweep = std::move(spec);
  }
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail("", "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str(), overrides);
}

std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<std::string> notes;
  const bool analytic = cfg.method == RunMethod::chebyshev ||
                        cfg.method == RunMethod::adaptive_reference ||
                        cfg.method == RunMethod::independence;
  const bool dependence_aware =
      cfg.method == RunMethod::chebyshev || cfg.method == RunMethod::adaptive_reference;

  const bool base_degenerate = cfg.geometry.error_halfwidth == 0.0;
  bool axis_hits_zero_delta = false;
  if (cfg.sweep && cfg.sweep->axis == SweepAxis::delta)
    for (double v : cfg.sweep->values)
      if (v == 0.0) axis_hits_zero_delta = true;
  if (analytic && (base_degenerate || axis_hits_zero_delta))
    notes.push_back(
        "error_halfwidth = 0 is the no-error limit: the analytic evaluators have no branch "
        "structure there and those rows will report errors; the cross-link dependence vanishes, "
        "so mc-pinching / mc-fixed (or a vanishingly small positive halfwidth) cover that point");

  if (cfg.sweep && cfg.sweep->axis == SweepAxis::rho) {
    if (!analytic)
      notes.push_back(
          "Monte Carlo methods realize the physical dependence and cannot impose a model "
          "correlation: every row on the rho axis will report an error");
    else if (cfg.method == RunMethod::independence)
      notes.push_back(
          "the independence evaluator ignores the correlation, so all rho-axis rows coincide");
  }

  if (dependence_aware && cfg.rho.source == RhoSource::fixed && cfg.rho.value == 0.0 &&
      !(cfg.sweep && cfg.sweep->axis == SweepAxis::rho))
    notes.push_back(
        "rho = 0: the dependence-aware evaluator coincides with the independence expression");

  if (cfg.sweep && cfg.sweep->axis == SweepAxis::snr_db && dependence_aware &&
      cfg.rho.source == RhoSource::estimated)
    notes.push_back(
        "the rank-based correlation estimate is invariant under the mean-SNR scale, so one "
        "estimate is reused across the whole snr_db axis");

  return notes;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep", "a sweep section is required");
  std::vector<SweepRow> rows;
  rows.reserve(cfg.sweep->values.size());
  MarginalCache cache;
  const std::string axis = sweep_axis_name(cfg.sweep->axis);
  for (const double v : cfg.sweep->values) {
    ScenarioConfig pt = cfg;
    bool axis_sets_rho = false;
    switch (cfg.sweep->axis) {
      case SweepAxis::snr_db:
        pt.snr_db = v;
        pt.geometry.mean_snr = db_to_linear(v);
        break;
      case SweepAxis::rate_threshold:
        pt.rate_threshold = v;
        break;
      case SweepAxis::rho:
        pt.rho.source = RhoSource::fixed;
        pt.rho.value = v;
        axis_sets_rho = true;
        break;
      case SweepAxis::delta:
        pt.geometry.error_halfwidth = v;
        break;
    }
    rows.push_back(evaluate(pt, axis, v, axis_sets_rho, cache));
  }
  return rows;
}

SweepRow run_point(const ScenarioConfig& cfg) {
  MarginalCache cache;
  return evaluate(cfg, "snr_db", cfg.snr_db, false, cache);
}

void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "axis_name,axis_value,method,sop,std_error,rho,rho_source,diagnostics\n";
  for (const SweepRow& r : rows) {
    out << csv_escape(r.axis_name) << ',' << fmt(r.axis_value) << ',' << csv_escape(r.method)
        << ',' << (r.sop ? fmt(*r.sop) : "") << ',' << (r.std_error ? fmt(*r.std_error) : "")
        << ',' << (r.rho ? fmt(*r.rho) : "") << ',' << csv_escape(r.rho_source) << ','
        << csv_escape(r.diagnostics) << '\n';
  }
}

void write_density_table(const ScenarioConfig& cfg, int points, std::ostream& out) {
  if (points < 2) throw ConfigError("points", "need at least 2 grid points");
  const MarginalSet m = MarginalSet::build(cfg.geometry);
  out << "kind,x,pdf,cdf\n";
  const struct {
    const char* name;
    double lo, hi;
    double (MarginalSet::*pdf)(double) const;
    double (MarginalSet::*cdf)(double) const;
  } kinds[] = {
      {"snr_bob", m.geometry().bob_snr_min(), m.geometry().bob_snr_max(),
       &MarginalSet::pdf_gamma_bob, &MarginalSet::cdf_gamma_bob},
      {"snr_eve", m.geometry().eve_snr_min(), m.geometry().eve_snr_max(),
       &MarginalSet::pdf_gamma_eve, &MarginalSet::cdf_gamma_eve},
  };
  for (const auto& k : kinds) {
    for (int i = 0; i < points; ++i) {
      const double x = k.lo + (k.hi - k.lo) * static_cast<double>(i) / (points - 1);
      out << k.name << ',' << fmt(x) << ',' << fmt((m.*k.pdf)(x)) << ',' << fmt((m.*k.cdf)(x))
          << '\n';
    }
  }
}

}  // namespace pinchsec
