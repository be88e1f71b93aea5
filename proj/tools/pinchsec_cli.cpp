#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinchsec/montecarlo.hpp"
#include "pinchsec/sweep.hpp"

using namespace pinchsec;

namespace {

// 0 on success, 1 when the sink cannot be opened or written.
int with_output(const std::string& path, const std::function<void(std::ostream&)>& emit) {
  if (path.empty() || path == "-") {
    emit(std::cout);
    return std::cout ? 0 : 1;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot open output file '" << path << "'\n";
    return 1;
  }
  emit(f);
  f.flush();
  if (!f) {
    std::cerr << "error: failed writing '" << path << "'\n";
    return 1;
  }
  return 0;
}

const char* mc_row_label(McMode mode) {
  switch (mode) {
    case McMode::pinching: return "mc-pinching";
    case McMode::fixed_antenna: return "mc-fixed";
    case McMode::forced_independent: return "mc-forced-independent";
  }
  return "mc";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secrecy outage engine for the pinched-waveguide downlink"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::vector<std::string> overrides;
  long long seed_flag = -1;
  long long samples_flag = -1;
  long long nodes_flag = -1;

  const auto add_common = [&](CLI::App* cmd, bool takes_output) {
    cmd->add_option("--config", config_path, "scenario JSON file")->required();
    cmd->add_option("--set", overrides,
                    "dotted override key=value, e.g. geometry.snr_db=30 (repeatable)");
    cmd->add_option("--seed", seed_flag, "shorthand for --set mc.seed=N");
    cmd->add_option("--samples", samples_flag, "shorthand for --set mc.samples=N");
    cmd->add_option("--nodes", nodes_flag, "shorthand for --set nodes=N");
    if (takes_output) cmd->add_option("--out", out_path, "output file (default: stdout)");
  };

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the configured sweep, emit CSV");
  add_common(sweep_cmd, true);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "parse the scenario and report structural notes");
  add_common(validate_cmd, false);

  CLI::App* mc_cmd =
      app.add_subcommand("mc", "Monte Carlo estimate at the base scenario, emit one CSV row");
  add_common(mc_cmd, true);
  std::string mode_name;
  mc_cmd->add_option("--mode", mode_name, "pinching | fixed-antenna | forced-independent");

  CLI::App* dump_cmd = app.add_subcommand("dump-pdf", "emit margin density/CDF tables as CSV");
  add_common(dump_cmd, true);
  int points = 512;
  dump_cmd->add_option("--points", points, "grid points per margin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (seed_flag >= 0) overrides.push_back("mc.seed=" + std::to_string(seed_flag));
  if (samples_flag >= 0) overrides.push_back("mc.samples=" + std::to_string(samples_flag));
  if (nodes_flag >= 0) overrides.push_back("nodes=" + std::to_string(nodes_flag));

  try {
    const ScenarioConfig cfg = load_scenario_file(config_path, overrides);

    if (sweep_cmd->parsed()) {
      const std::vector<SweepRow> rows = run_sweep(cfg);
      return with_output(out_path, [&rows](std::ostream& os) { write_csv(rows, os); });
    }

    if (validate_cmd->parsed()) {
      const std::vector<std::string> notes = validate_scenario(cfg);
      std::cout << "ok: method=" << run_method_name(cfg.method);
      if (cfg.sweep)
        std::cout << " sweep=" << sweep_axis_name(cfg.sweep->axis) << " ("
                  << cfg.sweep->values.size() << " values)";
      else
        std::cout << " (no sweep section)";
      std::cout << '\n';
      for (const std::string& n : notes) std::cout << "note: " << n << '\n';
      return 0;
    }

    if (mc_cmd->parsed()) {
      McMode mode = cfg.method == RunMethod::mc_fixed ? McMode::fixed_antenna : McMode::pinching;
      if (!mode_name.empty()) {
        if (mode_name == "pinching") mode = McMode::pinching;
        else if (mode_name == "fixed-antenna") mode = McMode::fixed_antenna;
        else if (mode_name == "forced-independent") mode = McMode::forced_independent;
        else throw ConfigError("--mode", "expected pinching, fixed-antenna, or forced-independent");
      }
      const McEstimate est =
          mc_sop(cfg.geometry, cfg.rate_threshold, cfg.mc_samples, cfg.seed, mode);
      SweepRow row;
      row.axis_name = "snr_db";
      row.axis_value = cfg.snr_db;
      row.method = mc_row_label(mode);
      row.sop = est.sop;
      row.std_error = est.std_error;
      row.diagnostics =
          "samples=" + std::to_string(est.samples) + ";seed=" + std::to_string(est.seed);
      return with_output(out_path, [&row](std::ostream& os) { write_csv({row}, os); });
    }

    if (dump_cmd->parsed()) {
      return with_output(out_path,
                         [&cfg, points](std::ostream& os) { write_density_table(cfg, points, os); });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
