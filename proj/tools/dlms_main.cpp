#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlms/harness.hpp"
#include "dlms/presets.hpp"

namespace {

using dlms::ExperimentConfig;

// Resolves a config from an explicit path or a preset name, then applies the
// command-line overrides.
ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset,
                                std::optional<std::uint64_t> seed, std::optional<int> trials,
                                std::optional<std::string> out_dir, std::optional<int> threads) {
  if (config_path.empty() == preset.empty())
    throw std::domain_error("provide exactly one of: a config path or --preset");
  ExperimentConfig config =
      preset.empty() ? dlms::load_config(config_path) : dlms::load_preset(preset);
  if (seed) config.seed = *seed;
  if (trials) config.trials = *trials;
  if (out_dir) config.output_dir = *out_dir;
  if (threads) config.threads = *threads;
  config.validate();
  return config;
}

void add_common(CLI::App* cmd, std::string& config_path, std::string& preset,
                std::optional<std::uint64_t>& seed, std::optional<int>& trials,
                std::optional<std::string>& out_dir, std::optional<int>& threads) {
  cmd->add_option("config", config_path, "experiment config JSON");
  cmd->add_option("--preset", preset, "built-in preset name");
  cmd->add_option("--seed", seed, "override the master seed");
  cmd->add_option("--trials", trials, "override the trial count");
  cmd->add_option("--out-dir", out_dir, "override the output directory");
  cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion LMS estimation of space-time varying parameters"};
  app.require_subcommand(1);

  std::string config_path, preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<std::string> out_dir;
  std::optional<int> threads;

  CLI::App* cmd_run = app.add_subcommand("run", "Monte-Carlo simulation with reports");
  add_common(cmd_run, config_path, preset, seed, trials, out_dir, threads);

  CLI::App* cmd_predict = app.add_subcommand("predict", "theory-only prediction report");
  add_common(cmd_predict, config_path, preset, seed, trials, out_dir, threads);

  std::string sim_csv, theory_json;
  dlms::CompareOptions copt;
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "gap report between simulation CSV and theory JSON");
  cmd_compare->add_option("sim", sim_csv, "simulation trajectory CSV")->required();
  cmd_compare->add_option("theory", theory_json, "theory report JSON")->required();
  cmd_compare->add_option("--steady-tol-db", copt.steady_tolerance_db,
                          "steady-state tolerance (dB)");
  cmd_compare->add_option("--transient-tol-db", copt.transient_tolerance_db,
                          "transient tolerance (dB)");
  cmd_compare->add_option("--skip", copt.skip_iterations, "iterations excluded from the front");
  cmd_compare->add_option("--tail-fraction", copt.tail_fraction,
                          "fraction used for the steady-state window");

  CLI::App* cmd_poisson = app.add_subcommand("poisson-demo", "2D input-estimation example");
  add_common(cmd_poisson, config_path, preset, seed, trials, out_dir, threads);

  CLI::App* cmd_presets = app.add_subcommand("presets", "list built-in presets");
  std::string dump_name;
  cmd_presets->add_option("--dump", dump_name, "print one preset's JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_presets->parsed()) {
      if (!dump_name.empty()) {
        std::cout << dlms::preset_json(dump_name) << '\n';
      } else {
        for (const auto& name : dlms::preset_names()) std::cout << name << '\n';
      }
      return 0;
    }
    if (cmd_compare->parsed()) {
      dlms::CompareResult r = dlms::compare(sim_csv, theory_json, copt);
      nlohmann::json out = {{"steady_gap_w_db", r.steady_gap_w_db},
                            {"steady_gap_h_db", r.steady_gap_h_db},
                            {"transient_gap_w_db", r.transient_gap_w_db},
                            {"transient_gap_h_db", r.transient_gap_h_db},
                            {"compared_iterations", r.compared_iterations},
                            {"within_tolerance", r.within_tolerance}};
      std::cout << out.dump(2) << '\n';
      return r.within_tolerance ? 0 : 2;
    }

    ExperimentConfig config =
        resolve_config(config_path, preset, seed, trials, out_dir, threads);
    if (cmd_run->parsed()) {
      dlms::RunResult r = dlms::run(config);
      std::printf("verdict: %s (rho = %.9g)\n", r.verdict.c_str(), r.spectral_radius);
      for (const auto& [alg, steady] : r.sim_steady) {
        std::printf("%s: steady msd_w %.3f dB, msd_h %.3f dB", alg.c_str(), steady.msd_w_db,
                    steady.msd_h_db);
        auto it = r.theory_steady.find(alg);
        if (it != r.theory_steady.end())
          std::printf("  (theory %.3f / %.3f dB)", it->second.msd_w_db, it->second.msd_h_db);
        std::printf("\n");
      }
      std::printf("wrote %s (%.1f s)\n", r.summary_path.c_str(), r.runtime_seconds);
    } else if (cmd_predict->parsed()) {
      dlms::PredictResult r = dlms::predict(config);
      std::printf("verdict: %s (rho = %.9g)\n", r.verdict.c_str(), r.spectral_radius);
      if (r.steady)
        std::printf("steady msd_w %.3f dB, msd_h %.3f dB, emse %.3f dB\n", r.steady->msd_w_db,
                    r.steady->msd_h_db, r.steady->emse_db);
      std::printf("wrote %s\n", r.theory_path.c_str());
    } else if (cmd_poisson->parsed()) {
      dlms::PoissonDemoResult r = dlms::poisson_demo(config);
      std::printf("solver residual %.3g after %ld sweeps\n", r.solver_residual,
                  r.solver_iterations);
      std::printf("network steady MSD %.3f dB, surface max error %.3g\n",
                  r.network_steady_msd_db, r.surface_max_error);
      std::printf("wrote %s\n", r.summary_path.c_str());
    }
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}
