// fanochain: scenario runner for exciton transport through a vibrating control unit.
#include <omp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

#include "fano/scenarios.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 2, kCalibration = 3, kNumerical = 4 };

int report(const std::string& kind, const std::string& message, int code, const std::string& diagnostics = {}) {
  nlohmann::json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
  if (!diagnostics.empty()) err["diagnostics"] = diagnostics;
  std::cerr << err.dump() << "\n";
  return code;
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const fano::CalibrationError& e) {
    return report("calibration", e.what(), kCalibration, e.diagnostics());
  } catch (const fano::NumericalInstability& e) {
    return report("numerical", e.what(), kNumerical);
  } catch (const fano::Error& e) {
    return report("validation", e.what(), kValidation);
  } catch (const std::exception& e) {
    return report("internal", e.what(), 1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exciton transport through a vibrating control unit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", cache_dir, preset;
  std::vector<std::string> overrides;
  int threads = 0;

  auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "YAML config layered over the preset")->check(CLI::ExistingFile);
    cmd->add_option("--preset", preset, "Named preset (default depends on the scenario)");
    cmd->add_option("--set", overrides, "Override a dotted key, e.g. model.c3=3 (repeatable)");
  };

  auto* run = app.add_subcommand("run", "Run a scenario and write CSV artifacts plus manifest.json");
  std::string scenario;
  run->add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(fano::scenario_names()));
  add_config_options(run);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  run->add_option("--cache-dir", cache_dir,
                  std::string("Spectrum cache directory (default: $") + fano::kCacheEnv + ", else no cache)");

  auto* validate = app.add_subcommand("validate", "Check a configuration and list every violation");
  add_config_options(validate);

  auto* presets = app.add_subcommand("presets", "List presets or print one as YAML");
  std::string show;
  presets->add_option("name", show, "Preset to print");

  CLI11_PARSE(app, argc, argv);

  if (*presets) {
    return guarded([&] {
      if (show.empty()) {
        for (const auto& n : fano::preset_names()) std::cout << n << "\n";
      } else {
        std::cout << fano::to_yaml(fano::preset_config(show));
      }
      return static_cast<int>(kOk);
    });
  }

  if (*validate) {
    return guarded([&] {
      const auto config = fano::load_run_config(preset, config_path, overrides);
      const auto problems = fano::validate_run_config(config);
      nlohmann::json out = {{"valid", problems.empty()}, {"violations", problems}};
      std::cout << out.dump(2) << "\n";
      return static_cast<int>(problems.empty() ? kOk : kValidation);
    });
  }

  return guarded([&] {
    if (threads > 0) omp_set_num_threads(threads);
    const std::string base = preset.empty() ? fano::default_preset(scenario) : preset;
    const auto config = fano::load_run_config(base, config_path, overrides);
    const auto cache = fano::SpectrumCache::from_environment(cache_dir);
    const auto manifest = fano::run_scenario(scenario, config, out_dir, cache);
    std::cout << manifest.string() << "\n";
    return static_cast<int>(kOk);
  });
}
