#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fano/analysis.hpp"
#include "fano/config.hpp"
#include "fano/io.hpp"

namespace fano {

struct PreparedModel {
  ModelConfig model;
  CalibrationReport report;
  bool calibrated = false;
};

/// effective_model() followed by calibration when the config asks for it.
PreparedModel prepare_model(const RunConfig& config);

enum class TransportMethod {
  Grid,           // split-step on the theta grid
  VibronicBasis,  // exact, in the lowest vibrational states (stiff vibration)
};

/// Diabatic wavepacket run with N_R and site populations at each snapshot.
struct TransportResult {
  std::vector<double> times;
  std::vector<double> n_r;
  std::vector<Eigen::VectorXd> populations;
  RunDiagnostics diagnostics;
  std::vector<std::string> warnings;
  Wavefunction final_state;

  double final_n_r() const { return n_r.empty() ? 0.0 : n_r.back(); }
};

TransportResult run_transport(const ModelConfig& model, const RunConfig& config, int nu,
                              const PropagationSettings& settings, const std::vector<Observer>& extra = {},
                              TransportMethod method = TransportMethod::Grid);

/// Frozen-limit run: freeze_check model at the config's sigma_theta,
/// propagated in the vibronic basis.
TransportResult run_frozen_limit(const ModelConfig& model, const RunConfig& config, int nu,
                                 const std::vector<Observer>& extra = {});

/// Same run seen in the adiabatic frame: surface populations, rates and the
/// time-averaged surface density.
struct SurfaceRecord {
  TransportResult transport;
  std::vector<Eigen::VectorXd> surface_populations;
  RateSeries rates;
  Eigen::MatrixXd mean_density;  // (surface, theta)
};

SurfaceRecord run_with_surfaces(const ModelConfig& model, const RunConfig& config, int nu,
                                const PropagationSettings& settings, const AdiabaticSpectrum& spectrum,
                                const NacField& nac, TransportMethod method = TransportMethod::Grid);

std::vector<std::string> scenario_names();

/// Preset used when neither --config nor --set preset=... names one.
std::string default_preset(const std::string& scenario);

/// Runs a scenario, writes its CSV artifacts and manifest.json into out_dir
/// and returns the manifest path.
std::filesystem::path run_scenario(const std::string& scenario, const RunConfig& config,
                                   const std::filesystem::path& out_dir, const SpectrumCache& cache);

/// JSON mirror of the effective configuration.
nlohmann::json config_json(const RunConfig& config);

}  // namespace fano
