#pragma once

#include <string>
#include <vector>

#include "fano/dynamics.hpp"
#include "fano/model.hpp"
#include "fano/statics.hpp"

namespace YAML {
class Node;
}

namespace fano {

struct GridSettings {
  int n_points = 256;
  double nac_half_width = 0.0;  // radians around theta_alpha0; <= 0 means 8 sigma_theta
  int spectrum_sites = 20;      // chain length for band-structure scenarios
};

struct PacketSettings {
  double energy = 0.0;   // central energy (J)
  double sigma_e = 0.4;  // energy spread (J)
  double n0 = -24;       // initial center (site label)
  int nu = 0;            // vibrational state for single-run scenarios
  std::vector<int> nus{0, 1, 2};
};

struct ScanSettings {
  double e_min = -1.9;
  double e_max = 1.9;
  int n_points = 400;
};

struct ThermalSettings {
  double t_max = 0.3;  // units of omega / k_B
  int n_points = 31;
};

struct VibrationSettings {
  double sigma_theta = 0.0;     // > 0: derive vib_mass from it
  double freeze_margin = 10.0;  // frozen-limit omega in units of the bandwidth 4J
  int freeze_basis = 12;        // vibrational states kept for frozen-limit runs
};

/// Everything a scenario needs: the physical model plus discretization,
/// packet, propagation and calibration choices.
struct RunConfig {
  std::string preset;
  ModelConfig model;
  VibrationSettings vibration;
  GridSettings grid;
  PacketSettings packet;
  PropagationSettings propagation;
  bool calibrate = false;
  bool frozen = false;  // run dynamics in the frozen limit (see dynamics_model)
  CalibrationTargets calibration;
  ScanSettings scan;
  ThermalSettings thermal;

  /// ModelConfig with the vibration width applied (mass derived from sigma_theta).
  ModelConfig effective_model() const;
  /// Model used for wavepacket runs: `model` itself, or with `frozen` set the
  /// high-frequency limit at the same sigma_theta.
  ModelConfig dynamics_model(const ModelConfig& calibrated) const;
  double nac_half_width() const;
  PacketSpec packet_spec(const ModelConfig& model, int nu) const;
  AngularGrid angular_grid() const { return AngularGrid(grid.n_points); }
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();

/// Layered load: defaults, then the named preset, then the file (which may
/// name its own preset), then the dotted-key overrides `key=value`.
RunConfig load_run_config(const std::string& preset, const std::string& path,
                          const std::vector<std::string>& overrides);

RunConfig preset_config(const std::string& name);

/// YAML text of the effective configuration, with unit comments.
std::string to_yaml(const RunConfig& config);

/// Decoded node (strict: unknown keys are validation errors).
RunConfig from_yaml_text(const std::string& text);

/// Model invariants plus discretization sanity checks; one entry per
/// violation, each prefixed by its key path.
std::vector<std::string> validate_run_config(const RunConfig& config);

}  // namespace fano
