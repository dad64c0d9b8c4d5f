#pragma once

#include <string>
#include <vector>

#include "fano/model.hpp"

namespace fano {

struct SelfEnergy {
  double value = 0.0;
  bool pole = false;  // E sits on a CU level that couples to site 0
};

/// Sigma(E, theta) = w^T (E - H_CU)^-1 w for the control unit hanging off
/// chain site 0. Requires nearest-neighbor coupling mode.
SelfEnergy cu_self_energy(const ModelConfig& config, double energy, double theta, double pole_tolerance = 1e-12);

struct Transmission {
  double t = 0.0;
  double r = 0.0;
};

/// Single effective impurity at site 0 with onsite shift Sigma(E, theta):
/// T = v^2 / (v^2 + Sigma^2), v = 2J sin k. Throws OutsideBand for |E| >= 2J.
Transmission transmission(const ModelConfig& config, double energy, double theta);

/// The same quantity from an explicit 2x2 transfer-matrix product across the
/// impurity site; used to cross-check the self-energy route.
double transmission_transfer_matrix(const ModelConfig& config, double energy, double theta);

struct ScatteringCurve {
  std::vector<double> energies;
  std::vector<double> transmission;
  std::vector<double> reflection;
  double frozen_theta = 0.0;
};

/// Uniform scan with n points over [e_min, e_max] (both inside the band).
ScatteringCurve scan_transmission(const ModelConfig& config, double theta, double e_min, double e_max, int n);

struct CalibrationTargets {
  int level = 0;                    // isolated-CU level (ascending) placed at the resonance
  double resonance_energy = 0.0;
  double max_transmission = 0.07;
  double scan_min = -1.9;
  double scan_max = 1.9;
  int scan_points = 400;
  bool tune_offset = false;         // also search ring_center_offset
  double offset_min = 1.2;
  double offset_max = 4.0;
};

struct CalibrationReport {
  double onsite_shift = 0.0;
  double max_transmission = 0.0;
  double ring_center_offset = 0.0;
};

/// Shift all CU onsite energies uniformly so the chosen isolated-CU level sits
/// at the resonance energy at theta_alpha0, then (optionally) bisect the ring
/// offset for the largest value meeting the suppression target. Throws
/// CalibrationError with a diagnostic scan if the target is infeasible.
ModelConfig calibrate(const ModelConfig& tmpl, const CalibrationTargets& targets,
                      CalibrationReport* report = nullptr);

/// Largest T over the target scan window at theta_alpha0.
double max_in_band_transmission(const ModelConfig& config, const CalibrationTargets& targets);

}  // namespace fano
