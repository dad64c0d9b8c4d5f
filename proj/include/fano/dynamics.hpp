#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fano/model.hpp"
#include "fano/spectral.hpp"
#include "fano/surfaces.hpp"

namespace fano {

/// phi_n(theta_j): rows are sites (N + 3), columns grid points. Normalized as
/// sum |phi|^2 dtheta = 1.
struct Wavefunction {
  Field amplitudes;
  AngularGrid grid{2};
  double time = 0.0;

  double norm() const { return amplitudes.squaredNorm() * grid.spacing(); }
};

/// phi~_k(theta_j) in the tracked adiabatic frame.
struct SurfaceWavefunction {
  Field amplitudes;
  AngularGrid grid{2};
  double time = 0.0;

  double norm() const { return amplitudes.squaredNorm() * grid.spacing(); }
};

enum class NacMode { Full, Disabled };
enum class BoundaryPolicy { SizeLimited, Absorbing };

struct PropagationSettings {
  double dt = 0.02;
  double t_final = 25.0;
  int snapshot_stride = 50;
  NacMode nac_mode = NacMode::Full;
  bool frozen = false;  // drop the theta kinetic term; theta is a spectator
  BoundaryPolicy boundary_policy = BoundaryPolicy::SizeLimited;
  int guard_sites = 5;
  double guard_threshold = 1e-6;
  double norm_tolerance = 1e-6;
  int splitting_order = 2;  // 2: Strang; 4: symmetric triple-jump composition of Strang steps

  void validate() const;
};

struct PacketSpec {
  double k = std::numbers::pi / 2;  // wavenumber; the packet moves toward +n
  double n0 = -24;                  // center site label
  double sigma = 3.5355339059327378;  // width in sites
  int nu = 0;                       // vibrational quantum number
};

/// Packet width in sites whose energy spread is sigma_e: sqrt(2) J sin k / sigma_e.
double packet_sigma_for_energy_width(const ModelConfig& config, double k, double sigma_e);

struct InitialState {
  Wavefunction psi;
  std::vector<std::string> warnings;
};

/// Gaussian packet exp(-i k n - (n - n0)^2 / 2 sigma^2) times the nu-th
/// harmonic-oscillator state of the mobile angle. With hopping +J the phase
/// -k n makes the packet travel toward increasing n.
InitialState initial_state(const ModelConfig& config, const AngularGrid& grid, const PacketSpec& packet);

/// Harmonic-oscillator eigenfunction of mass M R^2 and frequency omega in
/// theta - theta_alpha0, sampled on the grid and normalized there.
Eigen::VectorXd vibrational_state(const ModelConfig& config, const AngularGrid& grid, int nu);

using Observer = std::function<void(double time, const Field& amplitudes)>;

struct RunDiagnostics {
  double max_norm_drift = 0.0;
  double max_energy_drift = 0.0;
  double initial_energy = 0.0;
  double max_guard_density = 0.0;
  bool valid = true;
  std::string invalid_reason;
  int steps = 0;
};

/// Site-basis propagation of H = H_vib + H_el(theta) by Strang splitting
/// e^{-i H_el dt/2} e^{-i H_vib dt} e^{-i H_el dt/2}, each factor exact:
/// H_el per grid point by eigendecomposition, H_vib (kinetic + trap) as a
/// dense exponential on the grid. Order 4 chains three Strang steps with
/// Yoshida weights.
class DiabaticPropagator {
 public:
  DiabaticPropagator(const ModelConfig& config, const AngularGrid& grid, const PropagationSettings& settings);

  /// Advances psi to settings.t_final. Observers see the initial state and
  /// every snapshot_stride steps (and the final state).
  RunDiagnostics run(Wavefunction& psi, const std::vector<Observer>& observers = {}) const;

  double energy(const Wavefunction& psi) const;
  const PropagationSettings& settings() const { return settings_; }

 private:
  void apply_el(Field& a, int which) const;

  ModelConfig config_;
  AngularGrid grid_;
  PropagationSettings settings_;
  std::vector<Eigen::MatrixXd> h_el_;
  std::vector<Eigen::MatrixXd> el_vectors_;   // per theta
  Eigen::MatrixXd el_values_;                 // (level, theta)
  std::vector<double> weights_;               // Strang sub-step weights
  std::vector<double> el_coefficients_;       // edge, merged, then inner joints
  std::vector<Eigen::MatrixXcd> el_phases_;   // per coefficient: (level, theta)
  Eigen::MatrixXd h_vib_;
  std::vector<Eigen::MatrixXcd> vib_steps_;   // per weight; symmetric, applied from the right
};

RunDiagnostics propagate_diabatic(Wavefunction& psi, const ModelConfig& config, const PropagationSettings& settings,
                                  const std::vector<Observer>& observers = {});

/// Exact propagation for a stiff vibration: H is projected onto the lowest
/// `n_states` eigenstates of H_vib on the grid and diagonalized once, so every
/// snapshot is e^{-iHt} applied directly. Weight of the initial state outside
/// the basis counts as norm drift.
class VibronicBasisPropagator {
 public:
  VibronicBasisPropagator(const ModelConfig& config, const AngularGrid& grid, const PropagationSettings& settings,
                          int n_states);

  RunDiagnostics run(Wavefunction& psi, const std::vector<Observer>& observers = {}) const;
  int basis_size() const { return static_cast<int>(values_.size()); }

 private:
  ModelConfig config_;
  AngularGrid grid_;
  PropagationSettings settings_;
  int n_states_;
  Eigen::MatrixXd chi_;      // (theta, state), orthonormal columns on the grid
  Eigen::MatrixXd vectors_;  // eigenvectors of the projected H, index state * (N + 3) + site
  Eigen::VectorXd values_;
};

/// Adiabatic-frame propagation: surfaces U_k(theta) plus H_vib, with the
/// derivative couplings either applied (Full) or dropped (Disabled). Uses the
/// symmetrized NAC operator so every factor is unitary.
class AdiabaticPropagator {
 public:
  AdiabaticPropagator(const ModelConfig& config, const AdiabaticSpectrum& spectrum, const NacField& nac,
                      const PropagationSettings& settings);

  RunDiagnostics run(SurfaceWavefunction& phi, const std::vector<Observer>& observers = {}) const;
  double energy(const SurfaceWavefunction& phi) const;

 private:
  void apply_nac_exp(Field& phi, double tau) const;

  ModelConfig config_;
  const AdiabaticSpectrum* spectrum_;
  const NacField* nac_;
  PropagationSettings settings_;
  Eigen::MatrixXd h_vib_;
  Eigen::MatrixXcd vib_step_;
  Eigen::MatrixXcd surface_half_;  // (surface, theta) phases e^{-i U dt/2}
  double nac_bound_ = 0.0;
  mutable SpectralDerivative derivative_;
};

RunDiagnostics propagate_adiabatic(SurfaceWavefunction& phi, const ModelConfig& config,
                                   const AdiabaticSpectrum& spectrum, const NacField& nac,
                                   const PropagationSettings& settings, const std::vector<Observer>& observers = {});

/// Raise omega and lower M so sigma_theta = target, with hbar omega at least
/// `bandwidth_margin` times the exciton bandwidth 4J.
ModelConfig freeze_check(const ModelConfig& config, double sigma_theta_target, double bandwidth_margin = 10.0);

/// Mass giving the requested ground-state width at the config's frequency.
double mass_for_sigma_theta(const ModelConfig& config, double sigma_theta);

}  // namespace fano
