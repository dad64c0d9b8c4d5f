#include "fano/statics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <sstream>

namespace fano {

namespace {

void require_single_impurity(const ModelConfig& config) {
  if (config.coupling_mode != CouplingMode::NearestNeighborChain)
    throw ValidationError("model.coupling_mode: static scattering needs the CU attached at site 0 only");
  for (const auto& [label, e] : config.chain_onsite)
    if (label != 0 && e != 0.0)
      throw ValidationError("model.chain_onsite: static scattering needs a clean chain away from site 0");
}

double site0_onsite(const ModelConfig& config) {
  auto it = config.chain_onsite.find(0);
  return it == config.chain_onsite.end() ? 0.0 : it->second;
}

}  // namespace

SelfEnergy cu_self_energy(const ModelConfig& config, double energy, double theta, double pole_tolerance) {
  require_single_impurity(config);
  const Eigen::Matrix3d h = isolated_cu_hamiltonian(config, theta).h;
  const Eigen::Vector3d w = chain_cu_coupling(config, theta);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(h);
  const Eigen::Vector3d proj = solver.eigenvectors().transpose() * w;
  SelfEnergy out;
  for (int i = 0; i < 3; ++i) {
    const double weight = proj(i) * proj(i);
    const double detune = energy - solver.eigenvalues()(i);
    if (std::abs(detune) <= pole_tolerance * std::max(1.0, std::abs(energy))) {
      if (weight > 0) out.pole = true;
      continue;
    }
    out.value += weight / detune;
  }
  return out;
}

Transmission transmission(const ModelConfig& config, double energy, double theta) {
  const double k = chain_wavenumber(config, energy);
  const SelfEnergy sigma = cu_self_energy(config, energy, theta);
  if (sigma.pole) return {0.0, 1.0};
  const double v = 2 * config.hop_j * std::sin(k);
  const double shift = sigma.value + site0_onsite(config);
  const double t = v * v / (v * v + shift * shift);
  return {t, shift * shift / (v * v + shift * shift)};
}

double transmission_transfer_matrix(const ModelConfig& config, double energy, double theta) {
  const double k = chain_wavenumber(config, energy);
  const SelfEnergy sigma = cu_self_energy(config, energy, theta);
  if (sigma.pole) return 0.0;
  const double eps = sigma.value + site0_onsite(config);
  const std::complex<double> i(0.0, 1.0);
  // Outgoing wave e^{ikn} on n >= 0, carried back across site 0:
  // psi_{-1} = (E - eps)/J psi_0 - psi_1.
  const std::complex<double> psi0 = 1.0;
  const std::complex<double> psi1 = std::exp(i * k);
  const std::complex<double> psim1 = (energy - eps) / config.hop_j * psi0 - psi1;
  // Decompose the left side as a e^{ikn} + b e^{-ikn}.
  const std::complex<double> a = (psim1 - std::exp(i * k) * psi0) / (std::exp(-i * k) - std::exp(i * k));
  return 1.0 / std::norm(a);
}

ScatteringCurve scan_transmission(const ModelConfig& config, double theta, double e_min, double e_max, int n) {
  if (n < 2) throw ValidationError("scan.n_points: need at least 2 points");
  ScatteringCurve out;
  out.frozen_theta = theta;
  out.energies.resize(n);
  out.transmission.resize(n);
  out.reflection.resize(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double e = e_min + (e_max - e_min) * i / (n - 1);
    const auto tr = transmission(config, e, theta);
    out.energies[i] = e;
    out.transmission[i] = tr.t;
    out.reflection[i] = tr.r;
  }
  return out;
}

double max_in_band_transmission(const ModelConfig& config, const CalibrationTargets& targets) {
  const auto curve =
      scan_transmission(config, config.theta_alpha0, targets.scan_min, targets.scan_max, targets.scan_points);
  return *std::max_element(curve.transmission.begin(), curve.transmission.end());
}

ModelConfig calibrate(const ModelConfig& tmpl, const CalibrationTargets& targets, CalibrationReport* report) {
  tmpl.validate();
  if (targets.level < 0 || targets.level > 2) throw ValidationError("calibration.level: must be 0, 1 or 2");
  ModelConfig config = tmpl;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(isolated_cu_hamiltonian(config, config.theta_alpha0).h);
  const double shift = targets.resonance_energy - solver.eigenvalues()(targets.level);
  config.cu_onsite.alpha += shift;
  config.cu_onsite.beta += shift;
  config.cu_onsite.eta += shift;

  auto evaluate = [&](double offset) {
    ModelConfig c = config;
    c.ring_center_offset = offset;
    try {
      return max_in_band_transmission(c, targets);
    } catch (const GeometryError&) {
      return 2.0;  // unphysical offset; never feasible
    }
  };

  std::ostringstream diag;
  diag << std::setprecision(6);
  if (targets.tune_offset) {
    if (!(targets.offset_min < targets.offset_max))
      throw ValidationError("calibration.offset_min: must be below calibration.offset_max");
    const double t_lo = evaluate(targets.offset_min);
    if (t_lo > targets.max_transmission) {
      diag << "ring_center_offset,max_T\n";
      for (int i = 0; i <= 10; ++i) {
        const double d = targets.offset_min + (targets.offset_max - targets.offset_min) * i / 10;
        diag << d << "," << evaluate(d) << "\n";
      }
      throw CalibrationError("no ring offset in [" + std::to_string(targets.offset_min) + ", " +
                                 std::to_string(targets.offset_max) + "] meets the suppression target",
                             diag.str());
    }
    double lo = targets.offset_min, hi = targets.offset_max;
    if (evaluate(hi) <= targets.max_transmission) {
      lo = hi;
    } else {
      for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (evaluate(mid) <= targets.max_transmission ? lo : hi) = mid;
      }
    }
    config.ring_center_offset = lo;
  }

  const double max_t = evaluate(config.ring_center_offset);
  if (max_t > targets.max_transmission) {
    const auto curve = scan_transmission(config, config.theta_alpha0, targets.scan_min, targets.scan_max,
                                         std::min(targets.scan_points, 41));
    diag << "E_over_J,T\n";
    for (size_t i = 0; i < curve.energies.size(); ++i) diag << curve.energies[i] << "," << curve.transmission[i] << "\n";
    std::ostringstream what;
    what << "max in-band transmission " << max_t << " exceeds target " << targets.max_transmission;
    throw CalibrationError(what.str(), diag.str());
  }
  if (report) *report = {shift, max_t, config.ring_center_offset};
  return config;
}

}  // namespace fano
