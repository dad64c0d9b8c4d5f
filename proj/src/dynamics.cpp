#include "fano/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace fano {

namespace {

using cd = std::complex<double>;
constexpr cd kI(0.0, 1.0);

Eigen::MatrixXcd unitary_exp(const Eigen::MatrixXd& h, double tau) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  const Eigen::VectorXcd phase = (-kI * tau * solver.eigenvalues().cast<cd>()).array().exp();
  const Eigen::MatrixXcd v = solver.eigenvectors().cast<cd>();
  return v * phase.asDiagonal() * v.transpose();
}

double guard_density(const Field& amp, double dtheta, int n_sites, int guard) {
  double s = 0.0;
  for (int i = 0; i < guard; ++i) s += amp.row(i).squaredNorm() + amp.row(n_sites - 1 - i).squaredNorm();
  return s * dtheta;
}

// Smooth absorbing layer over the outer `width` chain sites at each end.
Eigen::VectorXd absorbing_mask(int dim, int n_sites, int width) {
  Eigen::VectorXd m = Eigen::VectorXd::Ones(dim);
  for (int i = 0; i < width; ++i) {
    const double depth = static_cast<double>(width - i) / width;
    const double f = std::pow(std::cos(0.5 * std::numbers::pi * depth), 0.125);
    m(i) = f;
    m(n_sites - 1 - i) = f;
  }
  return m;
}

struct Schedule {
  int steps;
  int stride;
  bool snapshot(int step) const { return step % stride == 0 || step == steps; }
};

Schedule make_schedule(const PropagationSettings& s) {
  return {static_cast<int>(std::llround(s.t_final / s.dt)), s.snapshot_stride};
}

void check_norm(double norm, RunDiagnostics& diag, const PropagationSettings& settings, double t) {
  const double drift = std::abs(norm - 1.0);
  diag.max_norm_drift = std::max(diag.max_norm_drift, drift);
  if (drift > settings.norm_tolerance) {
    std::ostringstream msg;
    msg << "norm drift " << drift << " at t = " << t << " exceeds " << settings.norm_tolerance
        << "; reduce propagation.dt";
    throw NumericalInstability(msg.str());
  }
}

void check_guard(const ModelConfig& config, const PropagationSettings& settings) {
  if (settings.guard_sites < 0 || 2 * settings.guard_sites > config.n_sites)
    throw ValidationError("propagation.guard_sites: must lie between 0 and model.n_sites / 2");
}

}  // namespace

void PropagationSettings::validate() const {
  if (!(dt > 0)) throw ValidationError("propagation.dt: must be > 0");
  if (!(t_final >= 0)) throw ValidationError("propagation.t_final: must be >= 0");
  if (snapshot_stride < 1) throw ValidationError("propagation.snapshot_stride: must be >= 1");
  if (std::abs(std::llround(t_final / dt) * dt - t_final) > 1e-9 * std::max(1.0, t_final))
    throw ValidationError("propagation.t_final: must be an integer multiple of propagation.dt");
  if (splitting_order != 2 && splitting_order != 4) throw ValidationError("propagation.splitting_order: must be 2 or 4");
}

double packet_sigma_for_energy_width(const ModelConfig& config, double k, double sigma_e) {
  if (!(sigma_e > 0)) throw ValidationError("packet.sigma_e: must be > 0");
  return std::sqrt(2.0) * config.hop_j * std::sin(k) / sigma_e;
}

Eigen::VectorXd vibrational_state(const ModelConfig& config, const AngularGrid& grid, int nu) {
  if (nu < 0) throw ValidationError("packet.nu: must be >= 0");
  if (!(config.vib_freq > 0)) throw ValidationError("model.vib_freq: a trapped vibrational state needs omega > 0");
  const double ell = 1.0 / std::sqrt(config.inertia() * config.vib_freq);
  Eigen::VectorXd phi(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const double x = std::remainder(grid[j] - config.theta_alpha0, 2 * std::numbers::pi) / ell;
    phi(j) = std::hermite(static_cast<unsigned>(nu), x) * std::exp(-0.5 * x * x);
  }
  const double norm = std::sqrt(phi.squaredNorm() * grid.spacing());
  if (!(norm > 0)) throw ValidationError("grid.n_points: vibrational state not resolved on the grid");
  return phi / norm;
}

InitialState initial_state(const ModelConfig& config, const AngularGrid& grid, const PacketSpec& packet) {
  config.validate();
  const SiteLayout layout(config.n_sites);
  if (!(packet.sigma >= 2)) throw ValidationError("packet.sigma: must be >= 2 sites");
  if (!(packet.n0 < 0) || packet.n0 < layout.first_label())
    throw ValidationError("packet.n0: must lie on the left chain");
  InitialState out;
  Eigen::VectorXcd chi = Eigen::VectorXcd::Zero(config.dimension());
  for (int i = 0; i < config.n_sites; ++i) {
    const double n = layout.label_of(i);
    const double x = (n - packet.n0) / packet.sigma;
    chi(i) = std::exp(-kI * packet.k * n - 0.5 * x * x);
  }
  chi /= chi.norm();
  const double tail = std::norm(chi(layout.attachment()));
  if (tail > 1e-6) {
    std::ostringstream msg;
    msg << "initial packet density at site 0 is " << tail << "; transmission will be contaminated";
    out.warnings.push_back(msg.str());
  }
  const Eigen::VectorXd vib = vibrational_state(config, grid, packet.nu);
  out.psi.grid = grid;
  out.psi.amplitudes = chi * vib.transpose().cast<cd>();
  out.psi.amplitudes /= std::sqrt(out.psi.norm());
  return out;
}

DiabaticPropagator::DiabaticPropagator(const ModelConfig& config, const AngularGrid& grid,
                                       const PropagationSettings& settings)
    : config_(config), grid_(grid), settings_(settings) {
  config_.validate();
  settings_.validate();
  check_guard(config_, settings_);
  const auto mats = build_on_grid(config_, grid_);
  const int n = grid_.size();
  const int d = config_.dimension();
  h_el_.resize(n);
  el_vectors_.resize(n);
  el_values_.resize(d, n);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < n; ++j) {
    h_el_[j] = mats[j].h;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h_el_[j]);
    el_vectors_[j] = solver.eigenvectors();
    el_values_.col(j) = solver.eigenvalues();
  }

  if (settings_.splitting_order == 4) {
    const double c = std::cbrt(2.0);
    weights_ = {1 / (2 - c), -c / (2 - c), 1 / (2 - c)};
  } else {
    weights_ = {1.0};
  }
  el_coefficients_ = {0.5 * weights_.front(), 0.5 * (weights_.front() + weights_.back())};
  for (size_t s = 0; s + 1 < weights_.size(); ++s) el_coefficients_.push_back(0.5 * (weights_[s] + weights_[s + 1]));
  for (double c : el_coefficients_)
    el_phases_.push_back((-kI * (c * settings_.dt) * el_values_.cast<cd>()).array().exp().matrix());

  if (!settings_.frozen) {
    h_vib_ = vibrational_hamiltonian(config_, grid_);
    for (double w : weights_) vib_steps_.push_back(unitary_exp(h_vib_, w * settings_.dt));
  }
}

void DiabaticPropagator::apply_el(Field& a, int which) const {
  const Eigen::MatrixXcd& phase = el_phases_[which];
#pragma omp parallel for schedule(static)
  for (int j = 0; j < grid_.size(); ++j) {
    const Eigen::MatrixXd& v = el_vectors_[j];
    Eigen::VectorXcd c = v.transpose() * a.col(j);
    c.array() *= phase.col(j).array();
    a.col(j).noalias() = v * c;
  }
}

double DiabaticPropagator::energy(const Wavefunction& psi) const {
  const Field& a = psi.amplitudes;
  double e = 0.0;
#pragma omp parallel for reduction(+ : e)
  for (int j = 0; j < grid_.size(); ++j) e += a.col(j).dot(h_el_[j] * a.col(j)).real();
  if (!settings_.frozen) e += (a.conjugate() * h_vib_ * a.transpose()).trace().real();
  return e * grid_.spacing();
}

RunDiagnostics DiabaticPropagator::run(Wavefunction& psi, const std::vector<Observer>& observers) const {
  if (!(psi.grid == grid_) || psi.amplitudes.rows() != config_.dimension())
    throw GridMismatch("diabatic propagation: wavefunction shape does not match the propagator");
  const Schedule sched = make_schedule(settings_);
  const bool closed = settings_.boundary_policy == BoundaryPolicy::SizeLimited;
  const Eigen::VectorXd mask = absorbing_mask(config_.dimension(), config_.n_sites, 2 * settings_.guard_sites);
  const double t0 = psi.time;

  RunDiagnostics diag;
  diag.initial_energy = energy(psi);
  auto observe = [&](int step) {
    psi.time = t0 + step * settings_.dt;
    const double g = guard_density(psi.amplitudes, grid_.spacing(), config_.n_sites, settings_.guard_sites);
    diag.max_guard_density = std::max(diag.max_guard_density, g);
    if (closed) {
      check_norm(psi.norm(), diag, settings_, psi.time);
      diag.max_energy_drift = std::max(diag.max_energy_drift, std::abs(energy(psi) - diag.initial_energy));
      if (g > settings_.guard_threshold && diag.valid) {
        std::ostringstream msg;
        msg << "density " << g << " within " << settings_.guard_sites << " sites of a chain end at t = " << psi.time;
        diag.valid = false;
        diag.invalid_reason = msg.str();
      }
    }
    for (const auto& obs : observers) obs(psi.time, psi.amplitudes);
  };

  Field& a = psi.amplitudes;
  const int stages = static_cast<int>(weights_.size());
  observe(0);
  bool pending = false;  // the closing electronic factor of the previous step is still owed
  for (int step = 1; step <= sched.steps; ++step) {
    if (!pending) apply_el(a, 0);
    for (int s = 0; s < stages; ++s) {
      if (!settings_.frozen) a = a * vib_steps_[s];
      if (s + 1 < stages) apply_el(a, 2 + s);
    }
    if (!closed) a = mask.cast<cd>().asDiagonal() * a;
    if (sched.snapshot(step)) {
      apply_el(a, 0);
      pending = false;
      observe(step);
    } else {
      apply_el(a, 1);
      pending = true;
    }
  }
  diag.steps = sched.steps;
  return diag;
}

RunDiagnostics propagate_diabatic(Wavefunction& psi, const ModelConfig& config, const PropagationSettings& settings,
                                  const std::vector<Observer>& observers) {
  return DiabaticPropagator(config, psi.grid, settings).run(psi, observers);
}

VibronicBasisPropagator::VibronicBasisPropagator(const ModelConfig& config, const AngularGrid& grid,
                                                 const PropagationSettings& settings, int n_states)
    : config_(config), grid_(grid), settings_(settings), n_states_(n_states) {
  config_.validate();
  settings_.validate();
  check_guard(config_, settings_);
  if (settings_.frozen) throw ValidationError("propagation.static_theta: the vibronic basis needs the vibration");
  if (n_states < 1 || n_states > grid.size())
    throw ValidationError("vibration.freeze_basis: must lie between 1 and grid.n_points");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> vib(vibrational_hamiltonian(config_, grid_));
  chi_ = vib.eigenvectors().leftCols(n_states);
  const auto mats = build_on_grid(config_, grid_);
  const int d = config_.dimension();
  const int n = grid_.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d * n_states, d * n_states);
#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < n_states; ++a)
    for (int b = a; b < n_states; ++b) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
      for (int j = 0; j < n; ++j) block += (chi_(j, a) * chi_(j, b)) * mats[j].h;
      h.block(a * d, b * d, d, d) = block;
      h.block(b * d, a * d, d, d) = block.transpose();
    }
  for (int a = 0; a < n_states; ++a) h.diagonal().segment(a * d, d).array() += vib.eigenvalues()(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  vectors_ = solver.eigenvectors();
  values_ = solver.eigenvalues();
}

RunDiagnostics VibronicBasisPropagator::run(Wavefunction& psi, const std::vector<Observer>& observers) const {
  if (!(psi.grid == grid_) || psi.amplitudes.rows() != config_.dimension())
    throw GridMismatch("vibronic propagation: wavefunction shape does not match the propagator");
  const Schedule sched = make_schedule(settings_);
  const int d = config_.dimension();
  const double root = std::sqrt(grid_.spacing());
  const double t0 = psi.time;

  // Coefficients C(site, state); column-major storage matches the basis index.
  const Eigen::MatrixXcd c0 = psi.amplitudes * chi_.cast<cd>() * root;
  const Eigen::VectorXcd y = vectors_.transpose() * Eigen::Map<const Eigen::VectorXcd>(c0.data(), c0.size());
  const double initial_norm = psi.norm();

  RunDiagnostics diag;
  diag.initial_energy = (y.cwiseAbs2().array() * values_.array()).sum();
  for (int step = 0; step <= sched.steps; ++step) {
    if (!sched.snapshot(step)) continue;
    const double t = step * settings_.dt;
    const Eigen::VectorXcd x = vectors_ * (y.array() * (-kI * t * values_.cast<cd>().array()).exp()).matrix();
    const Eigen::Map<const Eigen::MatrixXcd> c(x.data(), d, n_states_);
    psi.amplitudes = c * chi_.transpose().cast<cd>() / root;
    psi.time = t0 + t;
    // The basis is exact for the projected H; what it loses is the initial
    // weight outside the retained states.
    diag.max_norm_drift = std::max(diag.max_norm_drift, std::abs(psi.norm() - initial_norm));
    if (diag.max_norm_drift > settings_.norm_tolerance) {
      std::ostringstream msg;
      msg << "initial state has weight " << diag.max_norm_drift << " outside " << n_states_
          << " vibrational states; raise vibration.freeze_basis";
      throw NumericalInstability(msg.str());
    }
    const double g = guard_density(psi.amplitudes, grid_.spacing(), config_.n_sites, settings_.guard_sites);
    diag.max_guard_density = std::max(diag.max_guard_density, g);
    if (diag.valid && g > settings_.guard_threshold) {
      diag.valid = false;
      diag.invalid_reason = "density reached the chain ends";
    }
    for (const auto& obs : observers) obs(psi.time, psi.amplitudes);
  }
  diag.steps = sched.steps;
  return diag;
}

AdiabaticPropagator::AdiabaticPropagator(const ModelConfig& config, const AdiabaticSpectrum& spectrum,
                                         const NacField& nac, const PropagationSettings& settings)
    : config_(config),
      spectrum_(&spectrum),
      nac_(&nac),
      settings_(settings),
      derivative_(spectrum.grid, spectrum.dimension()) {
  config_.validate();
  settings_.validate();
  check_guard(config_, settings_);
  if (spectrum.dimension() != config_.dimension() || static_cast<int>(nac.first_order.size()) != spectrum.grid.size())
    throw GridMismatch("adiabatic propagation: spectrum and NAC field do not match");
  surface_half_ = (-kI * 0.5 * settings_.dt * spectrum.energies.cast<cd>()).array().exp();
  if (!settings_.frozen) {
    h_vib_ = vibrational_hamiltonian(config_, spectrum.grid);
    vib_step_ = unitary_exp(h_vib_, settings_.dt);
  }
  double a_max = 0.0;
  for (int j : nac.active) a_max = std::max(a_max, nac.first_order[j].norm());
  const double p_max = spectrum.grid.size() / 2.0;
  nac_bound_ = nac.mass_prefactor * (a_max * a_max + 2 * a_max * p_max);
}

void AdiabaticPropagator::apply_nac_exp(Field& phi, double tau) const {
  if (nac_bound_ == 0.0) return;
  const int sub = std::max(1, static_cast<int>(std::ceil(tau * nac_bound_)));
  const double h = tau / sub;
  for (int s = 0; s < sub; ++s) {
    Field term = phi;
    Field sum = phi;
    const double scale = sum.norm();
    int order = 1;
    for (; order <= 80; ++order) {
      term = nac_apply_hermitian(*nac_, term, derivative_) * (-kI * h / static_cast<double>(order));
      sum += term;
      if (term.norm() < 1e-15 * scale) break;
    }
    if (order > 80) throw NumericalInstability("NAC exponential did not converge; reduce propagation.dt");
    phi = std::move(sum);
  }
}

double AdiabaticPropagator::energy(const SurfaceWavefunction& phi) const {
  const Field& a = phi.amplitudes;
  double e = (a.cwiseAbs2().cwiseProduct(spectrum_->energies)).sum();
  if (!settings_.frozen) {
    e += (a.conjugate() * h_vib_.cast<cd>() * a.transpose()).trace().real();
    if (settings_.nac_mode == NacMode::Full) e += a.cwiseProduct(nac_apply_hermitian(*nac_, a, derivative_).conjugate()).sum().real();
  }
  return e * spectrum_->grid.spacing();
}

RunDiagnostics AdiabaticPropagator::run(SurfaceWavefunction& phi, const std::vector<Observer>& observers) const {
  const AngularGrid& grid = spectrum_->grid;
  if (!(phi.grid == grid) || phi.amplitudes.rows() != spectrum_->dimension())
    throw GridMismatch("adiabatic propagation: wavefunction shape does not match the spectrum");
  const Schedule sched = make_schedule(settings_);
  const bool with_nac = settings_.nac_mode == NacMode::Full && !settings_.frozen;
  const double t0 = phi.time;
  const int n = grid.size();

  std::vector<char> inside(n, 0);
  for (int j : nac_->active) inside[j] = 1;

  RunDiagnostics diag;
  diag.initial_energy = energy(phi);
  auto observe = [&](int step) {
    phi.time = t0 + step * settings_.dt;
    check_norm(phi.norm(), diag, settings_, phi.time);
    diag.max_energy_drift = std::max(diag.max_energy_drift, std::abs(energy(phi) - diag.initial_energy));
    Field sites(config_.dimension(), n);
    double outside = 0.0;
    for (int j = 0; j < n; ++j) {
      sites.col(j) = spectrum_->vectors[j].cast<cd>() * phi.amplitudes.col(j);
      if (!inside[j]) outside += phi.amplitudes.col(j).squaredNorm();
    }
    const double g = guard_density(sites, grid.spacing(), config_.n_sites, settings_.guard_sites);
    diag.max_guard_density = std::max(diag.max_guard_density, g);
    if (diag.valid && g > settings_.guard_threshold) {
      diag.valid = false;
      diag.invalid_reason = "density reached the chain ends";
    }
    if (diag.valid && with_nac && outside * grid.spacing() > 1e-8) {
      diag.valid = false;
      diag.invalid_reason = "vibrational density left the NAC window";
    }
    for (const auto& obs : observers) obs(phi.time, phi.amplitudes);
  };

  Field& a = phi.amplitudes;
  observe(0);
  for (int step = 1; step <= sched.steps; ++step) {
    a = a.cwiseProduct(surface_half_);
    if (with_nac) apply_nac_exp(a, 0.5 * settings_.dt);
    if (!settings_.frozen) a = a * vib_step_;
    if (with_nac) apply_nac_exp(a, 0.5 * settings_.dt);
    a = a.cwiseProduct(surface_half_);
    if (sched.snapshot(step)) observe(step);
  }
  diag.steps = sched.steps;
  return diag;
}

RunDiagnostics propagate_adiabatic(SurfaceWavefunction& phi, const ModelConfig& config,
                                   const AdiabaticSpectrum& spectrum, const NacField& nac,
                                   const PropagationSettings& settings, const std::vector<Observer>& observers) {
  return AdiabaticPropagator(config, spectrum, nac, settings).run(phi, observers);
}

double mass_for_sigma_theta(const ModelConfig& config, double sigma_theta) {
  if (!(sigma_theta > 0) || !(config.vib_freq > 0))
    throw ValidationError("model.vib_freq: need omega > 0 and a positive width");
  return 1.0 / (2 * sigma_theta * sigma_theta * config.vib_freq * config.ring_radius * config.ring_radius);
}

ModelConfig freeze_check(const ModelConfig& config, double sigma_theta_target, double bandwidth_margin) {
  if (!(sigma_theta_target > 0)) throw ValidationError("freeze_check: sigma_theta target must be > 0");
  ModelConfig out = config;
  out.vib_freq = std::max(config.vib_freq, bandwidth_margin * 4 * config.hop_j);
  out.vib_mass = mass_for_sigma_theta(out, sigma_theta_target);
  return out;
}

}  // namespace fano
