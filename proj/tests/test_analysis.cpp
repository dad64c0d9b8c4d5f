#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "fano/analysis.hpp"

using namespace fano;

namespace {

ModelConfig small_mobile() {
  ModelConfig c;
  c.n_sites = 10;
  c.c3 = 1.0;
  c.ring_center_offset = 2.5;
  c.cu_onsite = {0.0, 0.5, 0.5};
  c.vib_freq = 1.0;
  c.vib_mass = mass_for_sigma_theta(c, 0.15);
  return c;
}

Wavefunction packet(const ModelConfig& c, const AngularGrid& g, double n0, double sigma, int nu = 0) {
  PacketSpec p;
  p.n0 = n0;
  p.sigma = sigma;
  p.nu = nu;
  return initial_state(c, g, p).psi;
}

}  // namespace

TEST_CASE("site populations and the right-hand weight") {
  ModelConfig c;
  c.n_sites = 10;
  const AngularGrid g(16);
  Field a = Field::Zero(c.dimension(), g.size());
  const SiteLayout layout(c.n_sites);
  a(layout.chain_index(1), 3) = 1.0;
  a(layout.chain_index(5), 4) = 1.0;
  a(layout.chain_index(0), 5) = 1.0;
  a(layout.alpha(), 6) = 1.0;
  const Eigen::VectorXd p = site_populations(a, g.spacing());
  CHECK(p.sum() == doctest::Approx(4 * g.spacing()));
  CHECK(right_weight(p, c.n_sites) == doctest::Approx(2 * g.spacing()));

  const Wavefunction left = packet(c, g, -2, 2.0);
  CHECK(right_weight(site_populations(left), c.n_sites) < 0.05);
  Eigen::VectorXd none = Eigen::VectorXd::Zero(c.dimension());
  none(layout.alpha()) = 1.0;
  none(layout.chain_index(0)) = 1.0;
  CHECK(right_weight(none, c.n_sites) == 0.0);
}

TEST_CASE("adiabatic projection round-trips and preserves the norm") {
  const ModelConfig c = testing::preset_model("slanted", 20);
  const AngularGrid g(64);
  const auto s = compute_spectrum(c, g);
  const Wavefunction psi = packet(c, g, -4, 2.5, 1);
  const auto phi = project_adiabatic(psi, s);
  CHECK(phi.norm() == doctest::Approx(psi.norm()).epsilon(1e-12));
  CHECK(surface_populations(phi).sum() == doctest::Approx(1.0).epsilon(1e-12));
  const Wavefunction back = reconstruct_diabatic(phi, s);
  CHECK((back.amplitudes - psi.amplitudes).norm() < 1e-12);

  const AdiabaticSpectrum other = compute_spectrum(c, AngularGrid(32));
  CHECK_THROWS_AS(project_adiabatic(psi, other), GridMismatch);
}

TEST_CASE("an electronic eigenstate occupies a single surface") {
  const ModelConfig c = testing::preset_model("slanted", 20);
  const AngularGrid g(64);
  const auto s = compute_spectrum(c, g);
  const int k = s.surface_of_label(2);
  Wavefunction psi;
  psi.grid = g;
  psi.amplitudes.resize(c.dimension(), g.size());
  const Eigen::VectorXd vib = vibrational_state(c, g, 0);
  for (int j = 0; j < g.size(); ++j) psi.amplitudes.col(j) = s.vectors[j].col(k).cast<std::complex<double>>() * vib(j);
  const Eigen::VectorXd pop = surface_populations(project_adiabatic(psi, s));
  CHECK(pop(k) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pop.sum() - pop(k) < 1e-12);
}

TEST_CASE("a packet on the left chain sits on left-localized surfaces") {
  const ModelConfig c = testing::preset_model("slanted");
  const RunConfig rc = preset_config("slanted");
  const AngularGrid g(rc.grid.n_points);
  const auto s = compute_spectrum(c, g);
  const auto loc = localization(s, c.n_sites);
  const Wavefunction psi = initial_state(c, g, rc.packet_spec(c, 0)).psi;
  const Eigen::VectorXd pop = surface_populations(project_adiabatic(psi, s));
  const int j0 = g.nearest(c.theta_alpha0);
  double on_right = 0.0;
  for (int k = 0; k < s.dimension(); ++k)
    if (loc.w_right(k, j0) > 0.8) on_right += pop(k);
  CHECK(on_right < 0.05);
}

TEST_CASE("transition rates are antisymmetric and vanish without couplings") {
  const ModelConfig c = small_mobile();
  const AngularGrid g(128);
  const auto s = compute_spectrum(c, g);
  const auto nac = nac_hellmann_feynman(c, s);
  SpectralDerivative d(g, c.dimension());
  const auto phi = project_adiabatic(packet(c, g, -2, 2.0, 1), s);
  const Eigen::MatrixXd r = transition_rates(phi.amplitudes, nac, d);
  CHECK((r + r.transpose()).norm() < 1e-12 * std::max(1.0, r.norm()));
  CHECK(r.norm() > 0.0);

  NacField off = nac;
  off.active.clear();
  CHECK(transition_rates(phi.amplitudes, off, d).norm() == 0.0);
}

TEST_CASE("rates reproduce the time derivative of the surface populations") {
  const ModelConfig c = small_mobile();
  const AngularGrid g(128);
  const auto s = compute_spectrum(c, g);
  const auto nac = nac_hellmann_feynman(c, s);
  SpectralDerivative d(g, c.dimension());
  SurfaceWavefunction phi = project_adiabatic(packet(c, g, -2, 2.0, 1), s);
  const Eigen::MatrixXd r = transition_rates(phi.amplitudes, nac, d);

  PropagationSettings ps;
  ps.dt = 1e-4;
  ps.t_final = 1e-4;
  ps.guard_sites = 0;
  ps.splitting_order = 4;
  SurfaceWavefunction fwd = phi;
  AdiabaticPropagator(c, s, nac, ps).run(fwd);
  // H is real, so evolving conj(phi) forward gives the populations of phi at -dt.
  SurfaceWavefunction bwd = phi;
  bwd.amplitudes = bwd.amplitudes.conjugate();
  AdiabaticPropagator(c, s, nac, ps).run(bwd);
  const Eigen::VectorXd rate_fd = (surface_populations(fwd) - surface_populations(bwd)) / (2 * ps.dt);
  const Eigen::VectorXd rate_sum = r.rowwise().sum();
  CHECK((rate_fd - rate_sum).norm() < 1e-4 * std::max(1.0, rate_sum.norm()));
}

TEST_CASE("integrated transfer probabilities") {
  RateSeries series;
  for (int i = 0; i <= 10; ++i) {
    series.times.push_back(i * 0.5);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 3);
    r(0, 1) = 1.0;
    r(1, 0) = -1.0;
    r(0, 2) = 0.2 * i;
    r(2, 0) = -0.2 * i;
    series.rates.push_back(r);
  }
  const auto p = transition_probabilities(series, 2.25);
  CHECK(p.p(0, 1) == doctest::Approx(2.25));
  CHECK(p.p(0, 2) == doctest::Approx(0.2 / 0.5 * 2.25 * 2.25 / 2));
  CHECK(p.p(1, 0) == doctest::Approx(-2.25));
  CHECK(p.stride_change < 1e-12);
  const auto split = adjacency_split(p.p);
  CHECK(split.adjacent == doctest::Approx(2.25));
  CHECK(split.distant == doctest::Approx(std::abs(p.p(0, 2))));

  RateSeries zero = series;
  for (auto& r : zero.rates) r.setZero();
  CHECK(transition_probabilities(zero, 3.0).p.norm() == 0.0);
}

TEST_CASE("time to reach a fraction of the final value") {
  const std::vector<double> t{0, 1, 2, 3, 4};
  const std::vector<double> v{0, 0.2, 0.9, 0.96, 1.0};
  CHECK(time_to_fraction(t, v, 0.95) == 3.0);
  CHECK(time_to_fraction(t, v, 0.5) == 2.0);
  CHECK_THROWS_AS(time_to_fraction({}, {}, 0.5), ValidationError);
}

TEST_CASE("thermal average: ground-state limit, monotone in T, truncation guard") {
  const std::vector<double> nr{0.01, 0.03, 0.06};
  CHECK(thermal_transmission(nr, 0.0) == 0.01);
  CHECK(thermal_transmission(nr, 0.01) == doctest::Approx(0.01).epsilon(1e-12));
  double prev = 0.0;
  const double cap = max_thermal_temperature(3);
  for (int i = 0; i <= 20; ++i) {
    const double t = cap * (1 - 1e-9) * i / 20;
    const double v = thermal_transmission(nr, t);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(thermal_transmission(nr, 2 * cap), ValidationError);
  CHECK(std::pow(std::exp(-1.0 / cap), 3) == doctest::Approx(1e-4));
}
