#include "fano/surfaces.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fano {

namespace {

void fix_initial_sign(Eigen::MatrixXd& v) {
  for (int k = 0; k < v.cols(); ++k) {
    Eigen::Index i = 0;
    v.col(k).cwiseAbs().maxCoeff(&i);
    if (v(i, k) < 0) v.col(k) *= -1;
  }
}

// Greedy maximum-|overlap| matching of the tracked frame `prev` onto the
// freshly diagonalized columns of `next`. Returns the permuted, sign-aligned
// frame and appends ambiguous assignments to `flags`.
Eigen::MatrixXd track_step(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& next, int theta_index,
                           const SpectrumOptions& options, std::vector<int>& order,
                           std::vector<TrackingFlag>& flags) {
  const int d = static_cast<int>(prev.cols());
  const Eigen::MatrixXd overlap = prev.transpose() * next;
  std::vector<int> pairs(static_cast<size_t>(d) * d);
  std::iota(pairs.begin(), pairs.end(), 0);
  std::sort(pairs.begin(), pairs.end(), [&](int a, int b) {
    const double oa = std::abs(overlap(a / d, a % d));
    const double ob = std::abs(overlap(b / d, b % d));
    return oa != ob ? oa > ob : a < b;
  });
  std::vector<int> assign(d, -1);
  std::vector<char> used(d, 0);
  int remaining = d;
  for (int p : pairs) {
    const int s = p / d, c = p % d;
    if (assign[s] >= 0 || used[c]) continue;
    assign[s] = c;
    used[c] = 1;
    if (--remaining == 0) break;
  }
  Eigen::MatrixXd out(next.rows(), d);
  order.assign(d, 0);
  for (int s = 0; s < d; ++s) {
    const int c = assign[s];
    const double o = overlap(s, c);
    out.col(s) = o < 0 ? Eigen::VectorXd(-next.col(c)) : Eigen::VectorXd(next.col(c));
    order[s] = c;
    double runner_up = 0.0;
    for (int c2 = 0; c2 < d; ++c2)
      if (c2 != c) runner_up = std::max(runner_up, std::abs(overlap(s, c2)));
    if (std::abs(o) < options.min_overlap || std::abs(o) - runner_up < options.tie_tolerance)
      flags.push_back({theta_index, s, std::abs(o)});
  }
  return out;
}

}  // namespace

std::vector<int> window_indices(const AngularGrid& grid, double theta0, double half_width) {
  std::vector<int> out;
  for (int j = 0; j < grid.size(); ++j) {
    double dt = std::remainder(grid[j] - theta0, 2 * std::numbers::pi);
    if (std::abs(dt) <= half_width) out.push_back(j);
  }
  return out;
}

AdiabaticSpectrum compute_spectrum(const ModelConfig& config, const AngularGrid& grid,
                                   const SpectrumOptions& options) {
  config.validate();
  const int n = grid.size();
  const int d = config.dimension();
  std::vector<Eigen::VectorXd> raw_energies(n);
  std::vector<Eigen::MatrixXd> raw_vectors(n);

#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < n; ++j) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        build_hamiltonian(config, grid[j], GeometryPolicy::Clamp).h);
    raw_energies[j] = solver.eigenvalues();
    raw_vectors[j] = solver.eigenvectors();
  }

  AdiabaticSpectrum out;
  out.grid = grid;
  out.energies.resize(d, n);
  out.vectors.resize(n);

  const int j0 = grid.nearest(config.theta_alpha0);
  out.vectors[j0] = raw_vectors[j0];
  fix_initial_sign(out.vectors[j0]);
  out.energies.col(j0) = raw_energies[j0];

  std::vector<int> order;
  auto advance = [&](int from, int to) {
    out.vectors[to] = track_step(out.vectors[from], raw_vectors[to], to, options, order, out.flags);
    for (int s = 0; s < d; ++s) out.energies(s, to) = raw_energies[to](order[s]);
  };
  // Scan outward from the equilibrium angle so the frame is anchored where
  // the dynamics happens; the two sweeps meet on the far side of the ring.
  const int half = n / 2;
  for (int step = 1; step <= half; ++step) advance((j0 + step - 1) % n, (j0 + step) % n);
  for (int step = 1; step < n - half; ++step) advance((j0 - step + 1 + n) % n, (j0 - step + n) % n);

  double half_width = options.label_half_width;
  if (half_width <= 0) half_width = config.vib_freq > 0 ? 4 * config.sigma_theta() : std::numbers::pi;
  auto window = window_indices(grid, config.theta_alpha0, half_width);
  if (window.empty()) window.push_back(j0);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < d; ++s) {
    double mean = 0.0;
    for (int j : window) mean += out.energies(s, j);
    mean /= window.size();
    if (std::abs(mean) < best) {
      best = std::abs(mean);
      out.surface_index_offset = s;
    }
  }
  return out;
}

std::vector<TrackingFlag> flags_in(const AdiabaticSpectrum& spectrum, const std::vector<int>& indices) {
  std::vector<TrackingFlag> out;
  for (const auto& f : spectrum.flags)
    if (std::find(indices.begin(), indices.end(), f.theta_index) != indices.end()) out.push_back(f);
  return out;
}

LocalizationProfile localization(const AdiabaticSpectrum& spectrum, int n_sites) {
  const SiteLayout layout(n_sites);
  const int d = spectrum.dimension();
  const int n = spectrum.grid.size();
  LocalizationProfile out{Eigen::MatrixXd(d, n), Eigen::MatrixXd(d, n), Eigen::MatrixXd(d, n)};
  const int i0 = layout.attachment();
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd w = spectrum.vectors[j].cwiseAbs2();
    out.w_left.col(j) = w.topRows(i0).colwise().sum().transpose();
    out.w_right.col(j) = w.middleRows(i0 + 1, n_sites - i0 - 1).colwise().sum().transpose();
    out.w_cu.col(j) = (w.row(i0) + w.bottomRows(3).colwise().sum()).transpose();
  }
  return out;
}

namespace {

struct Couplings {
  Eigen::MatrixXd first, second;
  std::vector<NacField::Singular> singular;
};

Couplings couplings_from(const ModelConfig& config, double theta, const Eigen::MatrixXd& v, const Eigen::VectorXd& u,
                         int theta_index, double degeneracy_tolerance) {
  const int d = static_cast<int>(u.size());
  const auto dh = hamiltonian_derivatives(config, theta, GeometryPolicy::Clamp);
  const Eigen::MatrixXd g = v.transpose() * dh.first * v;
  const Eigen::MatrixXd g2 = v.transpose() * dh.second * v;

  Couplings out;
  out.first = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd inv_gap = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      if (k == l) continue;
      const double gap = u(l) - u(k);
      if (std::abs(gap) < degeneracy_tolerance) {
        if (k < l) out.singular.push_back({theta_index, k, l, gap});
        continue;
      }
      inv_gap(k, l) = 1.0 / gap;
      out.first(k, l) = g(k, l) * inv_gap(k, l);
    }
  // d/dtheta of G = V^T H' V follows from dV = V A.
  const Eigen::MatrixXd gp = g * out.first - out.first * g + g2;
  Eigen::MatrixXd first_p = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      if (inv_gap(k, l) != 0.0) first_p(k, l) = (gp(k, l) - out.first(k, l) * (g(l, l) - g(k, k))) * inv_gap(k, l);
  out.second = first_p + out.first * out.first;
  return out;
}

}  // namespace

NacField nac_hellmann_feynman(const ModelConfig& config, const AdiabaticSpectrum& spectrum,
                              std::vector<int> active, double degeneracy_tolerance) {
  const int n = spectrum.grid.size();
  if (spectrum.dimension() != config.dimension()) throw GridMismatch("NAC: spectrum dimension does not match the config");
  if (active.empty()) {
    active.resize(n);
    std::iota(active.begin(), active.end(), 0);
  }
  NacField out;
  out.first_order.resize(n);
  out.second_order.resize(n);
  out.active = active;
  out.mass_prefactor = 1.0 / (2 * config.inertia());
  out.degeneracy_tolerance = degeneracy_tolerance;

  std::vector<std::vector<NacField::Singular>> singular(active.size());
#pragma omp parallel for schedule(dynamic)
  for (int a = 0; a < static_cast<int>(active.size()); ++a) {
    const int j = active[a];
    Couplings c = couplings_from(config, spectrum.grid[j], spectrum.vectors[j], spectrum.energies.col(j), j,
                                 degeneracy_tolerance);
    out.first_order[j] = std::move(c.first);
    out.second_order[j] = std::move(c.second);
    singular[a] = std::move(c.singular);
  }
  for (auto& s : singular) out.singular.insert(out.singular.end(), s.begin(), s.end());
  return out;
}

PointCouplings derivative_couplings_at(const ModelConfig& config, double theta, double degeneracy_tolerance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(build_hamiltonian(config, theta, GeometryPolicy::Clamp).h);
  PointCouplings out;
  out.energies = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  Couplings c = couplings_from(config, theta, out.vectors, out.energies, -1, degeneracy_tolerance);
  out.first_order = std::move(c.first);
  out.second_order = std::move(c.second);
  return out;
}

namespace {

void check_shape(const NacField& nac, const Field& phi) {
  if (static_cast<int>(nac.first_order.size()) != phi.cols())
    throw GridMismatch("nac_apply: field and NAC grids differ");
  for (int j : nac.active)
    if (nac.first_order[j].rows() != phi.rows()) throw GridMismatch("nac_apply: surface count mismatch");
}

}  // namespace

Field nac_apply(const NacField& nac, const Field& phi, SpectralDerivative& derivative) {
  check_shape(nac, phi);
  const Field dphi = derivative(phi);
  Field out = Field::Zero(phi.rows(), phi.cols());
  for (int j : nac.active) {
    out.col(j) = -nac.mass_prefactor * (nac.second_order[j].cast<std::complex<double>>() * phi.col(j) +
                                        2.0 * nac.first_order[j].cast<std::complex<double>>() * dphi.col(j));
  }
  return out;
}

Field nac_apply_hermitian(const NacField& nac, const Field& phi, SpectralDerivative& derivative) {
  check_shape(nac, phi);
  const Field dphi = derivative(phi);
  Field a_phi = Field::Zero(phi.rows(), phi.cols());
  Field out = Field::Zero(phi.rows(), phi.cols());
  for (int j : nac.active) {
    const Eigen::MatrixXcd a = nac.first_order[j].cast<std::complex<double>>();
    a_phi.col(j) = a * phi.col(j);
    out.col(j) = a * a_phi.col(j) + a * dphi.col(j);
  }
  out += derivative(a_phi);
  return -nac.mass_prefactor * out;
}

}  // namespace fano
