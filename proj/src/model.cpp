#include "fano/model.hpp"

#include <cmath>
#include <sstream>

namespace fano {

namespace {

struct PairTerms {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double wrap_angle(double theta) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double t = std::fmod(theta + std::numbers::pi, two_pi);
  if (t < 0) t += two_pi;
  return t - std::numbers::pi;
}

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double checked_distance(const ModelConfig& config, const Vec2& a, const Vec2& b, GeometryPolicy policy,
                        const char* what, bool* clamped = nullptr) {
  const double d = distance(a, b);
  if (d < config.min_site_distance) {
    if (policy == GeometryPolicy::Strict) {
      std::ostringstream msg;
      msg << "sites " << what << " are " << d << " apart, below min_site_distance "
          << config.min_site_distance;
      throw GeometryError(msg.str());
    }
    if (clamped) *clamped = true;
    return config.min_site_distance;
  }
  return d;
}

// -C3/d^3 between the mobile site at angle theta and a fixed partner, together
// with its first two theta derivatives.
PairTerms mobile_pair(const ModelConfig& config, double theta, const Vec2& partner,
                      GeometryPolicy policy, const char* what) {
  const Vec2 r = ring_position(config, theta);
  const double radius = config.ring_radius;
  const Vec2 u{-std::sin(theta), std::cos(theta)};
  const Vec2 du{-std::cos(theta), -std::sin(theta)};
  const Vec2 rel{r[0] - partner[0], r[1] - partner[1]};
  bool clamped = false;
  const double d = checked_distance(config, r, partner, policy, what, &clamped);
  PairTerms out;
  out.value = dipole_coupling(config.c3, d);
  if (clamped) return out;
  const double d2 = d * d;
  const double d2p = 2 * radius * (rel[0] * du[0] + rel[1] * du[1]);
  const double d2pp = 2 * radius * radius - 2 * radius * (rel[0] * u[0] + rel[1] * u[1]);
  const double c3 = config.c3;
  out.first = 1.5 * c3 * std::pow(d2, -2.5) * d2p;
  out.second = 1.5 * c3 * (-2.5 * std::pow(d2, -3.5) * d2p * d2p + std::pow(d2, -2.5) * d2pp);
  return out;
}

double chain_onsite(const ModelConfig& config, int label) {
  auto it = config.chain_onsite.find(label);
  return it == config.chain_onsite.end() ? 0.0 : it->second;
}

}  // namespace

double ModelConfig::sigma_theta() const { return 1.0 / std::sqrt(2 * inertia() * vib_freq); }

std::vector<std::string> ModelConfig::violations() const {
  std::vector<std::string> out;
  if (n_sites < 4 || n_sites % 2 != 0)
    out.push_back("model.n_sites: must be even and >= 4 (the chain splits into N/2-1 and N/2 sites)");
  if (!(hop_j > 0)) out.push_back("model.hop_j: must be > 0");
  if (!(ring_radius > 0)) out.push_back("model.ring_radius: must be > 0");
  if (!(vib_mass > 0)) out.push_back("model.vib_mass: must be > 0");
  if (!(vib_freq >= 0)) out.push_back("model.vib_freq: must be >= 0");
  if (!(min_site_distance > 0)) out.push_back("model.min_site_distance: must be > 0");
  if (std::abs(wrap_angle(theta_beta - theta_eta)) < 1e-12)
    out.push_back("model.theta_beta: must differ from model.theta_eta");
  for (const auto& [label, e] : chain_onsite) {
    if (label < -(n_sites / 2 - 1) || label > n_sites / 2) {
      std::ostringstream msg;
      msg << "model.chain_onsite." << label << ": site outside the chain";
      out.push_back(msg.str());
    }
  }
  return out;
}

void ModelConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ValidationError(v.front());
}

AngularGrid::AngularGrid(int n_points) : n_(n_points), spacing_(0.0) {
  if (!is_power_of_two(n_points)) throw ValidationError("grid.n_points: must be a positive power of two");
  spacing_ = 2 * std::numbers::pi / n_points;
}

std::vector<double> AngularGrid::points() const {
  std::vector<double> out(n_);
  for (int j = 0; j < n_; ++j) out[j] = (*this)[j];
  return out;
}

int AngularGrid::nearest(double theta) const {
  const double t = wrap_angle(theta);
  int j = static_cast<int>(std::lround((t + std::numbers::pi) / spacing_));
  return j % n_;
}

Vec2 ring_position(const ModelConfig& config, double theta) {
  return {-config.ring_radius * std::sin(theta),
          -config.ring_center_offset + config.ring_radius * std::cos(theta)};
}

Vec2 chain_position(int label) { return {static_cast<double>(label), 0.0}; }

double dipole_coupling(double c3, double distance) { return -c3 / (distance * distance * distance); }

ElectronicMatrix isolated_cu_hamiltonian(const ModelConfig& config, double theta, GeometryPolicy policy) {
  const Vec2 ra = ring_position(config, theta);
  const Vec2 rb = ring_position(config, config.theta_beta);
  const Vec2 re = ring_position(config, config.theta_eta);
  ElectronicMatrix out;
  out.theta = theta;
  out.h = Eigen::Matrix3d::Zero();
  out.h(0, 0) = config.cu_onsite.alpha;
  out.h(1, 1) = config.cu_onsite.beta;
  out.h(2, 2) = config.cu_onsite.eta;
  const double wab = dipole_coupling(config.c3, checked_distance(config, ra, rb, policy, "alpha-beta"));
  const double wae = dipole_coupling(config.c3, checked_distance(config, ra, re, policy, "alpha-eta"));
  const double wbe = dipole_coupling(config.c3, checked_distance(config, rb, re, policy, "beta-eta"));
  out.h(0, 1) = out.h(1, 0) = wab;
  out.h(0, 2) = out.h(2, 0) = wae;
  out.h(1, 2) = out.h(2, 1) = wbe;
  return out;
}

Eigen::Vector3d chain_cu_coupling(const ModelConfig& config, double theta, GeometryPolicy policy) {
  const Vec2 r0 = chain_position(0);
  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  w(0) = dipole_coupling(config.c3,
                         checked_distance(config, r0, ring_position(config, theta), policy, "0-alpha"));
  if (config.coupling_mode == CouplingMode::FullDipole) {
    w(1) = dipole_coupling(config.c3, checked_distance(config, r0, ring_position(config, config.theta_beta),
                                                       policy, "0-beta"));
    w(2) = dipole_coupling(config.c3, checked_distance(config, r0, ring_position(config, config.theta_eta),
                                                       policy, "0-eta"));
  }
  return w;
}

ElectronicMatrix build_hamiltonian(const ModelConfig& config, double theta, GeometryPolicy policy) {
  const SiteLayout layout(config.n_sites);
  const int dim = config.dimension();
  ElectronicMatrix out;
  out.theta = theta;
  out.h = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < config.n_sites; ++i) {
    out.h(i, i) = chain_onsite(config, layout.label_of(i));
    if (i + 1 < config.n_sites) out.h(i, i + 1) = out.h(i + 1, i) = config.hop_j;
  }
  out.h.bottomRightCorner<3, 3>() = isolated_cu_hamiltonian(config, theta, policy).h;

  const std::array<Vec2, 3> cu{ring_position(config, theta), ring_position(config, config.theta_beta),
                               ring_position(config, config.theta_eta)};
  if (config.coupling_mode == CouplingMode::NearestNeighborChain) {
    const int i0 = layout.attachment();
    const double w =
        dipole_coupling(config.c3, checked_distance(config, chain_position(0), cu[0], policy, "0-alpha"));
    out.h(i0, layout.alpha()) = out.h(layout.alpha(), i0) = w;
  } else {
    for (int i = 0; i < config.n_sites; ++i) {
      const Vec2 rn = chain_position(layout.label_of(i));
      for (int c = 0; c < 3; ++c) {
        const double w = dipole_coupling(config.c3, checked_distance(config, rn, cu[c], policy, "chain-CU"));
        out.h(i, config.n_sites + c) = out.h(config.n_sites + c, i) = w;
      }
    }
  }
  return out;
}

HamiltonianDerivatives hamiltonian_derivatives(const ModelConfig& config, double theta,
                                               GeometryPolicy policy) {
  const SiteLayout layout(config.n_sites);
  const int dim = config.dimension();
  HamiltonianDerivatives out{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim)};
  auto set = [&](int i, int j, const PairTerms& t) {
    out.first(i, j) = out.first(j, i) = t.first;
    out.second(i, j) = out.second(j, i) = t.second;
  };
  const int a = layout.alpha();
  set(a, layout.beta(), mobile_pair(config, theta, ring_position(config, config.theta_beta), policy, "alpha-beta"));
  set(a, layout.eta(), mobile_pair(config, theta, ring_position(config, config.theta_eta), policy, "alpha-eta"));
  if (config.coupling_mode == CouplingMode::NearestNeighborChain) {
    set(a, layout.attachment(), mobile_pair(config, theta, chain_position(0), policy, "0-alpha"));
  } else {
    for (int i = 0; i < config.n_sites; ++i)
      set(a, i, mobile_pair(config, theta, chain_position(layout.label_of(i)), policy, "chain-alpha"));
  }
  return out;
}

double chain_dispersion(const ModelConfig& config, double k) { return 2 * config.hop_j * std::cos(k); }

double chain_wavenumber(const ModelConfig& config, double energy) {
  const double x = energy / (2 * config.hop_j);
  if (!(std::abs(x) < 1)) throw OutsideBand("energy outside the open band (-2J, 2J)");
  return std::acos(x);
}

std::vector<ElectronicMatrix> build_on_grid(const ModelConfig& config, const AngularGrid& grid) {
  std::vector<ElectronicMatrix> out(grid.size());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < grid.size(); ++j) out[j] = build_hamiltonian(config, grid[j], GeometryPolicy::Clamp);
  return out;
}

std::vector<int> clamped_points(const ModelConfig& config, const AngularGrid& grid) {
  std::vector<int> out;
  for (int j = 0; j < grid.size(); ++j) {
    try {
      build_hamiltonian(config, grid[j], GeometryPolicy::Strict);
    } catch (const GeometryError&) {
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace fano
