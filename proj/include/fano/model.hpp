#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "fano/errors.hpp"

namespace fano {

enum class CouplingMode {
  NearestNeighborChain,  // chain hopping J, only site 0 <-> alpha couples chain and CU
  FullDipole,            // chain hopping J, every chain site couples to every CU site
};

/// Onsite energies of the control unit (units of J).
struct ControlUnitOnsite {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
};

/// Full physical parameterization. Units: hbar = 1, energies in J, lengths in
/// chain lattice spacings, angles in radians, time in 1/J.
struct ModelConfig {
  int n_sites = 100;
  double hop_j = 1.0;
  double c3 = 4.0;
  double ring_radius = 1.0;
  double theta_beta = std::numbers::pi / 2;
  double theta_eta = 5 * std::numbers::pi / 3;
  double theta_alpha0 = 0.0;
  double ring_center_offset = 2.0;
  std::map<int, double> chain_onsite;  // missing sites sit at zero
  ControlUnitOnsite cu_onsite;
  double vib_mass = 1.0;
  double vib_freq = 1.0;
  CouplingMode coupling_mode = CouplingMode::NearestNeighborChain;
  double min_site_distance = 0.5;  // couplings saturate below this separation

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
  /// All violated invariants, one message per entry, prefixed by the key path.
  std::vector<std::string> violations() const;

  int dimension() const { return n_sites + 3; }
  /// Moment of inertia M R^2 of the mobile site on its ring.
  double inertia() const { return vib_mass * ring_radius * ring_radius; }
  /// Ground-state angular width (2 M omega R^2)^(-1/2) of the density.
  double sigma_theta() const;
};

/// Site bookkeeping. Chain sites are labeled -(N/2-1) ... -1, 0, 1 ... N/2 with
/// the control unit attached at 0; the CU sites follow the chain in the matrix.
struct SiteLayout {
  int n_sites;

  explicit SiteLayout(int n) : n_sites(n) {}
  int first_label() const { return -(n_sites / 2 - 1); }
  int last_label() const { return n_sites / 2; }
  int chain_index(int label) const { return label - first_label(); }
  int label_of(int index) const { return index + first_label(); }
  int alpha() const { return n_sites; }
  int beta() const { return n_sites + 1; }
  int eta() const { return n_sites + 2; }
  int attachment() const { return chain_index(0); }
  bool is_chain(int index) const { return index < n_sites; }
};

/// Uniform periodic grid over [-pi, pi).
class AngularGrid {
 public:
  explicit AngularGrid(int n_points);

  int size() const { return n_; }
  double spacing() const { return spacing_; }
  double operator[](int j) const { return -std::numbers::pi + spacing_ * j; }
  std::vector<double> points() const;
  /// Index of the grid point nearest to theta (mapped into [-pi, pi)).
  int nearest(double theta) const;
  bool operator==(const AngularGrid& other) const { return n_ == other.n_; }

 private:
  int n_;
  double spacing_;
};

struct ElectronicMatrix {
  Eigen::MatrixXd h;
  double theta = 0.0;
};

enum class GeometryPolicy {
  Strict,  // throw GeometryError when coupled sites get closer than min_site_distance
  Clamp,   // saturate the interaction at min_site_distance (grid-wide builds)
};

using Vec2 = std::array<double, 2>;

/// Position of a ring site at polar angle theta. Angles are measured from the
/// direction that points from the ring center toward chain site 0.
Vec2 ring_position(const ModelConfig& config, double theta);
Vec2 chain_position(int label);

/// Dipolar exchange -C3 / d^3.
double dipole_coupling(double c3, double distance);

ElectronicMatrix build_hamiltonian(const ModelConfig& config, double theta,
                                   GeometryPolicy policy = GeometryPolicy::Strict);

/// First and second derivative of the electronic matrix with respect to the
/// mobile angle, evaluated analytically from the distance formulas.
struct HamiltonianDerivatives {
  Eigen::MatrixXd first;
  Eigen::MatrixXd second;
};
HamiltonianDerivatives hamiltonian_derivatives(const ModelConfig& config, double theta,
                                               GeometryPolicy policy = GeometryPolicy::Strict);

/// 3x3 block of the control unit alone, ordered (alpha, beta, eta).
ElectronicMatrix isolated_cu_hamiltonian(const ModelConfig& config, double theta,
                                         GeometryPolicy policy = GeometryPolicy::Strict);

/// Couplings from chain site 0 into (alpha, beta, eta). Only the alpha entry is
/// nonzero for nearest-neighbor mode.
Eigen::Vector3d chain_cu_coupling(const ModelConfig& config, double theta,
                                  GeometryPolicy policy = GeometryPolicy::Strict);

/// E = 2 J cos k.
double chain_dispersion(const ModelConfig& config, double k);
/// k = arccos(E / 2J), in (0, pi) for E strictly inside the band.
double chain_wavenumber(const ModelConfig& config, double energy);

/// Electronic matrices for every grid point (clamped geometry).
std::vector<ElectronicMatrix> build_on_grid(const ModelConfig& config, const AngularGrid& grid);

/// Grid indices at which a coupled pair fell below min_site_distance.
std::vector<int> clamped_points(const ModelConfig& config, const AngularGrid& grid);

}  // namespace fano
