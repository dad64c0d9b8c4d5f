#pragma once

#include <Eigen/Dense>

#include <vector>

#include "fano/model.hpp"
#include "fano/spectral.hpp"

namespace fano {

/// A grid point where surface tracking was ambiguous (tie between candidate
/// overlaps, or best overlap below the swap threshold).
struct TrackingFlag {
  int theta_index;
  int surface;
  double overlap;
};

struct SpectrumOptions {
  double tie_tolerance = 1e-6;
  double min_overlap = 0.5;
  /// Half-width of the window around theta_alpha0 used for the band-center
  /// label. Non-positive: 4 sigma_theta, or the whole grid for a static CU.
  double label_half_width = 0.0;
};

/// Gauge-continuous adiabatic surfaces. Internal surface s carries the label
/// s - surface_index_offset, so label 0 sits at the band center.
struct AdiabaticSpectrum {
  AngularGrid grid{2};
  Eigen::MatrixXd energies;              // (surface, theta index)
  std::vector<Eigen::MatrixXd> vectors;  // per theta: columns are the tracked eigenvectors
  int surface_index_offset = 0;
  std::vector<TrackingFlag> flags;

  int dimension() const { return static_cast<int>(energies.rows()); }
  int label(int surface) const { return surface - surface_index_offset; }
  int surface_of_label(int label) const { return label + surface_index_offset; }
};

AdiabaticSpectrum compute_spectrum(const ModelConfig& config, const AngularGrid& grid,
                                   const SpectrumOptions& options = {});

/// Window in theta (grid indices) of half-width `half_width` around theta0.
std::vector<int> window_indices(const AngularGrid& grid, double theta0, double half_width);

/// Flags whose grid point lies inside the given index set.
std::vector<TrackingFlag> flags_in(const AdiabaticSpectrum& spectrum, const std::vector<int>& indices);

struct LocalizationProfile {
  Eigen::MatrixXd w_left;   // (surface, theta)
  Eigen::MatrixXd w_right;
  Eigen::MatrixXd w_cu;     // site 0 and the three CU sites
};

LocalizationProfile localization(const AdiabaticSpectrum& spectrum, int n_sites);

/// First- and second-order derivative couplings <psi_k|d psi_l> and
/// <psi_k|d^2 psi_l> per grid point. Points outside `active` hold empty
/// matrices and are treated as zero.
struct NacField {
  std::vector<Eigen::MatrixXd> first_order;
  std::vector<Eigen::MatrixXd> second_order;
  std::vector<int> active;
  double mass_prefactor = 0.0;  // 1 / (2 M R^2)
  struct Singular {
    int theta_index, k, l;
    double gap;
  };
  std::vector<Singular> singular;
  double degeneracy_tolerance = 1e-9;

  bool is_active(int j) const { return j < static_cast<int>(first_order.size()) && first_order[j].size() > 0; }
};

/// Hellmann-Feynman couplings from the analytic d/dtheta of the Hamiltonian.
/// `active` selects grid points; an empty list means every point.
NacField nac_hellmann_feynman(const ModelConfig& config, const AdiabaticSpectrum& spectrum,
                              std::vector<int> active = {}, double degeneracy_tolerance = 1e-9);

/// Couplings at a single angle in the energy-ordered eigenbasis (no tracking).
struct PointCouplings {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
  Eigen::MatrixXd first_order;
  Eigen::MatrixXd second_order;
};
PointCouplings derivative_couplings_at(const ModelConfig& config, double theta, double degeneracy_tolerance = 1e-9);

/// sum_l D_kl phi_l with D_kl = -(1/2MR^2) (<k|d^2 l> + 2 <k|d l> d/dtheta).
/// phi has shape (surface, theta).
Field nac_apply(const NacField& nac, const Field& phi, SpectralDerivative& derivative);

/// Symmetrized form -(1/2MR^2) (A A + A d + d A) of the same operator; it is
/// Hermitian on the grid and equals nac_apply up to discretization error.
Field nac_apply_hermitian(const NacField& nac, const Field& phi, SpectralDerivative& derivative);

}  // namespace fano
