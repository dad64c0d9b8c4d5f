#pragma once

#include <Eigen/Dense>

#include <vector>

#include "fano/dynamics.hpp"
#include "fano/surfaces.hpp"

namespace fano {

/// p_n = integral over theta of |phi_n|^2, for all N + 3 sites.
Eigen::VectorXd site_populations(const Wavefunction& psi);
Eigen::VectorXd site_populations(const Field& amplitudes, double dtheta);

/// N_R = sum over chain labels n > 0.
double right_weight(const Eigen::VectorXd& populations, int n_sites);

SurfaceWavefunction project_adiabatic(const Wavefunction& psi, const AdiabaticSpectrum& spectrum);
Wavefunction reconstruct_diabatic(const SurfaceWavefunction& phi, const AdiabaticSpectrum& spectrum);

/// p~_k = integral over theta of |phi~_k|^2.
Eigen::VectorXd surface_populations(const SurfaceWavefunction& phi);
Eigen::VectorXd surface_populations(const Field& amplitudes, double dtheta);

/// Instantaneous net rates r_kl = 2 integral Im[phi~_k^* (D phi~)_kl]; positive
/// means flow from l into k. Uses the symmetrized coupling operator and an
/// integration by parts, so r is exactly antisymmetric.
Eigen::MatrixXd transition_rates(const Field& phi, const NacField& nac, SpectralDerivative& derivative);

/// Time series of rates (one matrix per snapshot) and the matching times.
struct RateSeries {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> rates;
};

/// Time at which `values` first reaches `fraction` of its final value.
double time_to_fraction(const std::vector<double>& times, const std::vector<double>& values, double fraction = 0.95);

struct TransitionProbabilities {
  Eigen::MatrixXd p;        // P_kl over [0, t_star]
  double t_star = 0.0;
  double stride_change = 0.0;  // relative change when every other snapshot is dropped
  bool coarse = false;          // stride_change above 1 %
};

/// Trapezoidal time integral of the rates up to t_star.
TransitionProbabilities transition_probabilities(const RateSeries& series, double t_star);

/// Sums of |P_kl| over k < l for adjacent (|k - l| = 1) and distant pairs.
struct AdjacencySplit {
  double adjacent = 0.0;
  double distant = 0.0;
};
AdjacencySplit adjacency_split(const Eigen::MatrixXd& p);

/// N_R(T) = sum_nu p_nu N_R(nu), p_nu proportional to exp(-nu / T) with T in
/// units of omega / k_B. Throws ValidationError when the Boltzmann weight
/// beyond the supplied nu exceeds `residual_tolerance`.
double thermal_transmission(const std::vector<double>& nr_by_nu, double temperature,
                            double residual_tolerance = 1e-4);

/// Highest temperature for which `count` vibrational levels satisfy the
/// truncation tolerance.
double max_thermal_temperature(int count, double residual_tolerance = 1e-4);

}  // namespace fano
