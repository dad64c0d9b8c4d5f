#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

#include "fano/model.hpp"

namespace fano {

/// Complex field over (component x theta); column j is the component vector at
/// grid point j.
using Field = Eigen::MatrixXcd;

/// Angular momenta conjugate to the periodic grid, in FFT order.
std::vector<double> angular_momenta(const AngularGrid& grid);

/// Spectral d/dtheta along the rows of a Field. The Nyquist mode is dropped, so
/// the operator is real antisymmetric on the grid.
class SpectralDerivative {
 public:
  SpectralDerivative(const AngularGrid& grid, int components);
  ~SpectralDerivative();
  SpectralDerivative(const SpectralDerivative&) = delete;
  SpectralDerivative& operator=(const SpectralDerivative&) = delete;
  SpectralDerivative(SpectralDerivative&&) noexcept;
  SpectralDerivative& operator=(SpectralDerivative&&) noexcept;

  /// out = d/dtheta in. Shapes must be (components x grid.size()).
  void apply(const Field& in, Field& out);
  Field operator()(const Field& in) {
    Field out(in.rows(), in.cols());
    apply(in, out);
    return out;
  }
  int components() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Kinetic plus harmonic-trap operator of the mobile angle on the grid,
/// -1/(2 M R^2) d^2/dtheta^2 + M omega^2 R^2 (theta - theta0)^2 / 2, as a dense
/// real symmetric matrix (Fourier representation of the Laplacian).
Eigen::MatrixXd vibrational_hamiltonian(const ModelConfig& config, const AngularGrid& grid);

/// Kinetic part alone.
Eigen::MatrixXd angular_kinetic(const ModelConfig& config, const AngularGrid& grid);

/// Harmonic trap on the [-pi, pi) branch.
Eigen::VectorXd trap_potential(const ModelConfig& config, const AngularGrid& grid);

}  // namespace fano
