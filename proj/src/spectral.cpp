#include "fano/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace fano {

namespace {
// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

std::vector<double> angular_momenta(const AngularGrid& grid) {
  const int n = grid.size();
  const double scale = 2 * std::numbers::pi / (n * grid.spacing());  // = 1 on a full ring
  std::vector<double> p(n);
  for (int m = 0; m < n; ++m) p[m] = scale * (m < n / 2 ? m : m - n);
  return p;
}

struct SpectralDerivative::Impl {
  int n = 0;
  int components = 0;
  std::vector<double> momenta;
  fftw_complex* buffer = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }
};

SpectralDerivative::SpectralDerivative(const AngularGrid& grid, int components)
    : impl_(std::make_unique<Impl>()) {
  impl_->n = grid.size();
  impl_->components = components;
  impl_->momenta = angular_momenta(grid);
  const int n = impl_->n;
  std::lock_guard lock(planner_mutex());
  impl_->buffer = fftw_alloc_complex(static_cast<size_t>(n) * components);
  // Rows of a column-major (components x n) matrix: stride = components, dist = 1.
  int dims[1] = {n};
  impl_->forward = fftw_plan_many_dft(1, dims, components, impl_->buffer, nullptr, components, 1,
                                      impl_->buffer, nullptr, components, 1, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->backward = fftw_plan_many_dft(1, dims, components, impl_->buffer, nullptr, components, 1,
                                       impl_->buffer, nullptr, components, 1, FFTW_BACKWARD, FFTW_ESTIMATE);
}

SpectralDerivative::~SpectralDerivative() = default;
SpectralDerivative::SpectralDerivative(SpectralDerivative&&) noexcept = default;
SpectralDerivative& SpectralDerivative::operator=(SpectralDerivative&&) noexcept = default;

int SpectralDerivative::components() const { return impl_->components; }

void SpectralDerivative::apply(const Field& in, Field& out) {
  const int n = impl_->n;
  const int c = impl_->components;
  if (in.rows() != c || in.cols() != n) throw GridMismatch("spectral derivative: field shape mismatch");
  auto* buf = reinterpret_cast<std::complex<double>*>(impl_->buffer);
  std::copy(in.data(), in.data() + static_cast<size_t>(n) * c, buf);
  fftw_execute(impl_->forward);
  const double norm = 1.0 / n;
  for (int m = 0; m < n; ++m) {
    const std::complex<double> factor =
        (m == n / 2) ? std::complex<double>(0.0) : std::complex<double>(0.0, impl_->momenta[m] * norm);
    std::complex<double>* col = buf + static_cast<size_t>(m) * c;
    for (int r = 0; r < c; ++r) col[r] *= factor;
  }
  fftw_execute(impl_->backward);
  out.resize(c, n);
  std::copy(buf, buf + static_cast<size_t>(n) * c, out.data());
}

Eigen::MatrixXd angular_kinetic(const ModelConfig& config, const AngularGrid& grid) {
  const int n = grid.size();
  const auto p = angular_momenta(grid);
  const double inv2i = 1.0 / (2 * config.inertia());
  // Circulant: T(j,k) = (1/n) sum_m p_m^2/(2I) cos(p_m (theta_j - theta_k)).
  Eigen::VectorXd row(n);
  for (int d = 0; d < n; ++d) {
    double s = 0.0;
    for (int m = 0; m < n; ++m) s += p[m] * p[m] * std::cos(p[m] * grid.spacing() * d);
    row(d) = s * inv2i / n;
  }
  Eigen::MatrixXd t(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) t(j, k) = row(std::abs(j - k));
  return t;
}

Eigen::VectorXd trap_potential(const ModelConfig& config, const AngularGrid& grid) {
  Eigen::VectorXd v(grid.size());
  const double k = 0.5 * config.inertia() * config.vib_freq * config.vib_freq;
  for (int j = 0; j < grid.size(); ++j) {
    const double x = grid[j] - config.theta_alpha0;
    v(j) = k * x * x;
  }
  return v;
}

Eigen::MatrixXd vibrational_hamiltonian(const ModelConfig& config, const AngularGrid& grid) {
  Eigen::MatrixXd h = angular_kinetic(config, grid);
  h.diagonal() += trap_potential(config, grid);
  return h;
}

}  // namespace fano
