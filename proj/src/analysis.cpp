#include "fano/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fano {

namespace {
using cd = std::complex<double>;
}

Eigen::VectorXd site_populations(const Field& amplitudes, double dtheta) {
  return amplitudes.cwiseAbs2().rowwise().sum() * dtheta;
}

Eigen::VectorXd site_populations(const Wavefunction& psi) { return site_populations(psi.amplitudes, psi.grid.spacing()); }

double right_weight(const Eigen::VectorXd& populations, int n_sites) {
  const SiteLayout layout(n_sites);
  const int first = layout.chain_index(1);
  return populations.segment(first, n_sites - first).sum();
}

SurfaceWavefunction project_adiabatic(const Wavefunction& psi, const AdiabaticSpectrum& spectrum) {
  if (!(psi.grid == spectrum.grid) || psi.amplitudes.rows() != spectrum.dimension())
    throw GridMismatch("project_adiabatic: wavefunction and spectrum disagree");
  SurfaceWavefunction out;
  out.grid = psi.grid;
  out.time = psi.time;
  out.amplitudes.resize(spectrum.dimension(), psi.grid.size());
  for (int j = 0; j < psi.grid.size(); ++j)
    out.amplitudes.col(j) = spectrum.vectors[j].transpose().cast<cd>() * psi.amplitudes.col(j);
  return out;
}

Wavefunction reconstruct_diabatic(const SurfaceWavefunction& phi, const AdiabaticSpectrum& spectrum) {
  if (!(phi.grid == spectrum.grid) || phi.amplitudes.rows() != spectrum.dimension())
    throw GridMismatch("reconstruct_diabatic: wavefunction and spectrum disagree");
  Wavefunction out;
  out.grid = phi.grid;
  out.time = phi.time;
  out.amplitudes.resize(spectrum.dimension(), phi.grid.size());
  for (int j = 0; j < phi.grid.size(); ++j)
    out.amplitudes.col(j) = spectrum.vectors[j].cast<cd>() * phi.amplitudes.col(j);
  return out;
}

Eigen::VectorXd surface_populations(const Field& amplitudes, double dtheta) {
  return amplitudes.cwiseAbs2().rowwise().sum() * dtheta;
}

Eigen::VectorXd surface_populations(const SurfaceWavefunction& phi) {
  return surface_populations(phi.amplitudes, phi.grid.spacing());
}

Eigen::MatrixXd transition_rates(const Field& phi, const NacField& nac, SpectralDerivative& derivative) {
  const int d = static_cast<int>(phi.rows());
  const Field dphi = derivative(phi);
  const double dtheta = 2 * std::numbers::pi / phi.cols();
  // 2 Im{ -c [ conj(f_k) (AA)_kl f_l + conj(f_k) A_kl f_l' - conj(f_k') A_kl f_l ] }
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  for (int j : nac.active) {
    const Eigen::MatrixXd& a = nac.first_order[j];
    const Eigen::MatrixXd aa = a * a;
    const Eigen::VectorXcd f = phi.col(j);
    const Eigen::VectorXcd g = dphi.col(j);
    acc += aa.cast<cd>().cwiseProduct(f.conjugate() * f.transpose());
    acc += a.cast<cd>().cwiseProduct(f.conjugate() * g.transpose() - g.conjugate() * f.transpose());
  }
  return (-2.0 * nac.mass_prefactor * dtheta) * acc.imag();
}

double time_to_fraction(const std::vector<double>& times, const std::vector<double>& values, double fraction) {
  if (times.empty() || times.size() != values.size()) throw ValidationError("time_to_fraction: empty or ragged series");
  const double target = fraction * values.back();
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i] >= target) return times[i];
  return times.back();
}

namespace {

Eigen::MatrixXd trapezoid(const RateSeries& s, double t_star, int every) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s.rates.front().rows(), s.rates.front().cols());
  size_t prev = 0;
  for (size_t i = every; i < s.times.size(); i += every) {
    if (s.times[prev] >= t_star) break;
    const double t1 = std::min(s.times[i], t_star);
    const double w = (t1 - s.times[prev]) / (s.times[i] - s.times[prev]);
    // Linear interpolation of the rate to t1 when the window ends mid-interval.
    const Eigen::MatrixXd r1 = s.rates[prev] + w * (s.rates[i] - s.rates[prev]);
    p += 0.5 * (t1 - s.times[prev]) * (s.rates[prev] + r1);
    prev = i;
  }
  return p;
}

}  // namespace

TransitionProbabilities transition_probabilities(const RateSeries& series, double t_star) {
  if (series.rates.size() < 2 || series.rates.size() != series.times.size())
    throw ValidationError("transition_probabilities: need at least two snapshots");
  TransitionProbabilities out;
  out.t_star = t_star;
  out.p = trapezoid(series, t_star, 1);
  if (series.rates.size() >= 5) {
    const Eigen::MatrixXd coarse = trapezoid(series, t_star, 2);
    const double scale = out.p.cwiseAbs().maxCoeff();
    out.stride_change = scale > 0 ? (coarse - out.p).cwiseAbs().maxCoeff() / scale : 0.0;
    out.coarse = out.stride_change > 0.01;
  }
  return out;
}

AdjacencySplit adjacency_split(const Eigen::MatrixXd& p) {
  AdjacencySplit out;
  for (int k = 0; k < p.rows(); ++k)
    for (int l = k + 1; l < p.cols(); ++l) (l - k == 1 ? out.adjacent : out.distant) += std::abs(p(k, l));
  return out;
}

double max_thermal_temperature(int count, double residual_tolerance) {
  if (count < 1) return 0.0;
  // Residual weight beyond nu = count - 1 is x^count with x = exp(-1/T).
  return -static_cast<double>(count) / std::log(residual_tolerance);
}

double thermal_transmission(const std::vector<double>& nr_by_nu, double temperature, double residual_tolerance) {
  if (nr_by_nu.empty()) throw ValidationError("thermal: no per-nu results");
  if (temperature < 0) throw ValidationError("thermal.temperature: must be >= 0");
  if (temperature == 0) return nr_by_nu.front();
  const double x = std::exp(-1.0 / temperature);
  const double residual = std::pow(x, static_cast<double>(nr_by_nu.size()));
  if (residual > residual_tolerance) {
    std::ostringstream msg;
    msg << "thermal: Boltzmann weight " << residual << " beyond nu = " << nr_by_nu.size() - 1 << " at T = "
        << temperature << "; extend the nu range";
    throw ValidationError(msg.str());
  }
  double num = 0.0, den = 0.0, w = 1.0;
  for (double nr : nr_by_nu) {
    num += w * nr;
    den += w;
    w *= x;
  }
  return num / den;
}

}  // namespace fano
