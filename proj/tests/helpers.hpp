#pragma once

#include <Eigen/Eigenvalues>

#include "fano/config.hpp"
#include "fano/statics.hpp"

namespace testing {

// Calibrated preset model with a different chain length.
inline fano::ModelConfig preset_model(const std::string& name, int n_sites = 0) {
  const fano::RunConfig rc = fano::preset_config(name);
  fano::ModelConfig m = fano::calibrate(rc.effective_model(), rc.calibration);
  if (n_sites > 0) m.n_sites = n_sites;
  return m;
}

inline Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& h) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace testing
