#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpca/harness.hpp"
#include "fpca/model.hpp"
#include "fpca/spectral.hpp"

namespace fpca::io {

// Decimal rendering with 17 significant digits; round-trips doubles exactly.
std::string format_g17(double x);

// dataset.csv: header "subject_id,obs_index,time,value", one row per
// observation, subjects in order, obs_index 0-based.
void write_dataset_csv(const std::string& path, const model::FunctionalDataset& data);
model::FunctionalDataset read_dataset_csv(const std::string& path);

// scores.csv sidecar: header "subject_id,xi_1,...,xi_J".
void write_scores_csv(const std::string& path, const Eigen::MatrixXd& scores);
Eigen::MatrixXd read_scores_csv(const std::string& path);

// Covariance matrix CSV: header row of grid points, then G rows of G values.
void write_covariance_csv(const std::string& path, const smoother::CovarianceEstimate& est);
smoother::CovarianceEstimate read_covariance_csv(const std::string& path);

// eigenvalues.csv: header "index,value".
void write_eigenvalues_csv(const std::string& path, const Eigen::VectorXd& values);

// eigenfunctions.csv: header "t,phi_1,...,phi_K", one grid point per row.
void write_eigenfunctions_csv(const std::string& path, const spectral::EigenSystem& sys,
                              int max_columns);

} // namespace fpca::io
