#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpca/model.hpp"
#include "fpca/smoother.hpp"

namespace fpca::spectral {

// Eigenpairs of the discretized covariance operator.  Eigenfunctions are
// columns, normalized to ||phi||_w = 1 and exactly orthonormal in the
// weighted inner product; eigenvalues are descending.
struct EigenSystem {
    smoother::Grid grid;
    Eigen::VectorXd eigenvalues;    // descending
    Eigen::MatrixXd eigenfunctions; // G x K, column k-1 pairs with eigenvalue k-1
    bool aligned = false;
    std::string aligned_against;
    int num_negative = 0;               // negative eigenvalues kept, flagged here
    bool degenerate_warning = false;    // repeated empirical eigenvalues detected
    std::vector<int> zero_alignment;    // 1-based indices where <phi_hat,phi> == 0
};

// Reference basis used for sign alignment: evaluates phi_j(t), 1-based j.
struct BasisRef {
    std::function<double(int, double)> eval;
    std::string id;

    static BasisRef from_spec(const model::ProcessSpec& spec);
};

// Diagnostics around the perturbation series for index j.
struct PerturbationDiagnostics {
    int j = 1;
    smoother::Grid grid;
    Eigen::VectorXd projections;       // <Delta phi_j, phi_k>, k = 1..K_max
    Eigen::VectorXd first_order_error; // leading resolvent term on the grid
    double hs_norm_delta = 0.0;        // ||Delta||_HS
    double eigengap = 0.0;             // eta_j of the model spectrum
    int K_max = 0;
};

// Solves the integral-operator eigenproblem by weighted symmetrization:
// eigenpairs of W^(1/2) C_hat W^(1/2), eigenvectors rescaled by W^(-1/2).
// All eigenpairs are returned; negatives are retained and counted.
EigenSystem eigendecompose(const smoother::CovarianceEstimate& est);

// Flips eigenfunction signs so <phi_hat_k, phi_k>_w >= 0.  Idempotent; exact
// zero inner products are left unchanged and recorded.
EigenSystem align_signs(EigenSystem sys, const BasisRef& reference);
EigenSystem align_signs(EigenSystem sys, const model::ProcessSpec& spec);

// ||phi_hat_j - phi_j||^2 under grid quadrature.  Requires an aligned system.
double l2_error(const EigenSystem& sys, const model::ProcessSpec& spec, int j);

struct EigenvalueError {
    double absolute = 0.0;
    double relative = 0.0;
};

EigenvalueError eigenvalue_error(const EigenSystem& sys, const model::ProcessSpec& spec, int j);

// Quadrature value of <(C_hat - C) phi_j, phi_k>; symmetric in (j,k).
double projection_moment(const smoother::CovarianceEstimate& est, const model::ProcessSpec& spec,
                         int j, int k);

// Default K_max for diagnostics: beyond grid resolution the projections are
// quadrature noise.
int default_K_max(const smoother::Grid& grid);

// Builds diagnostics (projections, HS norm, eigengap, leading resolvent term).
PerturbationDiagnostics make_diagnostics(const smoother::CovarianceEstimate& est,
                                         const model::ProcessSpec& spec, int j,
                                         std::optional<int> K_max = std::nullopt);

// Leading term of the perturbation expansion:
// sum_{k != j, k <= K_max} <Delta phi_j, phi_k> / (lambda_j - lambda_k) phi_k.
Eigen::VectorXd resolvent_first_order(const PerturbationDiagnostics& diag,
                                      const model::ProcessSpec& spec);

struct CrudeBoundRatio {
    double ratio = 0.0;
    bool degenerate = false; // 0/0 guarded (exact oracle input)
};

// ||phi_hat_j - phi_j||^2 divided by the crude perturbation bound
// eta_j^-2 ||Delta||_HS^2; small ratios mean the crude bound is loose.
CrudeBoundRatio crude_bound_ratio(const PerturbationDiagnostics& diag, const EigenSystem& sys,
                                  const model::ProcessSpec& spec, int j);

// Model eigengap eta_j = min_{k != j} |lambda_k - lambda_j|.
double model_eigengap(const model::ProcessSpec& spec, int j);

// ||C_hat - C||_HS on the grid (quadrature in both arguments).
double hs_distance_to_true(const smoother::CovarianceEstimate& est, const model::ProcessSpec& spec);

} // namespace fpca::spectral
