#pragma once

#include <Eigen/Dense>

#include "fpca/grid.hpp"
#include "fpca/kernels.hpp"
#include "fpca/model.hpp"

namespace fpca::smoother {

enum class EstimatorMethod { Exact, Binned, Oracle };

// Grid evaluation of the pooled covariance estimator
//   C_hat(s,t) = (1/n) sum_i [N(N-1)h^2]^-1 sum_{j != l} K((T_ij-s)/h) K((T_il-t)/h) X_ij X_il.
// The matrix is exactly symmetric; h and the kernel are kept for provenance.
struct CovarianceEstimate {
    Grid grid;
    Eigen::MatrixXd matrix;
    double h = 0.0;
    KernelSpec kernel;
    EstimatorMethod method = EstimatorMethod::Exact;
};

// Smoothing operator T_h f(x) = h^-1 int K((x-y)/h) f(y) dy evaluated by grid
// quadrature.  No boundary renormalization: kernel mass falling outside [0,1]
// is lost, matching the raw estimator.  Requires 0 < h < 0.5.
Eigen::VectorXd apply_Th(const KernelSpec& kernel, double h, const Grid& grid,
                         const Eigen::VectorXd& f);

// Evaluates the pooled estimator with exact kernel weights at every
// observation.  The off-diagonal restriction j != l is enforced by
// subtracting each observation's self-pair term from the per-subject
// rank-one product.  Cost is O(n (N W + S^2)) for window width W and
// per-subject support size S <= G.
CovarianceEstimate estimate_covariance_exact(const model::FunctionalDataset& data,
                                             const KernelSpec& kernel, double h,
                                             const Grid& grid, int parallel_width = 1);

// Fast path: observations are linearly binned onto the grid, per-subject
// binned weights accumulate rank-one products (self-pairs removed at bin
// resolution), and the kernel is applied once to the accumulated matrix.
CovarianceEstimate estimate_covariance_binned(const model::FunctionalDataset& data,
                                              const KernelSpec& kernel, double h,
                                              const Grid& grid, int parallel_width = 1);

// Analytic mean of the estimator under the uniform design: the double
// convolution int int h^-2 K((s-u)/h) K((t-v)/h) C(u,v) du dv evaluated by
// quadrature with quad_points panels per axis.  Noise does not enter (it is
// mean zero and independent).  Used as the bias oracle.
CovarianceEstimate expected_estimate_oracle(const model::ProcessSpec& spec,
                                            const KernelSpec& kernel, double h,
                                            const Grid& grid, int quad_points = 4096);

// Discretizes the true covariance on the grid (no smoothing).
CovarianceEstimate discretize_true_covariance(const model::ProcessSpec& spec, const Grid& grid);

} // namespace fpca::smoother
