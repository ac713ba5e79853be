#include "fpca/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpca::spectral {

namespace {

void check_symmetric(const Eigen::MatrixXd& A) {
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw std::invalid_argument("eigendecompose: input matrix is not symmetric");
}

Eigen::MatrixXd basis_on_grid(const model::ProcessSpec& spec, const smoother::Grid& grid, int J) {
    return model::basis_matrix(spec, grid.points, J);
}

void check_j(const EigenSystem& sys, int j) {
    if (j < 1 || j > sys.eigenvalues.size())
        throw std::invalid_argument("eigen index j out of range for this system");
}

} // namespace

BasisRef BasisRef::from_spec(const model::ProcessSpec& spec) {
    return BasisRef{[spec](int j, double t) { return model::basis_eval(spec, j, t); },
                    "model:" + spec.digest()};
}

int default_K_max(const smoother::Grid& grid) {
    return std::min(grid.G / 4, 64);
}

double model_eigengap(const model::ProcessSpec& spec, int j) {
    if (j < 1) throw std::invalid_argument("model_eigengap: j must be >= 1");
    // Eigenvalues are strictly decreasing, so the gap is attained at a
    // neighbour.
    const double lj = model::eigenvalue(spec, j);
    double gap = lj - model::eigenvalue(spec, j + 1);
    if (j > 1) gap = std::min(gap, model::eigenvalue(spec, j - 1) - lj);
    return gap;
}

EigenSystem eigendecompose(const smoother::CovarianceEstimate& est) {
    check_symmetric(est.matrix);
    const int G = est.grid.G;

    // Nystrom-type weighted symmetrization: eigenpairs of W^(1/2) C W^(1/2)
    // are exactly orthonormal, and rescaling by W^(-1/2) restores grid
    // functions orthonormal in the weighted inner product.
    Eigen::VectorXd sqrt_w = est.grid.weights.array().sqrt();
    Eigen::MatrixXd B = sqrt_w.asDiagonal() * est.matrix * sqrt_w.asDiagonal();
    B = 0.5 * (B + B.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecompose: eigensolver failed to converge");

    EigenSystem sys;
    sys.grid = est.grid;
    sys.eigenvalues.resize(G);
    sys.eigenfunctions.resize(G, G);
    // Eigen returns ascending order; flip to descending.
    for (int k = 0; k < G; ++k) {
        sys.eigenvalues[k] = solver.eigenvalues()[G - 1 - k];
        sys.eigenfunctions.col(k) =
            solver.eigenvectors().col(G - 1 - k).array() / sqrt_w.array();
    }
    sys.num_negative = static_cast<int>((sys.eigenvalues.array() < 0.0).count());

    const double scale = std::max(std::abs(sys.eigenvalues[0]), 1e-300);
    for (int k = 0; k + 1 < G; ++k) {
        if (std::abs(sys.eigenvalues[k] - sys.eigenvalues[k + 1]) <= 1e-14 * scale) {
            sys.degenerate_warning = true;
            break;
        }
    }
    return sys;
}

EigenSystem align_signs(EigenSystem sys, const BasisRef& reference) {
    const int K = static_cast<int>(sys.eigenvalues.size());
    Eigen::VectorXd ref(sys.grid.G);
    sys.zero_alignment.clear();
    for (int k = 1; k <= K; ++k) {
        for (int g = 0; g < sys.grid.G; ++g) ref[g] = reference.eval(k, sys.grid.points[g]);
        const double ip = sys.grid.inner(sys.eigenfunctions.col(k - 1), ref);
        if (ip < 0.0) sys.eigenfunctions.col(k - 1) *= -1.0;
        else if (ip == 0.0) sys.zero_alignment.push_back(k);
    }
    sys.aligned = true;
    sys.aligned_against = reference.id;
    return sys;
}

EigenSystem align_signs(EigenSystem sys, const model::ProcessSpec& spec) {
    return align_signs(std::move(sys), BasisRef::from_spec(spec));
}

double l2_error(const EigenSystem& sys, const model::ProcessSpec& spec, int j) {
    check_j(sys, j);
    if (!sys.aligned) throw std::invalid_argument("l2_error: system must be sign-aligned first");
    Eigen::VectorXd phi(sys.grid.G);
    for (int g = 0; g < sys.grid.G; ++g) phi[g] = model::basis_eval(spec, j, sys.grid.points[g]);
    return sys.grid.norm2(sys.eigenfunctions.col(j - 1) - phi);
}

EigenvalueError eigenvalue_error(const EigenSystem& sys, const model::ProcessSpec& spec, int j) {
    check_j(sys, j);
    const double lj = model::eigenvalue(spec, j);
    if (lj == 0.0) throw std::invalid_argument("eigenvalue_error: lambda_j is zero");
    const double abs_err = sys.eigenvalues[j - 1] - lj;
    return {abs_err, abs_err / lj};
}

double projection_moment(const smoother::CovarianceEstimate& est, const model::ProcessSpec& spec,
                         int j, int k) {
    if (j < 1 || k < 1) throw std::invalid_argument("projection_moment: indices must be >= 1");
    const smoother::Grid& grid = est.grid;
    const int J = std::max(j, k);
    const Eigen::MatrixXd phi = basis_on_grid(spec, grid, J);
    const Eigen::VectorXd wj = grid.weights.asDiagonal() * phi.col(j - 1);
    const Eigen::VectorXd wk = grid.weights.asDiagonal() * phi.col(k - 1);
    const double quad = wj.dot(est.matrix * wk);
    // <C phi_j, phi_k> is lambda_j delta_jk for the model; using the analytic
    // value avoids rediscretizing C.
    const double truth = (j == k && j <= spec.truncation_J) ? model::eigenvalue(spec, j) : 0.0;
    return quad - truth;
}

double hs_distance_to_true(const smoother::CovarianceEstimate& est,
                           const model::ProcessSpec& spec) {
    const smoother::CovarianceEstimate truth =
        smoother::discretize_true_covariance(spec, est.grid);
    const Eigen::MatrixXd delta = est.matrix - truth.matrix;
    const Eigen::VectorXd& w = est.grid.weights;
    const double hs2 = (w.asDiagonal() * delta.cwiseProduct(delta) * w.asDiagonal()).sum();
    return std::sqrt(std::max(0.0, hs2));
}

PerturbationDiagnostics make_diagnostics(const smoother::CovarianceEstimate& est,
                                         const model::ProcessSpec& spec, int j,
                                         std::optional<int> K_max) {
    if (j < 1) throw std::invalid_argument("make_diagnostics: j must be >= 1");
    PerturbationDiagnostics diag;
    diag.j = j;
    diag.grid = est.grid;
    diag.K_max = K_max.value_or(default_K_max(est.grid));
    if (diag.K_max < 1) throw std::invalid_argument("make_diagnostics: K_max must be >= 1");
    diag.projections.resize(diag.K_max);
    for (int k = 1; k <= diag.K_max; ++k)
        diag.projections[k - 1] = projection_moment(est, spec, j, k);
    diag.hs_norm_delta = hs_distance_to_true(est, spec);
    diag.eigengap = model_eigengap(spec, j);
    diag.first_order_error = resolvent_first_order(diag, spec);
    return diag;
}

Eigen::VectorXd resolvent_first_order(const PerturbationDiagnostics& diag,
                                      const model::ProcessSpec& spec) {
    if (!(diag.eigengap > 0.0))
        throw std::invalid_argument("resolvent_first_order: eigengap must be positive");
    const double lj = model::eigenvalue(spec, diag.j);
    const int K = diag.K_max;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(K);
    for (int k = 1; k <= K; ++k) {
        if (k == diag.j) continue;
        const double lk = model::eigenvalue(spec, k);
        if (lk == lj) throw std::invalid_argument("resolvent_first_order: eigen-gap violated");
        coef[k - 1] = diag.projections[k - 1] / (lj - lk);
    }
    return basis_on_grid(spec, diag.grid, K) * coef;
}

CrudeBoundRatio crude_bound_ratio(const PerturbationDiagnostics& diag, const EigenSystem& sys,
                                  const model::ProcessSpec& spec, int j) {
    if (!(diag.eigengap > 0.0))
        throw std::invalid_argument("crude_bound_ratio: eigengap must be positive");
    const double err = l2_error(sys, spec, j);
    const double denom =
        diag.hs_norm_delta * diag.hs_norm_delta / (diag.eigengap * diag.eigengap);
    if (denom == 0.0) {
        if (err == 0.0) return {0.0, true};
        throw std::invalid_argument("crude_bound_ratio: zero denominator with nonzero error");
    }
    return {err / denom, false};
}

} // namespace fpca::spectral
