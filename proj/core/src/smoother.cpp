#include "fpca/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpca/parallel.hpp"

namespace fpca::smoother {

namespace {

void check_bandwidth(double h) {
    if (!(h > 0.0 && h < 0.5))
        throw std::invalid_argument("bandwidth h must lie in (0, 0.5)");
}

void check_data(const model::FunctionalDataset& data) {
    if (data.N() < 2)
        throw std::invalid_argument("degenerate design: off-diagonal pairs require N>=2");
    if (data.n() < 1) throw std::invalid_argument("dataset has no subjects");
}

// Kernel coefficients on grid offsets: kcoef[d] = K(d*dx/h), d = 0..W.
struct BandKernel {
    std::vector<double> kcoef;
    int W = 0;

    BandKernel(const KernelSpec& kernel, double h, double dx) {
        W = static_cast<int>(std::floor(h / dx));
        kcoef.resize(W + 1);
        for (int d = 0; d <= W; ++d) kcoef[d] = kernel_eval(kernel, d * dx / h);
    }
};

// C = B * M * B for the symmetric Toeplitz band B restricted to the grid
// square (no wrap-around).  Result is exactly symmetrized.
Eigen::MatrixXd band_congruence(const Eigen::MatrixXd& M, const BandKernel& band) {
    const int G = static_cast<int>(M.rows());
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(G, G); // U = B * M
    for (int d = -band.W; d <= band.W; ++d) {
        const double k = band.kcoef[std::abs(d)];
        if (k == 0.0 || std::abs(d) >= G) continue;
        const int len = G - std::abs(d);
        U.middleRows(std::max(0, -d), len) += k * M.middleRows(std::max(0, d), len);
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(G, G); // C = U * B
    for (int d = -band.W; d <= band.W; ++d) {
        const double k = band.kcoef[std::abs(d)];
        if (k == 0.0 || std::abs(d) >= G) continue;
        const int len = G - std::abs(d);
        C.middleCols(std::max(0, -d), len) += k * U.middleCols(std::max(0, d), len);
    }
    C = 0.5 * (C + C.transpose()).eval();
    return C;
}

void mirror_upper(Eigen::MatrixXd& A) {
    const int G = static_cast<int>(A.rows());
    for (int r = 0; r < G; ++r)
        for (int c = 0; c < r; ++c) A(r, c) = A(c, r);
}

// Fixed-shape pairwise reduction: the summation tree depends only on the
// number of chunks, never on thread timing, so results are bit-stable across
// parallel widths.
Eigen::MatrixXd reduce_chunks(std::vector<Eigen::MatrixXd>& partials) {
    const int K = static_cast<int>(partials.size());
    for (int stride = 1; stride < K; stride *= 2)
        for (int i = 0; i + stride < K; i += 2 * stride) partials[i] += partials[i + stride];
    return std::move(partials[0]);
}

constexpr int kChunkSubjects = 256;

} // namespace

Eigen::VectorXd apply_Th(const KernelSpec& kernel, double h, const Grid& grid,
                         const Eigen::VectorXd& f) {
    check_bandwidth(h);
    if (f.size() != grid.G) throw std::invalid_argument("apply_Th: f does not match grid");
    const int G = grid.G;
    const double dx = grid.spacing();

    // Quadrature: the piecewise-linear interpolant of f is integrated against
    // the kernel exactly (3-point Gauss per clipped panel is exact for the
    // polynomial kernel families times a linear hat).  The operator action is
    // then symmetrized in the weighted inner product, (A + W^-1 A^T W)/2, so
    // discrete self-adjointness holds to rounding.
    static constexpr double gn[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

    Eigen::VectorXd row_action = Eigen::VectorXd::Zero(G); // (A f)[x]
    Eigen::VectorXd col_action = Eigen::VectorXd::Zero(G); // (A^T W f)[g]
    for (int x = 0; x < G; ++x) {
        const double cx = grid.points[x];
        const double lo = cx - h;
        const double hi = cx + h;
        int p0 = static_cast<int>(std::floor(lo / dx));
        int p1 = static_cast<int>(std::floor(hi / dx));
        p0 = std::max(0, p0);
        p1 = std::min(G - 2, p1);
        double u = 0.0;
        for (int p = p0; p <= p1; ++p) {
            const double ya = std::max(p * dx, lo);
            const double yb = std::min((p + 1) * dx, hi);
            if (!(yb > ya)) continue;
            const double mid = 0.5 * (ya + yb);
            const double half = 0.5 * (yb - ya);
            double c0 = 0.0, c1 = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double y = mid + half * gn[q];
                const double k = gw[q] * half * kernel_eval(kernel, (cx - y) / h);
                const double t = (y - p * dx) / dx; // hat weight toward node p+1
                c0 += k * (1.0 - t);
                c1 += k * t;
            }
            u += c0 * f[p] + c1 * f[p + 1];
            col_action[p] += grid.weights[x] * c0 * f[x];
            col_action[p + 1] += grid.weights[x] * c1 * f[x];
        }
        row_action[x] = u;
    }
    Eigen::VectorXd out(G);
    for (int x = 0; x < G; ++x)
        out[x] = 0.5 * (row_action[x] + col_action[x] / grid.weights[x]) / h;
    return out;
}

CovarianceEstimate estimate_covariance_exact(const model::FunctionalDataset& data,
                                             const KernelSpec& kernel, double h,
                                             const Grid& grid, int parallel_width) {
    check_bandwidth(h);
    check_data(data);
    const int G = grid.G;
    const int n = data.n();
    const int N = data.N();
    const double dx = grid.spacing();
    const double scale = static_cast<double>(G - 1); // index = t * scale
    const double pair_norm = 1.0 / (static_cast<double>(N) * (N - 1));
    const int W = static_cast<int>(std::floor(h / dx));

    const int n_chunks = (n + kChunkSubjects - 1) / kChunkSubjects;
    std::vector<Eigen::MatrixXd> partials(n_chunks);

    detail::parallel_for(parallel_width, n_chunks, [&](int chunk) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(G, G); // upper triangle
        Eigen::VectorXd a(G);
        std::vector<int> stamp(G, -1);
        std::vector<int> support;
        std::vector<int> win_lo(N), win_hi(N);
        Eigen::MatrixXd win_k(N, 2 * W + 3);

        const int i0 = chunk * kChunkSubjects;
        const int i1 = std::min(n, i0 + kChunkSubjects);
        for (int i = i0; i < i1; ++i) {
            support.clear();
            for (int m = 0; m < N; ++m) {
                const double t = data.times(i, m);
                const double x = data.values(i, m);
                const int lo = std::max(0, static_cast<int>(std::ceil((t - h) * scale)));
                const int hi = std::min(G - 1, static_cast<int>(std::floor((t + h) * scale)));
                win_lo[m] = lo;
                win_hi[m] = hi;
                for (int g = lo; g <= hi; ++g) {
                    const double k = kernel_eval(kernel, (t - grid.points[g]) / h);
                    win_k(m, g - lo) = k;
                    if (stamp[g] != i) {
                        stamp[g] = i;
                        a[g] = 0.0;
                        support.push_back(g);
                    }
                    a[g] += k * x;
                }
            }
            std::sort(support.begin(), support.end());
            for (std::size_t p = 0; p < support.size(); ++p) {
                const int gp = support[p];
                const double ap = pair_norm * a[gp];
                for (std::size_t q = p; q < support.size(); ++q)
                    A(gp, support[q]) += ap * a[support[q]];
            }
            for (int m = 0; m < N; ++m) {
                const double x2 = pair_norm * data.values(i, m) * data.values(i, m);
                for (int g = win_lo[m]; g <= win_hi[m]; ++g) {
                    const double kg = win_k(m, g - win_lo[m]) * x2;
                    for (int gq = g; gq <= win_hi[m]; ++gq)
                        A(g, gq) -= kg * win_k(m, gq - win_lo[m]);
                }
            }
        }
        partials[chunk] = std::move(A);
    });

    Eigen::MatrixXd A = reduce_chunks(partials);
    A *= 1.0 / (static_cast<double>(n) * h * h);
    mirror_upper(A);

    return {grid, std::move(A), h, kernel, EstimatorMethod::Exact};
}

CovarianceEstimate estimate_covariance_binned(const model::FunctionalDataset& data,
                                              const KernelSpec& kernel, double h,
                                              const Grid& grid, int parallel_width) {
    check_bandwidth(h);
    check_data(data);
    const int G = grid.G;
    const int n = data.n();
    const int N = data.N();
    const double scale = static_cast<double>(G - 1);
    const double pair_norm = 1.0 / (static_cast<double>(N) * (N - 1));

    const int n_chunks = (n + kChunkSubjects - 1) / kChunkSubjects;
    std::vector<Eigen::MatrixXd> partials(n_chunks);

    detail::parallel_for(parallel_width, n_chunks, [&](int chunk) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(G, G); // upper triangle
        std::vector<int> stamp(G, -1);
        std::vector<int> touched;
        Eigen::VectorXd w(G);

        const int i0 = chunk * kChunkSubjects;
        const int i1 = std::min(n, i0 + kChunkSubjects);
        for (int i = i0; i < i1; ++i) {
            touched.clear();
            // Linear binning: each observation splits between its two
            // neighbouring grid points.
            for (int m = 0; m < N; ++m) {
                const double pos = data.times(i, m) * scale;
                int b = std::min(G - 2, static_cast<int>(std::floor(pos)));
                if (b < 0) b = 0;
                const double f = std::clamp(pos - b, 0.0, 1.0);
                const double x = data.values(i, m);
                const double u = (1.0 - f) * x;
                const double v = f * x;
                for (int idx : {b, b + 1}) {
                    if (stamp[idx] != i) {
                        stamp[idx] = i;
                        w[idx] = 0.0;
                        touched.push_back(idx);
                    }
                }
                w[b] += u;
                w[b + 1] += v;
                // Self-pair removal at bin resolution: subtract the outer
                // product of this observation's own binning weights.
                M(b, b) -= pair_norm * u * u;
                M(b, b + 1) -= pair_norm * u * v;
                M(b + 1, b + 1) -= pair_norm * v * v;
            }
            std::sort(touched.begin(), touched.end());
            for (std::size_t p = 0; p < touched.size(); ++p) {
                const int gp = touched[p];
                const double wp = pair_norm * w[gp];
                for (std::size_t q = p; q < touched.size(); ++q)
                    M(gp, touched[q]) += wp * w[touched[q]];
            }
        }
        partials[chunk] = std::move(M);
    });

    Eigen::MatrixXd M = reduce_chunks(partials);
    mirror_upper(M);

    const BandKernel band(kernel, h, grid.spacing());
    Eigen::MatrixXd C = band_congruence(M, band);
    C *= 1.0 / (static_cast<double>(n) * h * h);

    return {grid, std::move(C), h, kernel, EstimatorMethod::Binned};
}

CovarianceEstimate expected_estimate_oracle(const model::ProcessSpec& spec,
                                            const KernelSpec& kernel, double h,
                                            const Grid& grid, int quad_points) {
    check_bandwidth(h);
    spec.validate();
    if (quad_points < 16) throw std::invalid_argument("expected_estimate_oracle: quad_points too small");
    const int G = grid.G;
    const int J = spec.truncation_J;
    const int M = quad_points; // panels; M+1 nodes
    const double dq = 1.0 / static_cast<double>(M);

    // E C_hat = (T_h x T_h) C = sum_k lambda_k (T_h phi_k)(s) (T_h phi_k)(t):
    // the double convolution factorizes over the Mercer series, so each mode
    // needs one fine-quadrature convolution.
    Eigen::VectorXd qpts(M + 1), qw(M + 1);
    for (int m = 0; m <= M; ++m) {
        qpts[m] = m * dq;
        qw[m] = (m == 0 || m == M) ? 0.5 * dq : dq;
    }
    const Eigen::MatrixXd phiT = model::basis_matrix(spec, qpts, J).transpose();

    Eigen::MatrixXd U(G, J); // U(g,k) = (T_h phi_{k+1})(s_g)
    Eigen::VectorXd acc(J);
    for (int g = 0; g < G; ++g) {
        const double s = grid.points[g];
        const int lo = std::max(0, static_cast<int>(std::ceil((s - h) * M)));
        const int hi = std::min(M, static_cast<int>(std::floor((s + h) * M)));
        acc.setZero();
        for (int m = lo; m <= hi; ++m) {
            const double k = kernel_eval(kernel, (qpts[m] - s) / h) * qw[m];
            if (k != 0.0) acc += k * phiT.col(m);
        }
        U.row(g) = acc.transpose() / h;
    }

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(G, G);
    for (int k = 0; k < J; ++k) {
        const double lk = model::eigenvalue(spec, k + 1);
        C.selfadjointView<Eigen::Upper>().rankUpdate(U.col(k), lk);
    }
    mirror_upper(C);

    return {grid, std::move(C), h, kernel, EstimatorMethod::Oracle};
}

CovarianceEstimate discretize_true_covariance(const model::ProcessSpec& spec, const Grid& grid) {
    spec.validate();
    const Eigen::MatrixXd phi = model::basis_matrix(spec, grid.points, spec.truncation_J);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(grid.G, grid.G);
    for (int k = 0; k < spec.truncation_J; ++k)
        C.selfadjointView<Eigen::Upper>().rankUpdate(phi.col(k), model::eigenvalue(spec, k + 1));
    mirror_upper(C);
    return {grid, std::move(C), 0.0, KernelSpec::epanechnikov(), EstimatorMethod::Oracle};
}

} // namespace fpca::smoother
