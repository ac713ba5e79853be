#include "fpca/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fpca::theory {

namespace {

double ipow(double base, double expo) { return std::pow(base, expo); }

void check_positive(double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

} // namespace

void RateInputs::validate() const {
    if (n < 1) throw std::invalid_argument("RateInputs: n must be >= 1");
    if (N < 1) throw std::invalid_argument("RateInputs: N must be >= 1");
    check_positive(h, "RateInputs: h");
    if (j < 1) throw std::invalid_argument("RateInputs: j must be >= 1");
    if (!(a > 1.0)) throw std::invalid_argument("RateInputs: a must be > 1");
    check_positive(c, "RateInputs: c");
}

BandwidthResult optimal_bandwidth(long long n, long long N, int m, double a, double c) {
    if (n < 1 || N < 1 || m < 1) throw std::invalid_argument("optimal_bandwidth: n, N, m must be >= 1");
    if (!(a > 1.0)) throw std::invalid_argument("optimal_bandwidth: a must be > 1");
    check_positive(c, "optimal_bandwidth: c");
    const double nN = static_cast<double>(n) * static_cast<double>(N);
    const double md = static_cast<double>(m);
    double h = ipow(nN, -0.2) * ipow(md, (a - 2.0 * c - 2.0) / 5.0) *
               ipow(1.0 + ipow(md, a) / static_cast<double>(N), 0.2);
    bool clamped = false;
    if (h > 0.49) {
        h = 0.49;
        clamped = true;
    }
    return {h, clamped};
}

double rate_bound(const RateInputs& in) {
    in.validate();
    const double n = static_cast<double>(in.n);
    const double N = static_cast<double>(in.N);
    const double j = static_cast<double>(in.j);
    const double ja = ipow(j, in.a);
    const double t1 = (j * j / n) * (1.0 + (ja / N) * (ja / N));
    const double t2 = ja / (n * N * in.h) * (1.0 + ja / N);
    const double t3 = ipow(in.h, 4.0) * ipow(j, 2.0 * in.c + 2.0);
    return t1 + t2 + t3;
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::DenseOptimal: return "dense-optimal";
        case Regime::Dense: return "dense";
        case Regime::Sparse: return "sparse";
    }
    return "?";
}

RegimeResult regime_classify(const RateInputs& in, double dense_const) {
    in.validate();
    check_positive(dense_const, "regime_classify: dense_const");
    const double N = static_cast<double>(in.N);
    const double j = static_cast<double>(in.j);
    const double ja = dense_const * ipow(j, in.a);
    if (N < ja) return {Regime::Sparse, "eq:eig-sparse"};
    const double dense_opt_threshold =
        ipow(static_cast<double>(in.n), 0.25) * ipow(j, in.a + in.c / 2.0 - 2.0);
    if (N >= dense_opt_threshold) return {Regime::DenseOptimal, "eq:eig-dense"};
    return {Regime::Dense, "eq:eig-dense"};
}

int max_index(long long n, double a) {
    if (n < 1) throw std::invalid_argument("max_index: n must be >= 1");
    if (!(a > 1.0)) throw std::invalid_argument("max_index: a must be > 1");
    const double expo = 1.0 / (2.0 * a + 2.0);
    int j = static_cast<int>(std::floor(ipow(static_cast<double>(n), expo)));
    // Guard against floating-point underestimation of exact integer powers.
    while (ipow(static_cast<double>(j + 1), 2.0 * a + 2.0) <=
           static_cast<double>(n) * (1.0 + 1e-12))
        ++j;
    return std::max(1, j);
}

AssumptionReport validate_assumptions(const RateInputs& in, int m, AssumptionSet which,
                                      double threshold) {
    in.validate();
    if (m < 1) throw std::invalid_argument("validate_assumptions: m must be >= 1");
    const double n = static_cast<double>(in.n);
    const double N = static_cast<double>(in.N);
    const double md = static_cast<double>(m);
    const double h = in.h;
    const double a = in.a;
    const double c = in.c;

    AssumptionReport report;
    auto add = [&](std::string name, double value) {
        report.checks.push_back({std::move(name), value, threshold, value <= threshold});
    };

    if (which == AssumptionSet::M1) {
        add("m^(2a+2)/n", ipow(md, 2.0 * a + 2.0) / n);
        add("m^(2a+2)/(n N^2 h^2)", ipow(md, 2.0 * a + 2.0) / (n * N * N * h * h));
        add("h^4 m^(2a+2)", ipow(h, 4.0) * ipow(md, 2.0 * a + 2.0));
        add("h^4 m^(2a+2c)", ipow(h, 4.0) * ipow(md, 2.0 * a + 2.0 * c));
    } else {
        RateInputs at_m = in;
        at_m.j = m;
        const double bound = rate_bound(at_m);
        add("sqrt(n) (m^a + N) * bound(m)", std::sqrt(n) * (ipow(md, a) + N) * bound);
        add("h (m^2c + m^a)", h * (ipow(md, 2.0 * c) + ipow(md, a)));
    }
    report.all_pass = true;
    for (const auto& chk : report.checks) report.all_pass = report.all_pass && chk.pass;
    return report;
}

VarianceComponents variance_components(const model::ProcessSpec& spec, int j, long long n,
                                       long long N, int quad_points) {
    spec.validate();
    if (j < 1) throw std::invalid_argument("variance_components: j must be >= 1");
    const int J = spec.truncation_J;
    const int M = quad_points;

    // c_k = int phi_k^2 phi_j^2 by periodic trapezoid quadrature (spectrally
    // accurate for the Fourier family).
    Eigen::VectorXd qpts(M + 1), qw(M + 1);
    const double dq = 1.0 / static_cast<double>(M);
    for (int m = 0; m <= M; ++m) {
        qpts[m] = m * dq;
        qw[m] = (m == 0 || m == M) ? 0.5 * dq : dq;
    }
    const Eigen::MatrixXd phi = model::basis_matrix(spec, qpts, std::max(j, J));
    const Eigen::ArrayXd phij2 = phi.col(j - 1).array().square() * qw.array();
    Eigen::VectorXd ck(J);
    for (int k = 0; k < J; ++k) ck[k] = (phi.col(k).array().square() * phij2).sum();

    const double lj = model::eigenvalue(spec, j);
    const double sigma2 = spec.noise_sd * spec.noise_sd;

    // Gaussian scores: E xi^4 = 3 lambda^2; E xi_k^2 xi_l^2 = lambda_k lambda_l
    // for k != l and 3 lambda_k^2 for k = l.
    double sum_lc = 0.0;   // sum_k lambda_k c_k
    double sum_l2c2 = 0.0; // sum_k lambda_k^2 c_k^2
    for (int k = 0; k < J; ++k) {
        const double lk = model::eigenvalue(spec, k + 1);
        sum_lc += lk * ck[k];
        sum_l2c2 += lk * lk * ck[k] * ck[k];
    }
    const double cjj = (j <= J) ? ck[j - 1] : 0.0;

    VarianceComponents vc;
    vc.lambda_j = lj;
    vc.n = n;
    vc.N = N;
    vc.e_xi4_over_lambda2 = 3.0;
    // E{xi_j^2 sum_k xi_k^2 c_k} = lambda_j (sum_k lambda_k c_k) + 2 lambda_j^2 c_jj.
    vc.e_xi2_mixed = lj * sum_lc + 2.0 * lj * lj * cjj + lj * sigma2;
    // E{(sum_k xi_k^2 c_k + sigma^2)^2} = (sum lc + sigma^2)^2 + 2 sum l^2 c^2.
    vc.e_mixed_sq = (sum_lc + sigma2) * (sum_lc + sigma2) + 2.0 * sum_l2c2;
    return vc;
}

double sigma_n(const VarianceComponents& vc) {
    if (vc.N < 2) throw std::invalid_argument("sigma_n: N must be >= 2");
    if (vc.n < 1) throw std::invalid_argument("sigma_n: n must be >= 1");
    const double N = static_cast<double>(vc.N);
    const double l2 = vc.lambda_j * vc.lambda_j;
    const double denom = N * (N - 1.0);
    const double term1 = (N - 2.0) * (N - 3.0) / denom * vc.e_xi4_over_lambda2;
    const double term2 = 4.0 * (N - 2.0) / denom * vc.e_xi2_mixed / l2;
    const double term3 = 2.0 / denom * vc.e_mixed_sq / l2;
    return (term1 + term2 + term3 - 1.0) / static_cast<double>(vc.n);
}

double interior_curvature_integral(const model::ProcessSpec& spec, int j, double h) {
    if (!(h >= 0.0 && h < 0.5))
        throw std::invalid_argument("interior_curvature_integral: h must lie in [0, 0.5)");
    const double omega = model::angular_frequency(j);
    // int_h^{1-h} phi'' phi du for sqrt(2) cos(omega u) is
    // -omega^2 [ (1-2h) + (sin(2 omega (1-h)) - sin(2 omega h)) / (2 omega) ];
    // the sine-phase modes flip the sign of the oscillatory part.
    const double osc = (std::sin(2.0 * omega * (1.0 - h)) - std::sin(2.0 * omega * h)) /
                       (2.0 * omega);
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    return -omega * omega * ((1.0 - 2.0 * h) + sign * osc);
}

double eigenvalue_bias(const model::ProcessSpec& spec, const smoother::KernelSpec& kernel,
                       double h, int j, double kappa) {
    if (!(h > 0.0 && h < 0.5))
        throw std::invalid_argument("eigenvalue_bias: h must lie in (0, 0.5)");
    if (!(kappa == 1.0 || kappa == 2.0))
        throw std::invalid_argument("eigenvalue_bias: kappa must be 1 or 2");
    double integral;
    if (spec.basis == model::BasisFamily::Fourier) {
        integral = interior_curvature_integral(spec, j, h);
    } else {
        // Quadrature fallback for future basis families.
        const int M = 4096;
        integral = 0.0;
        const double width = 1.0 - 2.0 * h;
        for (int m = 0; m <= M; ++m) {
            const double u = h + width * m / M;
            const double w = (m == 0 || m == M) ? 0.5 : 1.0;
            integral += w * model::basis_second_derivative(spec, j, u) *
                        model::basis_eval(spec, j, u);
        }
        integral *= width / M;
    }
    return kappa * model::eigenvalue(spec, j) * kernel.sigma_K2 * h * h * integral;
}

double cjk_bound(long long n, long long N, double h, int j, int k, double a, double c) {
    if (j < 1 || k < 1) throw std::invalid_argument("cjk_bound: indices must be >= 1");
    if (k > 2 * j)
        throw std::invalid_argument("cjk_bound: k > 2j; use cjk_tail_bound for the tail sum");
    if (n < 1 || N < 1) throw std::invalid_argument("cjk_bound: n, N must be >= 1");
    if (!(h >= 0.0)) throw std::invalid_argument("cjk_bound: h must be >= 0");
    const double nd = static_cast<double>(n);
    const double Nd = static_cast<double>(N);
    const double ja = ipow(static_cast<double>(j), -a);
    const double ka = ipow(static_cast<double>(k), -a);
    const double var = (ja * ka + (ja + ka) / Nd + 1.0 / (Nd * Nd)) / nd;
    const double bias = ipow(h, 4.0) * ipow(static_cast<double>(k), 2.0 * c - 2.0 * a);
    return var + bias;
}

double cjk_tail_bound(long long n, long long N, double h, int j, double a, double c) {
    if (j < 1) throw std::invalid_argument("cjk_tail_bound: j must be >= 1");
    if (n < 1 || N < 1) throw std::invalid_argument("cjk_tail_bound: n, N must be >= 1");
    check_positive(h, "cjk_tail_bound: h");
    const double nd = static_cast<double>(n);
    const double Nd = static_cast<double>(N);
    const double jd = static_cast<double>(j);
    const double var =
        (ipow(jd, 1.0 - 2.0 * a) + (ipow(jd, -a) / h + ipow(jd, 1.0 - a)) / Nd +
         1.0 / (h * Nd * Nd)) /
        nd;
    const double bias = ipow(h, 4.0) * ipow(jd, 1.0 + 2.0 * c - 2.0 * a);
    return var + bias;
}

LimitingVariance limiting_variance(long long N, double lambda_j, const VarianceComponents& vc,
                                   const RegimeThresholds& thresholds) {
    if (N < 2) throw std::invalid_argument("limiting_variance: N must be >= 2");
    check_positive(lambda_j, "limiting_variance: lambda_j");
    const double Nl = static_cast<double>(N) * lambda_j;
    const double l2 = lambda_j * lambda_j;
    const double base = vc.e_xi4_over_lambda2 - 1.0; // (E xi^4 - lambda^2)/lambda^2

    LimitingVariance out;
    if (Nl > thresholds.large) {
        out.regime = VarianceRegime::NLambdaLarge;
        out.variance = base;
        out.scaling = "sqrt(n)";
    } else if (Nl >= thresholds.small) {
        out.regime = VarianceRegime::NLambdaConstant;
        out.variance = base + 4.0 * vc.e_xi2_mixed / (Nl * lambda_j) +
                       2.0 * vc.e_mixed_sq / (Nl * Nl);
        out.scaling = "sqrt(n)";
    } else {
        out.regime = VarianceRegime::NLambdaSmall;
        const double Nd = static_cast<double>(N);
        out.variance = 2.0 * Nd / (Nd - 1.0) * vc.e_mixed_sq;
        out.scaling = "sqrt(n) N lambda_j";
    }
    (void)l2;
    return out;
}

} // namespace fpca::theory
