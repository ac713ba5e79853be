#pragma once

#include <string>
#include <vector>

#include "fpca/kernels.hpp"
#include "fpca/model.hpp"

namespace fpca::theory {

struct RateInputs {
    long long n = 1;
    long long N = 2;
    double h = 0.1;
    int j = 1;
    double a = 2.0;
    double c = 2.0;

    void validate() const;
};

// h_opt(m) = (nN)^(-1/5) m^((a-2c-2)/5) (1 + m^a/N)^(1/5), clamped to
// (0, 0.49].  clamped reports whether the clamp was applied.
struct BandwidthResult {
    double h = 0.0;
    bool clamped = false;
};
BandwidthResult optimal_bandwidth(long long n, long long N, int m, double a, double c);

// Eigenfunction moment bound up to its absolute constant:
// (j^2/n)(1 + (j^a/N)^2) + (j^a/(nNh))(1 + j^a/N) + h^4 j^(2c+2).
double rate_bound(const RateInputs& in);

enum class Regime { DenseOptimal, Dense, Sparse };

std::string regime_name(Regime r);

struct RegimeResult {
    Regime regime = Regime::Dense;
    std::string rate_formula; // matching rate formula id
};

// Sparse when N < Const j^a; DenseOptimal when additionally
// N >= n^(1/4) j^(a+c/2-2); Dense otherwise.  Boundaries are inclusive:
// N = Const j^a is never Sparse.
RegimeResult regime_classify(const RateInputs& in, double dense_const = 1.0);

// Largest eigenfunction index that can be well estimated from n subjects:
// floor(n^(1/(2a+2))), at least 1.
int max_index(long long n, double a);

struct AssumptionCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass = false;
};

enum class AssumptionSet { M1, M2 };

// Evaluates the displayed quantities of M.1 (m^(2a+2)/n, m^(2a+2)/(n N^2 h^2),
// h^4 m^(2a+2), h^4 m^(2a+2c)) or M.2 against a numeric smallness threshold.
AssumptionReport validate_assumptions(const RateInputs& in, int m, AssumptionSet which,
                                      double threshold = 0.1);

// Moment ingredients of the eigenvalue CLT variance, all for one index j.
struct VarianceComponents {
    double e_xi4_over_lambda2 = 3.0; // E xi_j^4 / lambda_j^2
    double e_xi2_mixed = 0.0;        // E{ xi_j^2 (||X phi_j||^2 + sigma_X^2) }
    double e_mixed_sq = 0.0;         // E{ (||X phi_j||^2 + sigma_X^2)^2 }
    double lambda_j = 1.0;
    long long N = 2;
    long long n = 1;
};

// Series-quadrature evaluation of the moment ingredients for the given model
// (closed under Gaussian scores; integrals of phi_k^2 phi_j^2 by quadrature).
VarianceComponents variance_components(const model::ProcessSpec& spec, int j, long long n,
                                       long long N, int quad_points = 2048);

// Finite-N variance of the normalized eigenvalue estimator:
// (1/n) [ (N-2)(N-3)/(N(N-1)) Exi4/l^2 + 4(N-2)/(N(N-1)) Emixed/l^2
//         + 2/(N(N-1)) Esq/l^2 - 1 ].
double sigma_n(const VarianceComponents& vc);

// Smoothing bias of lambda_hat_j:
// kappa * lambda_j * sigma_K^2 * h^2 * int_h^{1-h} phi_j'' phi_j du.
// kappa in {1,2} exposes the constant ambiguity; the integral is analytic for
// the Fourier family and quadrature otherwise.
double eigenvalue_bias(const model::ProcessSpec& spec, const smoother::KernelSpec& kernel,
                       double h, int j, double kappa);

// Analytic interior integral int_h^{1-h} phi_j'' phi_j du for the Fourier
// family; exposed for testing against quadrature.
double interior_curvature_integral(const model::ProcessSpec& spec, int j, double h);

// Single-pair moment bound of the projection <Delta phi_j, phi_k>^2 for
// k <= 2j, up to its absolute constant.  Throws for k > 2j.
double cjk_bound(long long n, long long N, double h, int j, int k, double a, double c);

// Companion tail-sum bound for sum_{k>j} <Delta phi_j, phi_k>^2.
double cjk_tail_bound(long long n, long long N, double h, int j, double a, double c);

enum class VarianceRegime { NLambdaLarge, NLambdaConstant, NLambdaSmall };

struct LimitingVariance {
    VarianceRegime regime = VarianceRegime::NLambdaLarge;
    double variance = 0.0;
    // The NLambdaSmall regime normalizes by sqrt(n) N lambda_j instead of
    // sqrt(n); recorded so reports can annotate the scaling.
    std::string scaling = "sqrt(n)";
};

struct RegimeThresholds {
    double large = 50.0;
    double small = 0.02;
};

// Classifies N lambda_j against thresholds and returns the matching limiting
// variance expression.
LimitingVariance limiting_variance(long long N, double lambda_j, const VarianceComponents& vc,
                                   const RegimeThresholds& thresholds = {});

} // namespace fpca::theory
