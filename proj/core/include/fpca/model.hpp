#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace fpca::model {

enum class BasisFamily { Fourier };
enum class ScoreLaw { Gaussian };

// Ground-truth generative model: polynomially decaying eigenvalues
// lambda_j = scale_lambda0 * j^-decay_a attached to an orthonormal basis,
// Gaussian scores, and i.i.d. Gaussian measurement noise.
struct ProcessSpec {
    double decay_a = 2.0;       // eigenvalue decay exponent a, must be > 1
    double scale_lambda0 = 1.0; // lambda_j = scale_lambda0 * j^-a
    double freq_c = 2.0;        // frequency exponent c of the basis family
    BasisFamily basis = BasisFamily::Fourier;
    ScoreLaw score_law = ScoreLaw::Gaussian;
    double noise_sd = 0.0;      // sigma_X
    int truncation_J = 50;      // series truncation

    // Throws std::invalid_argument when a field is out of range.
    void validate() const;

    // True when the truncated tail variance sum_{j>J} lambda_j stays below
    // 1e-3 of the total.  The default (a=2, J=50) does not reach that level;
    // callers that need it can raise truncation_J.
    bool tail_variance_ok() const;

    // Stable content digest used for dataset provenance.
    std::string digest() const;
};

enum class SamplingScheme { UniformIID };

struct SamplingDesign {
    int n = 1;  // subjects
    int N = 2;  // observations per subject, >= 2
    SamplingScheme design = SamplingScheme::UniformIID;
    std::uint64_t seed = 0;

    void validate() const;
};

// Observed (time, value) pairs, one row per subject.
struct FunctionalDataset {
    Eigen::MatrixXd times;   // n x N, entries in [0,1]
    Eigen::MatrixXd values;  // n x N
    std::uint64_t seed = 0;
    std::string spec_digest;

    int n() const { return static_cast<int>(times.rows()); }
    int N() const { return static_cast<int>(times.cols()); }
};

using ScoreMatrix = Eigen::MatrixXd; // n x truncation_J

// lambda_j of the spec's eigenvalue law; j is 1-based.
double eigenvalue(const ProcessSpec& spec, int j);

// Orthonormal basis value phi_j(t).  Fourier convention:
// phi_1 = sqrt(2) cos(2 pi t), phi_2 = sqrt(2) sin(2 pi t),
// phi_3 = sqrt(2) cos(4 pi t), ... with angular frequency 2 pi ceil(j/2).
double basis_eval(const ProcessSpec& spec, int j, double t);

// Second derivative phi_j''(t) (analytic for the Fourier family).
double basis_second_derivative(const ProcessSpec& spec, int j, double t);

// Angular frequency omega_j = 2 pi ceil(j/2) of the Fourier mode.
double angular_frequency(int j);

// True covariance sum_{k<=J} lambda_k phi_k(s) phi_k(t).
double true_covariance(const ProcessSpec& spec, double s, double t);

// Evaluates all basis functions 1..J at one point (row) or on a set of
// points; column k-1 holds phi_k.
Eigen::MatrixXd basis_matrix(const ProcessSpec& spec, const Eigen::VectorXd& t, int J);

struct SimulationResult {
    FunctionalDataset dataset;
    ScoreMatrix scores;
};

// Simulates X_ij = sum_k xi_ik phi_k(T_ij) + eps_ij with xi_ik ~ N(0,lambda_k)
// and eps_ij ~ N(0, noise_sd^2).  Subjects use independent substreams of the
// design seed, so output is reproducible and independent of evaluation order.
SimulationResult simulate(const ProcessSpec& spec, const SamplingDesign& design);

// Test hook: identical stream layout to simulate() (times and noise match a
// plain run with the same seed) but the provided scores replace the drawn ones.
SimulationResult simulate_with_scores(const ProcessSpec& spec, const SamplingDesign& design,
                                      const ScoreMatrix& scores);

} // namespace fpca::model
