#include "fpca/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fpca/rng.hpp"

namespace fpca::model {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_index(int j) {
    if (j < 1) throw std::invalid_argument("basis/eigenvalue index j must be >= 1");
}

void check_unit_interval(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0)) {
        std::ostringstream os;
        os << what << " must lie in [0,1], got " << t;
        throw std::invalid_argument(os.str());
    }
}

} // namespace

void ProcessSpec::validate() const {
    if (!(decay_a > 1.0)) throw std::invalid_argument("ProcessSpec: decay_a must be > 1");
    if (!(scale_lambda0 > 0.0)) throw std::invalid_argument("ProcessSpec: scale_lambda0 must be > 0");
    if (!(freq_c > 0.0)) throw std::invalid_argument("ProcessSpec: freq_c must be > 0");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("ProcessSpec: noise_sd must be >= 0");
    if (truncation_J < 1) throw std::invalid_argument("ProcessSpec: truncation_J must be >= 1");
}

bool ProcessSpec::tail_variance_ok() const {
    // Tail sum_{j>J} j^-a bounded between the integral bracket
    // [J+1,inf) <= tail <= [J,inf); the upper bound is the conservative test.
    const double a = decay_a;
    double head = 0.0;
    for (int j = 1; j <= truncation_J; ++j) head += std::pow(static_cast<double>(j), -a);
    const double tail_upper = std::pow(static_cast<double>(truncation_J), 1.0 - a) / (a - 1.0);
    return tail_upper < 1e-3 * (head + tail_upper);
}

std::string ProcessSpec::digest() const {
    std::ostringstream os;
    os.precision(17);
    os << "a=" << decay_a << ";l0=" << scale_lambda0 << ";c=" << freq_c
       << ";basis=" << (basis == BasisFamily::Fourier ? "fourier" : "?")
       << ";scores=" << (score_law == ScoreLaw::Gaussian ? "gaussian" : "?")
       << ";sd=" << noise_sd << ";J=" << truncation_J;
    return os.str();
}

void SamplingDesign::validate() const {
    if (n < 1) throw std::invalid_argument("SamplingDesign: n must be >= 1");
    if (N < 2) throw std::invalid_argument("SamplingDesign: N must be >= 2");
}

double eigenvalue(const ProcessSpec& spec, int j) {
    check_index(j);
    return spec.scale_lambda0 * std::pow(static_cast<double>(j), -spec.decay_a);
}

double angular_frequency(int j) {
    check_index(j);
    return kTwoPi * static_cast<double>((j + 1) / 2);
}

double basis_eval(const ProcessSpec& spec, int j, double t) {
    check_index(j);
    check_unit_interval(t, "basis_eval: t");
    const double w = angular_frequency(j) * t;
    const double root2 = std::numbers::sqrt2;
    return (j % 2 == 1) ? root2 * std::cos(w) : root2 * std::sin(w);
}

double basis_second_derivative(const ProcessSpec& spec, int j, double t) {
    const double omega = angular_frequency(j);
    return -omega * omega * basis_eval(spec, j, t);
}

double true_covariance(const ProcessSpec& spec, double s, double t) {
    check_unit_interval(s, "true_covariance: s");
    check_unit_interval(t, "true_covariance: t");
    double acc = 0.0;
    for (int k = spec.truncation_J; k >= 1; --k)
        acc += eigenvalue(spec, k) * basis_eval(spec, k, s) * basis_eval(spec, k, t);
    return acc;
}

Eigen::MatrixXd basis_matrix(const ProcessSpec& spec, const Eigen::VectorXd& t, int J) {
    if (J < 1) throw std::invalid_argument("basis_matrix: J must be >= 1");
    Eigen::MatrixXd out(t.size(), J);
    const double root2 = std::numbers::sqrt2;
    for (Eigen::Index r = 0; r < t.size(); ++r) {
        check_unit_interval(t[r], "basis_matrix: t");
        // Fourier pairs share a frequency; evaluate cos/sin once per pair.
        for (int q = 1; 2 * q - 1 <= J; ++q) {
            const double w = kTwoPi * static_cast<double>(q) * t[r];
            out(r, 2 * q - 2) = root2 * std::cos(w);
            if (2 * q <= J) out(r, 2 * q - 1) = root2 * std::sin(w);
        }
    }
    return out;
}

namespace {

SimulationResult simulate_impl(const ProcessSpec& spec, const SamplingDesign& design,
                               const ScoreMatrix* forced_scores) {
    spec.validate();
    design.validate();
    if (forced_scores &&
        (forced_scores->rows() != design.n || forced_scores->cols() != spec.truncation_J))
        throw std::invalid_argument("simulate_with_scores: score matrix shape mismatch");

    const int n = design.n;
    const int N = design.N;
    const int J = spec.truncation_J;

    SimulationResult out;
    out.dataset.times.resize(n, N);
    out.dataset.values.resize(n, N);
    out.dataset.seed = design.seed;
    out.dataset.spec_digest = spec.digest();
    out.scores.resize(n, J);

    Eigen::VectorXd sd(J);
    for (int k = 0; k < J; ++k) sd[k] = std::sqrt(eigenvalue(spec, k + 1));

    rng::Stream root(design.seed);
    for (int i = 0; i < n; ++i) {
        rng::Stream s = root.substream(static_cast<std::uint64_t>(i));
        for (int m = 0; m < N; ++m) out.dataset.times(i, m) = s.next_uniform();
        for (int k = 0; k < J; ++k) out.scores(i, k) = sd[k] * s.next_gaussian();
        if (forced_scores) out.scores.row(i) = forced_scores->row(i);
        for (int m = 0; m < N; ++m) {
            const double t = out.dataset.times(i, m);
            double x = 0.0;
            // Chebyshev-style recurrence over the shared frequencies keeps the
            // per-point cost at O(J) with two multiplies per mode.
            const double cd = std::cos(kTwoPi * t);
            const double sdt = std::sin(kTwoPi * t);
            double cq = cd, sq = sdt;
            for (int q = 1; 2 * q - 1 <= J; ++q) {
                if (q > 1) {
                    const double c_next = cq * cd - sq * sdt;
                    const double s_next = sq * cd + cq * sdt;
                    cq = c_next;
                    sq = s_next;
                }
                x += out.scores(i, 2 * q - 2) * cq;
                if (2 * q <= J) x += out.scores(i, 2 * q - 1) * sq;
            }
            x *= std::numbers::sqrt2;
            if (spec.noise_sd > 0.0) x += spec.noise_sd * s.next_gaussian();
            else (void)s.next_gaussian(); // keep the stream layout fixed
            out.dataset.values(i, m) = x;
        }
    }
    return out;
}

} // namespace

SimulationResult simulate(const ProcessSpec& spec, const SamplingDesign& design) {
    return simulate_impl(spec, design, nullptr);
}

SimulationResult simulate_with_scores(const ProcessSpec& spec, const SamplingDesign& design,
                                      const ScoreMatrix& scores) {
    return simulate_impl(spec, design, &scores);
}

} // namespace fpca::model
