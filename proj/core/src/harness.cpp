#include "fpca/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "fpca/parallel.hpp"
#include "fpca/rng.hpp"

namespace fpca::harness {

double resolve_bandwidth(const BandwidthPolicy& policy, long long n, long long N,
                         const model::ProcessSpec& spec) {
    if (const auto* fixed = std::get_if<FixedBandwidth>(&policy)) {
        if (!(fixed->h > 0.0 && fixed->h < 0.5))
            throw std::invalid_argument("fixed bandwidth must lie in (0, 0.5)");
        return fixed->h;
    }
    const auto& cor = std::get<CorollaryOneBandwidth>(policy);
    return theory::optimal_bandwidth(n, N, cor.m, spec.decay_a, spec.freq_c).h;
}

void ExperimentPlan::validate() const {
    spec.validate();
    if (configs.empty()) throw std::invalid_argument("ExperimentPlan: configs must be nonempty");
    if (replicates < 2) throw std::invalid_argument("ExperimentPlan: replicates must be >= 2");
    if (target_indices.empty())
        throw std::invalid_argument("ExperimentPlan: target_indices must be nonempty");
    for (int j : target_indices)
        if (j < 1) throw std::invalid_argument("ExperimentPlan: target indices must be >= 1");
    if (grid_G < 2) throw std::invalid_argument("ExperimentPlan: grid_G must be >= 2");
    if (parallel_width < 1)
        throw std::invalid_argument("ExperimentPlan: parallel_width must be >= 1");
    for (const auto& cfg : configs) {
        if (cfg.n < 1 || cfg.N < 2)
            throw std::invalid_argument("ExperimentPlan: configs need n >= 1, N >= 2");
    }
}

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate agg;
    agg.count = static_cast<int>(xs.size());
    if (xs.empty()) return agg;
    agg.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / agg.count;
    if (agg.count > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - agg.mean) * (x - agg.mean);
        agg.se = std::sqrt(ss / (agg.count - 1)) / std::sqrt(static_cast<double>(agg.count));
    }
    return agg;
}

namespace {

struct ReplicateOutcome {
    bool failed = false;
    std::string error;
    double hs = 0.0;
    bool in_omega = true;
    std::vector<double> mse;     // per target index
    std::vector<double> eig_abs;
    std::vector<double> eig_rel;
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t config_idx, std::uint64_t rep) {
    return rng::Stream(base).substream(config_idx).substream(rep).next_u64();
}

ReplicateOutcome run_one_replicate(const ExperimentPlan& plan, const SampleConfig& cfg,
                                   double h, double eta_m_half, std::uint64_t seed,
                                   const smoother::Grid& grid) {
    ReplicateOutcome out;
    try {
        model::SamplingDesign design{cfg.n, cfg.N, model::SamplingScheme::UniformIID, seed};
        const auto sim = model::simulate(plan.spec, design);
        const long long cost = static_cast<long long>(cfg.n) * cfg.N * cfg.N;
        const smoother::CovarianceEstimate est =
            cost <= plan.exact_path_budget
                ? smoother::estimate_covariance_exact(sim.dataset, plan.kernel, h, grid)
                : smoother::estimate_covariance_binned(sim.dataset, plan.kernel, h, grid);
        spectral::EigenSystem sys = spectral::align_signs(spectral::eigendecompose(est), plan.spec);
        out.hs = spectral::hs_distance_to_true(est, plan.spec);
        out.in_omega = out.hs <= eta_m_half;
        out.mse.reserve(plan.target_indices.size());
        for (int j : plan.target_indices) {
            out.mse.push_back(spectral::l2_error(sys, plan.spec, j));
            const auto err = spectral::eigenvalue_error(sys, plan.spec, j);
            out.eig_abs.push_back(err.absolute);
            out.eig_rel.push_back(err.relative);
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

} // namespace

ExperimentReport run_replicates(const ExperimentPlan& plan) {
    plan.validate();
    const smoother::Grid grid = smoother::Grid::uniform(plan.grid_G);
    const int R = plan.replicates;
    const int m = *std::max_element(plan.target_indices.begin(), plan.target_indices.end());
    const double eta_m_half = 0.5 * spectral::model_eigengap(plan.spec, m);

    ExperimentReport report;
    report.base_seed = plan.base_seed;

    for (std::size_t c = 0; c < plan.configs.size(); ++c) {
        const SampleConfig& cfg = plan.configs[c];
        const double h = resolve_bandwidth(plan.bandwidth, cfg.n, cfg.N, plan.spec);

        std::vector<ReplicateOutcome> outcomes(R);
        detail::parallel_for(plan.parallel_width, R, [&](int r) {
            const std::uint64_t seed = derive_seed(plan.base_seed, c, r);
            outcomes[r] = run_one_replicate(plan, cfg, h, eta_m_half, seed, grid);
        });

        int failed = 0;
        for (const auto& o : outcomes)
            if (o.failed) ++failed;
        report.failed_replicates += failed;
        report.total_replicates += R;
        if (failed > 0)
            report.notes.push_back("config n=" + std::to_string(cfg.n) +
                                   " N=" + std::to_string(cfg.N) + ": " +
                                   std::to_string(failed) + " failed replicates");

        for (std::size_t ji = 0; ji < plan.target_indices.size(); ++ji) {
            const int j = plan.target_indices[ji];
            ConfigIndexReport row;
            row.n = cfg.n;
            row.N = cfg.N;
            row.h = h;
            row.j = j;

            theory::RateInputs inputs{cfg.n, cfg.N, h, j, plan.spec.decay_a, plan.spec.freq_c};
            row.out_of_theory =
                !theory::validate_assumptions(inputs, j, theory::AssumptionSet::M1).all_pass;
            row.rate_bound_value = theory::rate_bound(inputs);

            std::vector<double> mse, mse_omega, eig_abs, eig_rel;
            int omega_excluded = 0;
            for (int r = 0; r < R; ++r) {
                const auto& o = outcomes[r];
                if (o.failed) continue;
                ReplicateRecord rec{o.mse[ji], o.eig_abs[ji], o.eig_rel[ji], o.in_omega};
                row.replicates.push_back(rec);
                mse.push_back(rec.mse);
                eig_abs.push_back(rec.eig_abs_err);
                eig_rel.push_back(rec.eig_rel_err);
                if (o.in_omega) mse_omega.push_back(rec.mse);
                else ++omega_excluded;
            }
            row.mse = aggregate(mse);
            row.mse_omega = aggregate(mse_omega);
            row.eig_abs = aggregate(eig_abs);
            row.eig_rel = aggregate(eig_rel);
            row.omega_excluded_fraction =
                mse.empty() ? 0.0 : static_cast<double>(omega_excluded) / mse.size();
            report.rows.push_back(std::move(row));
        }
    }

    if (report.failed_replicates * 20 > report.total_replicates) {
        throw std::runtime_error("run_replicates: more than 5% of replicates failed (" +
                                 std::to_string(report.failed_replicates) + "/" +
                                 std::to_string(report.total_replicates) + ")");
    }
    return report;
}

SlopeFit fit_rate_exponent(const std::vector<RatePoint>& points) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_rate_exponent: need at least 3 points");
    double xmin = points[0].x, xmax = points[0].x;
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !(p.mse > 0.0))
            throw std::invalid_argument("fit_rate_exponent: x and mse must be positive");
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    if (xmax / xmin < 10.0)
        throw std::invalid_argument("fit_rate_exponent: x values must span at least one decade");

    const std::size_t n = points.size();
    std::vector<double> x(n), y(n), w(n);
    bool have_se = true;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(points[i].x);
        y[i] = std::log(points[i].mse);
        if (points[i].se > 0.0) {
            const double rel = points[i].se / points[i].mse; // delta method on log
            w[i] = 1.0 / (rel * rel);
        } else {
            have_se = false;
        }
    }
    if (!have_se) std::fill(w.begin(), w.end(), 1.0);

    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xbar += w[i] * x[i];
        ybar += w[i] * y[i];
    }
    xbar /= wsum;
    ybar /= wsum;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate_exponent: degenerate abscissae");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    if (have_se) {
        // Weights are inverse variances of log(mse).
        fit.stderr_slope = std::sqrt(1.0 / sxx);
    } else {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double resid = y[i] - ybar - fit.slope * (x[i] - xbar);
            rss += resid * resid;
        }
        const double dof = std::max<std::size_t>(1, n - 2);
        fit.stderr_slope = std::sqrt(rss / dof / sxx);
    }
    fit.ci_lo = fit.slope - 1.96 * fit.stderr_slope;
    fit.ci_hi = fit.slope + 1.96 * fit.stderr_slope;
    return fit;
}

BiasCheckResult bias_check(const BiasCheckConfig& cfg) {
    ExperimentPlan plan;
    plan.spec = cfg.spec;
    plan.configs = {{cfg.n, cfg.N}};
    plan.bandwidth = FixedBandwidth{cfg.h};
    plan.replicates = cfg.replicates;
    plan.target_indices = {cfg.j};
    plan.base_seed = cfg.base_seed;
    plan.parallel_width = cfg.parallel_width;
    plan.grid_G = cfg.grid_G;
    plan.kernel = cfg.kernel;

    const ExperimentReport report = run_replicates(plan);
    const ConfigIndexReport& row = report.rows.at(0);

    BiasCheckResult out;
    out.empirical_bias = row.eig_abs.mean;
    out.se = row.eig_abs.se;
    out.predicted_kappa1 = theory::eigenvalue_bias(cfg.spec, cfg.kernel, cfg.h, cfg.j, 1.0);
    out.predicted_kappa2 = theory::eigenvalue_bias(cfg.spec, cfg.kernel, cfg.h, cfg.j, 2.0);
    if (out.se > 0.0) {
        out.z_kappa1 = (out.empirical_bias - out.predicted_kappa1) / out.se;
        out.z_kappa2 = (out.empirical_bias - out.predicted_kappa2) / out.se;
    }
    const bool k1 = std::abs(out.z_kappa1) <= 2.0;
    const bool k2 = std::abs(out.z_kappa2) <= 2.0;
    out.selected_kappa = (k1 == k2) ? 0 : (k1 ? 1 : 2);
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_distance_to_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_distance_to_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = normal_cdf(sample[i]);
        ks = std::max(ks, std::abs((i + 1) / n - F));
        ks = std::max(ks, std::abs(F - i / n));
    }
    return ks;
}

NormalityResult normality_check(const NormalityConfig& cfg) {
    const double lambda_j = model::eigenvalue(cfg.spec, cfg.j);
    const double bias_rel =
        theory::eigenvalue_bias(cfg.spec, cfg.kernel, cfg.h, cfg.j, cfg.kappa) / lambda_j;

    double sn = cfg.sigma_n_override;
    if (!(sn > 0.0)) {
        const auto vc = theory::variance_components(cfg.spec, cfg.j, cfg.n, cfg.N);
        sn = theory::sigma_n(vc);
    }
    if (!(sn > 0.0)) throw std::runtime_error("normality_check: Sigma_n must be positive");
    const double root_sn = std::sqrt(sn);

    std::vector<double> rel(cfg.replicates);
    if (cfg.source == NormalitySource::NullCalibration) {
        // Exact N(0,1) draws pushed through the same standardization path.
        detail::parallel_for(cfg.parallel_width, cfg.replicates, [&](int r) {
            rng::Stream s =
                rng::Stream(cfg.base_seed).substream(0xca11b4a7eULL).substream(r);
            rel[r] = bias_rel + root_sn * s.next_gaussian();
        });
    } else {
        ExperimentPlan plan;
        plan.spec = cfg.spec;
        plan.configs = {{cfg.n, cfg.N}};
        plan.bandwidth = FixedBandwidth{cfg.h};
        plan.replicates = cfg.replicates;
        plan.target_indices = {cfg.j};
        plan.base_seed = cfg.base_seed;
        plan.parallel_width = cfg.parallel_width;
        plan.grid_G = cfg.grid_G;
        plan.kernel = cfg.kernel;
        const ExperimentReport report = run_replicates(plan);
        const auto& reps = report.rows.at(0).replicates;
        rel.clear();
        rel.reserve(reps.size());
        for (const auto& r : reps) rel.push_back(r.eig_rel_err);
    }

    std::vector<double> z(rel.size());
    for (std::size_t i = 0; i < rel.size(); ++i) z[i] = (rel[i] - bias_rel) / root_sn;

    NormalityResult out;
    out.count = static_cast<int>(z.size());
    out.sigma_n = sn;
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= out.count;
    double m2 = 0.0, m3 = 0.0;
    for (double v : z) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    const double var = m2 / (out.count - 1);
    out.mean = mean;
    out.variance = var;
    out.skewness = (m3 / out.count) / std::pow(m2 / out.count, 1.5);
    out.ks_distance = ks_distance_to_normal(z);
    return out;
}

Eigen::MatrixXd brute_force_covariance(const model::FunctionalDataset& data,
                                       smoother::KernelFamily family, double h,
                                       const Eigen::VectorXd& grid_points) {
    // Deliberately independent of the production estimator: literal loops and
    // inline kernel arithmetic, used only as an oracle on tiny instances.
    const int n = static_cast<int>(data.times.rows());
    const int N = static_cast<int>(data.times.cols());
    const int G = static_cast<int>(grid_points.size());
    if (N < 2) throw std::invalid_argument("brute_force_covariance: N must be >= 2");

    auto kern = [family](double u) -> double {
        if (u < -1.0 || u > 1.0) return 0.0;
        switch (family) {
            case smoother::KernelFamily::Epanechnikov: return 0.75 * (1.0 - u * u);
            case smoother::KernelFamily::Uniform: return 0.5;
            case smoother::KernelFamily::Quartic:
                return 0.9375 * (1.0 - u * u) * (1.0 - u * u);
        }
        return 0.0;
    };

    Eigen::MatrixXd C(G, G);
    for (int gs = 0; gs < G; ++gs) {
        for (int gt = 0; gt < G; ++gt) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                double subject = 0.0;
                for (int j = 0; j < N; ++j) {
                    for (int l = 0; l < N; ++l) {
                        if (j == l) continue;
                        subject += kern((data.times(i, j) - grid_points[gs]) / h) *
                                   kern((data.times(i, l) - grid_points[gt]) / h) *
                                   data.values(i, j) * data.values(i, l);
                    }
                }
                acc += subject / (static_cast<double>(N) * (N - 1));
            }
            C(gs, gt) = acc / (static_cast<double>(n) * h * h);
        }
    }
    return C;
}

SmallInstanceComparison oracle_small_instance(const model::FunctionalDataset& data,
                                              const smoother::KernelSpec& kernel, double h,
                                              const smoother::Grid& grid) {
    const Eigen::MatrixXd oracle =
        brute_force_covariance(data, kernel.family, h, grid.points);
    const auto exact = smoother::estimate_covariance_exact(data, kernel, h, grid);
    const auto binned = smoother::estimate_covariance_binned(data, kernel, h, grid);
    SmallInstanceComparison cmp;
    cmp.max_abs_diff_exact = (exact.matrix - oracle).cwiseAbs().maxCoeff();
    cmp.max_abs_diff_binned = (binned.matrix - oracle).cwiseAbs().maxCoeff();
    return cmp;
}

} // namespace fpca::harness
