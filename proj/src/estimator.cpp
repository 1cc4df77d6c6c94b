#include "cqte/estimator.hpp"

#include <cmath>
#include <vector>

#include "cqte/rng.hpp"
#include "cqte/threads.hpp"
#include "cqte/vec.hpp"

namespace cqte {

TuningGroup TuningGroup::group(int id) {
    if (id == 1) return {0.5, 1.1, 1.2, 0.0, 0.0};
    if (id == 2) return {0.5, 0.9, 1.1, 0.0, 0.0};
    throw ConfigError("unknown tuning group " + std::to_string(id) + " (use 1 or 2)");
}

namespace {

int round_up_even(int s) { return (s % 2 == 0) ? s : s + 1; }

} // namespace

int kernel_order_rule(int k, int l) {
    if (k < 2) throw ConfigError("kernel_order_rule requires k >= 2");
    if (l < 1 || l >= k) throw ConfigError("kernel_order_rule requires 1 <= l < k");
    const int s = k + l + ((k + l) % 2 == 0 ? 1 : 0);
    return round_up_even(s);
}

int index_kernel_order(int q, int l) {
    if (q < 1 || l < 1) throw ConfigError("index_kernel_order requires q >= 1 and l >= 1");
    const int s = q + l + ((q + l) % 2 == 0 ? 1 : 0);
    return round_up_even(s);
}

BandwidthSet bandwidths(int n, int k, int l, int q, int s1, int s, int s2,
                        const TuningGroup& tuning) {
    if (n < 2) throw ConfigError("bandwidths: need n >= 2");
    if (!(tuning.a > 0.0 && tuning.a1 > 0.0 && tuning.b1 > 0.0))
        throw ConfigError("tuning multipliers must be positive");
    const double d1 = l + 2.0 * s1 - tuning.delta;
    const double d0 = k + s + tuning.delta0;
    const double d2 = q + s2 + tuning.delta0;
    if (!(d1 > 0.0 && d0 > 0.0 && d2 > 0.0))
        throw ConfigError("bandwidth exponents must be negative (rule denominators must be "
                          "positive)");
    BandwidthSet bw;
    bw.h = tuning.a * std::pow(n, -1.0 / d1);
    bw.h0 = tuning.a1 * std::pow(n, -1.0 / d0);
    bw.h2 = tuning.b1 * std::pow(n, -1.0 / d2);
    return bw;
}

std::string tag_name(EstimatorTag tag) {
    switch (tag) {
        case EstimatorTag::ocqte: return "ocqte";
        case EstimatorTag::pcqte: return "pcqte";
        case EstimatorTag::ncqte: return "ncqte";
        case EstimatorTag::scqte: return "scqte";
    }
    return "?";
}

EstimatorTag tag_from_name(const std::string& name) {
    if (name == "ocqte") return EstimatorTag::ocqte;
    if (name == "pcqte") return EstimatorTag::pcqte;
    if (name == "ncqte") return EstimatorTag::ncqte;
    if (name == "scqte") return EstimatorTag::scqte;
    throw ConfigError("unknown estimator '" + name + "'");
}

EstimatorTag tag_of(const PropensitySpec& spec) {
    if (std::holds_alternative<OracleSpec>(spec.variant)) return EstimatorTag::ocqte;
    if (std::holds_alternative<ParametricSpec>(spec.variant)) return EstimatorTag::pcqte;
    if (std::holds_alternative<NonparametricSpec>(spec.variant)) return EstimatorTag::ncqte;
    return EstimatorTag::scqte;
}

std::vector<CqteEstimate> estimate(const Dataset& data, const PropensitySpec& spec,
                                   const EvalGrid& grid, const Kernel& kern, double h,
                                   unsigned threads) {
    const FittedPropensity fitted = fit_propensity(data, spec);
    return estimate_with(data, fitted, tag_of(spec), grid, kern, h, threads);
}

std::vector<CqteEstimate> estimate_with(const Dataset& data, const FittedPropensity& fitted,
                                        EstimatorTag tag, const EvalGrid& grid,
                                        const Kernel& kern, double h, unsigned threads) {
    validate_grid(data, grid);
    const ProductKernel pk(kern, data.l());

    const std::size_t npts = grid.points.size();
    const std::size_t ntau = grid.taus.size();
    std::vector<CqteEstimate> out(npts * ntau);
    parallel_for(npts * ntau, threads, [&](std::size_t idx) {
        const auto& x10 = grid.points[idx / ntau];
        const double tau = grid.taus[idx % ntau];
        const LocalFit f1 = fit_arm(data, fitted.phat, Arm::treated, x10, tau, h, pk);
        const LocalFit f0 = fit_arm(data, fitted.phat, Arm::control, x10, tau, h, pk);
        CqteEstimate est;
        est.x10 = x10;
        est.tau = tau;
        est.q1 = f1.a;
        est.q0 = f0.a;
        est.delta = est.q1 - est.q0;
        est.method = tag;
        est.diag = {f1.eff_weight, f0.eff_weight, fitted.trim_count, h, kern.order()};
        out[idx] = std::move(est);
    });
    return out;
}

double plugin_variance(const Dataset& data, const CqteEstimate& fit, const Eigen::VectorXd& phat,
                       const Kernel& kern, double h) {
    const int n = data.n();
    const int l = data.l();
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    if (phat.size() != n) throw ConfigError("phat length mismatch");
    const auto& order = data.canonical_order();

    const ProductKernel pk(kern, l);
    Eigen::VectorXd x10 = fit.x10;
    Eigen::VectorXd ki(n);
    {
        Eigen::VectorXd u(l);
        for (int t = 0; t < n; ++t) {
            const int i = order[static_cast<std::size_t>(t)];
            for (int c = 0; c < l; ++c) u(c) = (data.x()(i, c) - x10(c)) / h;
            ki(t) = pk(u);
        }
    }
    const double hl = std::pow(h, l);
    const double sum_k = ki.sum();
    const double fhat = sum_k / (n * hl);
    if (!(fhat > 1e-12)) throw Error("plug-in variance: X1 density estimate vanished at x10");

    // Per arm: IPW-weighted conditional density at the fitted quantile, and
    // the weighted conditional CDF there. Centering the indicator at that CDF
    // (asymptotically tau by construction of the quantile fit) keeps a
    // degenerate outcome arm from manufacturing variance.
    double fj[2], Fj[2];
    const double qv[2] = {fit.q1, fit.q0};
    for (int arm = 0; arm < 2; ++arm) {
        double num = 0.0, cdf_num = 0.0, cdf_den = 0.0;
        for (int t = 0; t < n; ++t) {
            const int i = order[static_cast<std::size_t>(t)];
            const double wj = arm == 0 ? (data.d()(i) == 1 ? 1.0 / phat(i) : 0.0)
                                       : (data.d()(i) == 0 ? 1.0 / (1.0 - phat(i)) : 0.0);
            if (wj == 0.0) continue;
            num += wj * kern.eval_scaled(data.y()(i) - qv[arm], h) * ki(t);
            cdf_num += wj * (data.y()(i) <= qv[arm] ? 1.0 : 0.0) * ki(t);
            cdf_den += wj * ki(t);
        }
        fj[arm] = num / sum_k / h;
        if (!(fj[arm] > 1e-6))
            throw Error("plug-in variance: conditional density too small at the fitted "
                        "quantile (arm " + std::string(arm == 0 ? "treated" : "control") + ")");
        if (!(cdf_den != 0.0))
            throw Error("plug-in variance: no weighted observations in one arm");
        Fj[arm] = cdf_num / cdf_den;
    }

    double acc = 0.0;
    for (int t = 0; t < n; ++t) {
        const int i = order[static_cast<std::size_t>(t)];
        double phi = 0.0;
        if (data.d()(i) == 1) {
            const double eta1 = ((data.y()(i) <= fit.q1 ? 1.0 : 0.0) - Fj[0]) / fj[0];
            phi = eta1 / phat(i);
        } else {
            const double eta0 = ((data.y()(i) <= fit.q0 ? 1.0 : 0.0) - Fj[1]) / fj[1];
            phi = -eta0 / (1.0 - phat(i));
        }
        acc += phi * phi * ki(t);
    }
    const double sigma2 = acc / (n * hl) / fhat;
    if (!(sigma2 > 0.0)) throw Error("plug-in variance: nonpositive variance estimate");

    const double l2 = std::pow(kern.l2norm(), l);
    return std::sqrt(l2 * sigma2 / (fhat * n * hl));
}

BootstrapResult bootstrap_variance(const Dataset& data, const PropensitySpec& spec,
                                   const Eigen::VectorXd& x10, double tau, const Kernel& kern,
                                   double h, int B, std::uint64_t seed, unsigned threads) {
    if (B < 2) throw ConfigError("bootstrap needs B >= 2");
    const int n = data.n();
    const ProductKernel pk(kern, data.l());

    const FittedPropensity base = fit_propensity(data, spec);
    const LocalFit b1 = fit_arm(data, base.phat, Arm::treated, x10, tau, h, pk);
    const LocalFit b0 = fit_arm(data, base.phat, Arm::control, x10, tau, h, pk);
    const double delta_orig = b1.a - b0.a;

    std::vector<std::optional<double>> reps(static_cast<std::size_t>(B));
    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        Eigen::VectorXd y(n);
        Eigen::VectorXi d(n);
        Eigen::MatrixXd x(n, data.k());
        for (int t = 0; t < n; ++t) {
            const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            y(t) = data.y()(i);
            d(t) = data.d()(i);
            x.row(t) = data.x().row(i);
        }
        try {
            const Dataset resampled = Dataset::create(std::move(y), std::move(d), std::move(x),
                                                      data.l());
            const FittedPropensity fp = fit_propensity(resampled, spec);
            const LocalFit f1 = fit_arm(resampled, fp.phat, Arm::treated, x10, tau, h, pk);
            const LocalFit f0 = fit_arm(resampled, fp.phat, Arm::control, x10, tau, h, pk);
            reps[b] = f1.a - f0.a;
        } catch (const Error&) {
            reps[b] = std::nullopt;
        }
    });

    int failures = 0;
    double ss_orig = 0.0, sum = 0.0;
    int ok = 0;
    for (int b = 0; b < B; ++b) {
        if (!reps[static_cast<std::size_t>(b)]) {
            ++failures;
            continue;
        }
        const double v = *reps[static_cast<std::size_t>(b)];
        ss_orig += (v - delta_orig) * (v - delta_orig);
        sum += v;
        ++ok;
    }
    if (failures * 5 > B)
        throw Error("bootstrap: " + std::to_string(failures) + " of " + std::to_string(B) +
                    " replicates failed (over 20%)");
    if (ok < 2) throw Error("bootstrap: fewer than 2 usable replicates");

    const double mean = sum / ok;
    double ss_mean = 0.0;
    for (int b = 0; b < B; ++b) {
        if (!reps[static_cast<std::size_t>(b)]) continue;
        const double v = *reps[static_cast<std::size_t>(b)];
        ss_mean += (v - mean) * (v - mean);
    }
    BootstrapResult res;
    res.se = std::sqrt(ss_orig / (ok - 1));
    res.se_mean_centered = std::sqrt(ss_mean / (ok - 1));
    res.failures = failures;
    return res;
}

} // namespace cqte
