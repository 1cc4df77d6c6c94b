#include "cqte/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>

#include "cqte/rng.hpp"
#include "cqte/threads.hpp"

namespace cqte {

ModelId model_from_int(int id) {
    if (id == 1) return ModelId::m1;
    if (id == 2) return ModelId::m2;
    if (id == 3) return ModelId::m3;
    throw ConfigError("model must be 1, 2 or 3");
}

int model_k(ModelId model) { return model == ModelId::m3 ? 4 : 2; }
int model_q(ModelId model) { return model == ModelId::m3 ? 2 : 1; }

Generated generate(const ModelSpec& spec) {
    if (spec.n < 50) throw ConfigError("simulation models need n >= 50");
    const int n = spec.n;
    Rng rng(spec.seed);

    const int k = model_k(spec.id);
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);

    std::function<double(const Eigen::VectorXd&)> pfun;
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    switch (spec.id) {
        case ModelId::m1:
            pfun = [](const Eigen::VectorXd& row) {
                return 1.0 / (1.0 + std::exp(-(row(0) + row(1))));
            };
            break;
        case ModelId::m2:
            pfun = [](const Eigen::VectorXd& row) { return 1.0 / (1.0 + std::exp(-row(1))); };
            break;
        case ModelId::m3:
            pfun = [inv_sqrt3](const Eigen::VectorXd& row) {
                const double idx =
                    row(0) * row(0) + inv_sqrt3 * (row(1) + row(2) + row(3));
                return 1.0 / (1.0 + std::exp(-idx));
            };
            break;
    }

    for (int i = 0; i < n; ++i) {
        const double x1 = rng.uniform(-0.5, 0.5);
        x(i, 0) = x1;
        x(i, 1) = 1.0 + x1 * x1 + rng.normal(0.0, 0.25);
        double y1;
        if (spec.id == ModelId::m3) {
            x(i, 2) = x1 * (1.0 + x1) + rng.normal(0.0, 0.25);
            x(i, 3) = std::exp(-1.0 - x1) + rng.normal(0.0, 0.25);
            y1 = x(i, 0) + x(i, 1) + x(i, 2) + x(i, 3) + std::abs(x1) * rng.normal();
        } else {
            y1 = x(i, 0) + x(i, 1) + std::abs(x1) * rng.normal();
        }
        const double p = pfun(x.row(i).transpose());
        const bool treated = rng.bernoulli(p);
        d(i) = treated ? 1 : 0;
        y(i) = treated ? y1 : 0.0; // Y(0) = 0
    }

    Generated g{Dataset::create(std::move(y), std::move(d), std::move(x), 1), std::move(pfun)};
    return g;
}

double true_delta(ModelId model, double tau, double x1) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie strictly in (0,1)");
    const double base = x1 + 1.0 + x1 * x1;
    if (model == ModelId::m3) {
        const double var = x1 * x1 + 3.0 * 0.0625;
        return base + x1 * (1.0 + x1) + std::exp(-1.0 - x1) +
               normal_quantile(tau) * std::sqrt(var);
    }
    const double var = x1 * x1 + 0.0625;
    return base + normal_quantile(tau) * std::sqrt(var);
}

namespace {

PropensitySpec make_spec(EstimatorTag tag, const Generated& g, ModelId model, int s, int s2,
                         double h0, double h2) {
    PropensitySpec spec;
    switch (tag) {
        case EstimatorTag::ocqte: spec.variant = OracleSpec{g.true_propensity}; break;
        case EstimatorTag::pcqte: spec.variant = ParametricSpec{}; break;
        case EstimatorTag::ncqte: spec.variant = NonparametricSpec{s, h0}; break;
        case EstimatorTag::scqte:
            spec.variant = SemiparametricSpec{model_q(model), s2, h2, 0.0};
            break;
    }
    return spec;
}

} // namespace

std::vector<McCell> monte_carlo(ModelId model, int n, const McOptions& opt) {
    if (opt.reps < 2) throw ConfigError("monte_carlo needs reps >= 2 to report an SD");
    if (opt.estimators.empty()) throw ConfigError("no estimators requested");
    const int k = model_k(model);
    const int l = 1;
    const int q = model_q(model);
    const int s = kernel_order_rule(k, l);
    // The propensity smoothing stages use plain Gaussian kernels with the
    // matching rule exponents; high-order NW weights can push phat outside
    // [0,1], and the resulting trimming blows up the inverse weights.
    const int s_nw = 2;
    const int s_idx = 2;
    const BandwidthSet bw = bandwidths(n, k, l, q, s, s_nw, s_idx, opt.tuning);
    const Kernel kern = Kernel::gaussian_order(s);

    const std::size_t ne = opt.estimators.size();
    const std::size_t np = opt.x1_points.size();
    // slot layout: [rep][estimator][point]
    std::vector<double> vals(static_cast<std::size_t>(opt.reps) * ne * np,
                             std::numeric_limits<double>::quiet_NaN());
    std::vector<char> okflag(vals.size(), 0);

    parallel_for(static_cast<std::size_t>(opt.reps), opt.threads, [&](std::size_t r) {
        const Generated g = generate({model, n, derive_seed(opt.master_seed, r)});
        EvalGrid grid;
        for (double p : opt.x1_points) grid.points.push_back(Eigen::VectorXd::Constant(1, p));
        grid.taus = {opt.tau};
        for (std::size_t e = 0; e < ne; ++e) {
            const PropensitySpec spec =
                make_spec(opt.estimators[e], g, model, s_nw, s_idx, bw.h0, bw.h2);
            FittedPropensity fitted;
            try {
                fitted = fit_propensity(g.data, spec);
            } catch (const Error&) {
                continue; // every point of this estimator fails this rep
            }
            const ProductKernel pk(kern, l);
            for (std::size_t p = 0; p < np; ++p) {
                const std::size_t slot = (r * ne + e) * np + p;
                try {
                    const Eigen::VectorXd x10 =
                        Eigen::VectorXd::Constant(1, opt.x1_points[p]);
                    const LocalFit f1 =
                        fit_arm(g.data, fitted.phat, Arm::treated, x10, opt.tau, bw.h, pk);
                    const LocalFit f0 =
                        fit_arm(g.data, fitted.phat, Arm::control, x10, opt.tau, bw.h, pk);
                    vals[slot] = f1.a - f0.a;
                    okflag[slot] = 1;
                } catch (const Error&) {
                    // excluded from the cell, counted below
                }
            }
        }
    });

    // ordered reduction
    std::vector<McCell> cells;
    std::vector<double> sd_ocqte(np, std::numeric_limits<double>::quiet_NaN());
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t e = 0; e < ne; ++e) {
            const bool is_oracle = opt.estimators[e] == EstimatorTag::ocqte;
            if ((pass == 0) != is_oracle) continue;
            for (std::size_t p = 0; p < np; ++p) {
                double sum = 0.0, sum_err = 0.0, sum_sq_err = 0.0;
                int ok = 0;
                const double truth = true_delta(model, opt.tau, opt.x1_points[p]);
                for (int r = 0; r < opt.reps; ++r) {
                    const std::size_t slot =
                        (static_cast<std::size_t>(r) * ne + e) * np + p;
                    if (!okflag[slot]) continue;
                    const double v = vals[slot];
                    sum += v;
                    sum_err += v - truth;
                    sum_sq_err += (v - truth) * (v - truth);
                    ++ok;
                }
                McCell cell;
                cell.model = model;
                cell.n = n;
                cell.estimator = opt.estimators[e];
                cell.x1 = opt.x1_points[p];
                cell.tau = opt.tau;
                cell.reps = ok;
                cell.failures = opt.reps - ok;
                if (ok >= 2) {
                    const double mean = sum / ok;
                    double ss = 0.0;
                    for (int r = 0; r < opt.reps; ++r) {
                        const std::size_t slot =
                            (static_cast<std::size_t>(r) * ne + e) * np + p;
                        if (!okflag[slot]) continue;
                        ss += (vals[slot] - mean) * (vals[slot] - mean);
                    }
                    cell.bias = sum_err / ok;
                    cell.sd = std::sqrt(ss / (ok - 1));
                    cell.mse = sum_sq_err / ok;
                    if (is_oracle) sd_ocqte[p] = cell.sd;
                    cell.are = cell.sd / sd_ocqte[p];
                } else {
                    cell.bias = cell.sd = cell.mse = cell.are =
                        std::numeric_limits<double>::quiet_NaN();
                }
                cells.push_back(cell);
            }
        }
    }
    // restore caller's estimator order
    std::stable_sort(cells.begin(), cells.end(), [&](const McCell& a, const McCell& b) {
        auto pos = [&](EstimatorTag t) {
            for (std::size_t e = 0; e < ne; ++e)
                if (opt.estimators[e] == t) return e;
            return ne;
        };
        if (pos(a.estimator) != pos(b.estimator)) return pos(a.estimator) < pos(b.estimator);
        return a.x1 < b.x1;
    });
    return cells;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

std::string mc_report_csv(const std::vector<McCell>& cells) {
    std::ostringstream out;
    out << "model,n,estimator,x1,tau,bias,sd,mse,are,reps,failures\n";
    for (const auto& c : cells) {
        out << static_cast<int>(c.model) << ',' << c.n << ',' << tag_name(c.estimator) << ','
            << fmt(c.x1) << ',' << fmt(c.tau) << ',' << fmt(c.bias) << ',' << fmt(c.sd) << ','
            << fmt(c.mse) << ',' << fmt(c.are) << ',' << c.reps << ',' << c.failures << "\n";
    }
    return out.str();
}

} // namespace cqte
