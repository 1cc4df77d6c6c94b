#include "cqte/quantile_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cqte/vec.hpp"

namespace cqte {

namespace {

constexpr double kWeightFloor = 1e-12;
constexpr std::size_t kNegWeightWindowCap = 5000;

double direct_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                        const Eigen::VectorXd& w, double tau, double a,
                        const Eigen::VectorXd& b) {
    const auto n = y.size();
    if (u.cols() == 1)
        return vec::ops().check_loss_sum(y.data(), u.data(), w.data(),
                                         static_cast<std::size_t>(n), a, b(0), tau);
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y(i) - a - u.row(i).dot(b);
        s += w(i) * r * (tau - (r < 0.0 ? 1.0 : 0.0));
    }
    return s;
}

//! Minimum of G(t) = Σ wᵢ ρ_τ(αᵢ + βᵢ t) over [t0, t1]; G is piecewise linear
//! so the minimum sits at an endpoint or a root of some αᵢ + βᵢ t.
double pl_min_on_segment(const std::vector<double>& alpha, const std::vector<double>& beta,
                         const Eigen::VectorXd& w, double tau, double t0, double t1) {
    const std::size_t m = alpha.size();
    auto eval = [&](double t) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = alpha[i] + beta[i] * t;
            s += w(static_cast<Eigen::Index>(i)) * v * (tau - (v < 0.0 ? 1.0 : 0.0));
        }
        return s;
    };
    std::vector<double> knots;
    knots.reserve(m + 2);
    knots.push_back(t0);
    for (std::size_t i = 0; i < m; ++i) {
        if (beta[i] == 0.0) continue;
        const double t = -alpha[i] / beta[i];
        if (t > t0 && t < t1 && std::isfinite(t)) knots.push_back(t);
    }
    knots.push_back(t1);
    std::sort(knots.begin(), knots.end());
    double g = std::numeric_limits<double>::infinity();
    for (double t : knots) g = std::min(g, eval(t));
    return g;
}

//! Throws when the check-loss objective with signed weights is unbounded
//! below: the recession function g(d) = Σ wᵢ ρ_τ(−zᵢᵀd) must be nonnegative in
//! every direction, tested on the boundary of the max-norm unit square.
void check_recession_1d(const Eigen::VectorXd& u, const Eigen::VectorXd& w, double tau) {
    const std::size_t m = static_cast<std::size_t>(u.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        scale += std::abs(w(static_cast<Eigen::Index>(i))) * (1.0 + std::abs(u(static_cast<Eigen::Index>(i))));
    const double eps = 1e-10 * scale;

    std::vector<double> alpha(m), beta(m);
    // edge db=+1: v = -t - u
    for (std::size_t i = 0; i < m; ++i) { alpha[i] = -u(static_cast<Eigen::Index>(i)); beta[i] = -1.0; }
    double g = pl_min_on_segment(alpha, beta, w, tau, -1.0, 1.0);
    // edge db=-1: v = -t + u
    for (std::size_t i = 0; i < m; ++i) alpha[i] = u(static_cast<Eigen::Index>(i));
    g = std::min(g, pl_min_on_segment(alpha, beta, w, tau, -1.0, 1.0));
    // edge da=+1: v = -1 - u t
    for (std::size_t i = 0; i < m; ++i) { alpha[i] = -1.0; beta[i] = -u(static_cast<Eigen::Index>(i)); }
    g = std::min(g, pl_min_on_segment(alpha, beta, w, tau, -1.0, 1.0));
    // edge da=-1: v = 1 - u t
    for (std::size_t i = 0; i < m; ++i) alpha[i] = 1.0;
    g = std::min(g, pl_min_on_segment(alpha, beta, w, tau, -1.0, 1.0));

    if (g < -eps)
        throw Error("quantile objective is unbounded below (negative kernel weights dominate)");
}

std::size_t comb_count(std::size_t n, std::size_t k, std::size_t cap) {
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return c > static_cast<double>(cap) ? cap + 1 : static_cast<std::size_t>(c);
}

} // namespace

double check_loss(double u, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie strictly in (0,1)");
    return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

namespace detail {

std::pair<double, double> pl_min_1d(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                                    double tau) {
    const Eigen::Index m = values.size();
    if (m == 0) throw Error("empty 1-d quantile problem");
    const double W = weights.sum();
    if (!(W > 0.0)) throw Error("total weight must be positive in the 1-d quantile problem");

    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return values(a) < values(b); });

    const double v0 = values(idx[0]);
    double F = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double r = values(i) - v0;
        F += weights(i) * r * (tau - (r < 0.0 ? 1.0 : 0.0));
    }
    double bestF = F, bestV = v0;
    double wlo = weights(idx[0]);
    for (std::size_t kpos = 1; kpos < idx.size(); ++kpos) {
        const double vk = values(idx[kpos]);
        F += (wlo - tau * W) * (vk - values(idx[kpos - 1]));
        if (F < bestF) {
            bestF = F;
            bestV = vk;
        }
        wlo += weights(idx[kpos]);
    }
    return {bestV, bestF};
}

QrSolution qr_line_sweep(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w, double tau) {
    const Eigen::Index m = y.size();
    bool has_neg = false;
    for (Eigen::Index i = 0; i < m; ++i) has_neg = has_neg || (w(i) < 0.0);
    if (has_neg) check_recession_1d(u, w, tau);

    double bestF = std::numeric_limits<double>::infinity();
    Eigen::Index best_t = 0;
    double best_b = 0.0;

    std::vector<std::pair<double, int>> cross;
    cross.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index t = 0; t < m; ++t) {
        cross.clear();
        for (Eigen::Index j = 0; j < m; ++j) {
            const double s = u(j) - u(t);
            if (s == 0.0) continue;
            const double b = (y(j) - y(t)) / s;
            if (!std::isfinite(b)) continue;
            cross.emplace_back(b, static_cast<int>(j));
        }
        if (cross.empty()) continue;
        std::sort(cross.begin(), cross.end());

        const double b0 = cross.front().first;
        const double a0 = y(t) - b0 * u(t);
        double F = vec::ops().check_loss_sum(y.data(), u.data(), w.data(),
                                             static_cast<std::size_t>(m), a0, b0, tau);
        // Slope of F(b) just right of b0. Only the first sorted crossing has
        // been passed; every other point (exact ties included) still sits on
        // its pre-crossing side and contributes its kink during the walk.
        double slope = 0.0;
        for (std::size_t kpos = 0; kpos < cross.size(); ++kpos) {
            const int j = cross[kpos].second;
            const double s = u(j) - u(t);
            const bool neg = (kpos == 0) ? (s > 0.0) : (s < 0.0);
            slope += w(j) * (tau - (neg ? 1.0 : 0.0)) * (-s);
        }
        if (F < bestF) {
            bestF = F;
            best_t = t;
            best_b = b0;
        }
        for (std::size_t kpos = 1; kpos < cross.size(); ++kpos) {
            const auto& [bk, jk] = cross[kpos];
            F += slope * (bk - cross[kpos - 1].first);
            if (F < bestF) {
                bestF = F;
                best_t = t;
                best_b = bk;
            }
            slope += w(jk) * std::abs(u(jk) - u(t)); // kink takes effect past bk
        }
    }
    if (!std::isfinite(bestF)) throw Error("local fit found no admissible vertex");
    QrSolution sol;
    sol.b = Eigen::VectorXd::Constant(1, best_b);
    sol.a = y(best_t) - best_b * u(best_t);
    return sol;
}

QrSolution qr_simplex(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                      const Eigen::VectorXd& w, double tau) {
    const Eigen::Index m = y.size();
    const Eigen::Index l = u.cols();
    const Eigen::Index p = l + 1;

    Eigen::MatrixXd Z(m, p);
    Z.col(0).setOnes();
    Z.rightCols(l) = u;

    // drop dependent design columns; their coefficients are fixed at zero
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> colqr(Z);
    colqr.setThreshold(1e-10);
    const Eigen::Index rank = colqr.rank();
    std::vector<Eigen::Index> keep;
    if (rank < p) {
        const auto& perm = colqr.colsPermutation().indices();
        for (Eigen::Index t = 0; t < rank; ++t) keep.push_back(perm(t));
        std::sort(keep.begin(), keep.end());
        Eigen::MatrixXd Zr(m, rank);
        for (Eigen::Index t = 0; t < rank; ++t) Zr.col(t) = Z.col(keep[t]);
        Z = std::move(Zr);
    }
    const Eigen::Index pr = Z.cols();
    if (pr == 1) {
        // only the intercept is identified
        auto [c, obj] = pl_min_1d(y, w, tau);
        (void)obj;
        QrSolution sol;
        sol.a = Z(0, 0) == 1.0 ? c : 0.0;
        sol.b = Eigen::VectorXd::Zero(l);
        return sol;
    }

    const double yscale = 1.0 + y.cwiseAbs().maxCoeff();
    const double ztol = 1e-11 * yscale;
    const double wmax = w.maxCoeff();
    const double ctol = 1e-9 * (1.0 + wmax);

    // initial basis: first pr rows of full row rank
    std::vector<Eigen::Index> basis;
    {
        Eigen::MatrixXd acc(pr, pr);
        Eigen::Index got = 0;
        for (Eigen::Index i = 0; i < m && got < pr; ++i) {
            acc.row(got) = Z.row(i);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(acc.topRows(got + 1));
            lu.setThreshold(1e-10);
            if (lu.rank() == got + 1) {
                basis.push_back(i);
                ++got;
            }
        }
        if (got < pr) throw DegenerateWindowError("degenerate local design", w.sum());
    }

    std::vector<char> in_basis(static_cast<std::size_t>(m), 0);
    for (auto i : basis) in_basis[static_cast<std::size_t>(i)] = 1;

    Eigen::MatrixXd ZB(pr, pr);
    Eigen::VectorXd yB(pr), theta(pr), r(m), G(pr), c(pr), d(pr), zd(m);
    const long max_iter = 100 * static_cast<long>(m) + 100;
    int stalls = 0;

    for (long it = 0; it < max_iter; ++it) {
        for (Eigen::Index t = 0; t < pr; ++t) {
            ZB.row(t) = Z.row(basis[static_cast<std::size_t>(t)]);
            yB(t) = y(basis[static_cast<std::size_t>(t)]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(ZB);
        theta = lu.solve(yB);
        r = y - Z * theta;

        // Zero-residual nonbasis points take subgradient coefficient 0, a
        // valid interior choice that keeps exactly-interpolated data optimal.
        G.setZero();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_basis[static_cast<std::size_t>(i)] || std::abs(r(i)) <= ztol) continue;
            const double psi = tau - (r(i) < 0.0 ? 1.0 : 0.0);
            G += w(i) * psi * Z.row(i).transpose();
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> luT(ZB.transpose());
        c = luT.solve(-G);

        // pick leaving variable: worst violation, Bland's smallest index on stalls
        Eigen::Index leave_pos = -1;
        double worst = ctol;
        int sgn = 0;
        for (Eigen::Index t = 0; t < pr; ++t) {
            const double wi = w(basis[static_cast<std::size_t>(t)]);
            const double upper = wi * tau, lower = wi * (tau - 1.0);
            const double vu = c(t) - upper, vl = lower - c(t);
            const double v = std::max(vu, vl);
            if (stalls > static_cast<int>(pr) + 5) {
                if (v > ctol) { leave_pos = t; sgn = (vl > vu) ? +1 : -1; break; }
            } else if (v > worst) {
                worst = v;
                leave_pos = t;
                sgn = (vl > vu) ? +1 : -1;
            }
        }
        if (leave_pos < 0) {
            QrSolution sol;
            sol.a = 0.0;
            sol.b = Eigen::VectorXd::Zero(l);
            Eigen::Index t = 0;
            if (rank < p) {
                for (std::size_t kk = 0; kk < keep.size(); ++kk) {
                    if (keep[kk] == 0) sol.a = theta(static_cast<Eigen::Index>(kk));
                    else sol.b(keep[kk] - 1) = theta(static_cast<Eigen::Index>(kk));
                }
            } else {
                sol.a = theta(0);
                for (t = 0; t < l; ++t) sol.b(t) = theta(t + 1);
            }
            return sol;
        }

        const Eigen::Index leave_idx = basis[static_cast<std::size_t>(leave_pos)];
        Eigen::VectorXd e = Eigen::VectorXd::Zero(pr);
        e(leave_pos) = static_cast<double>(sgn);
        d = lu.solve(e);
        zd = Z * d;

        double slope = sgn * c(leave_pos) +
                       w(leave_idx) * (sgn > 0 ? (1.0 - tau) : tau);
        // crossings t >= 0 where the slope gains weight; zero-residual points
        // contribute their full derivative the moment they leave zero
        struct Step { double t; Eigen::Index i; double add; };
        std::vector<Step> steps;
        steps.reserve(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) {
            if (in_basis[static_cast<std::size_t>(i)] || zd(i) == 0.0) continue;
            if (std::abs(r(i)) <= ztol) {
                const double add =
                    zd(i) > 0.0 ? w(i) * (1.0 - tau) * zd(i) : w(i) * tau * (-zd(i));
                steps.push_back({0.0, i, add});
                continue;
            }
            const double tstep = r(i) / zd(i);
            if (tstep > 0.0 && std::isfinite(tstep))
                steps.push_back({tstep, i, w(i) * std::abs(zd(i))});
        }
        std::sort(steps.begin(), steps.end(), [](const Step& a, const Step& b) {
            return a.t != b.t ? a.t < b.t : a.i < b.i;
        });

        Eigen::Index enter = -1;
        double tstar = 0.0;
        for (const auto& st : steps) {
            slope += st.add;
            if (slope >= 0.0) {
                enter = st.i;
                tstar = st.t;
                break;
            }
        }
        if (enter < 0)
            throw Error("quantile simplex: descent direction unbounded (unexpected for "
                        "nonnegative weights)");

        stalls = (tstar == 0.0) ? stalls + 1 : 0;
        in_basis[static_cast<std::size_t>(leave_idx)] = 0;
        in_basis[static_cast<std::size_t>(enter)] = 1;
        basis[static_cast<std::size_t>(leave_pos)] = enter;
    }
    throw Error("quantile simplex failed to converge");
}

QrSolution qr_bruteforce(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& w, double tau) {
    const Eigen::Index m = y.size();
    const Eigen::Index l = u.cols();
    const Eigen::Index p = l + 1;
    if (m < p) throw DegenerateWindowError("too few points for a basic solution", w.sum());

    const std::size_t combos = comb_count(static_cast<std::size_t>(m), static_cast<std::size_t>(p),
                                          200000000);
    if (combos * static_cast<std::size_t>(m) > 200000000ULL)
        throw Error("exact solve with negative weights exceeds the enumeration budget for l>1");

    Eigen::MatrixXd Z(m, p);
    Z.col(0).setOnes();
    Z.rightCols(l) = u;

    std::vector<Eigen::Index> pick(static_cast<std::size_t>(p));
    std::iota(pick.begin(), pick.end(), 0);
    double bestF = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = Eigen::VectorXd::Zero(p);

    Eigen::MatrixXd ZB(p, p);
    Eigen::VectorXd yB(p);
    for (;;) {
        for (Eigen::Index t = 0; t < p; ++t) {
            ZB.row(t) = Z.row(pick[static_cast<std::size_t>(t)]);
            yB(t) = y(pick[static_cast<std::size_t>(t)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(ZB);
        lu.setThreshold(1e-10);
        if (lu.isInvertible()) {
            const Eigen::VectorXd theta = lu.solve(yB);
            double F = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double r = y(i) - Z.row(i).dot(theta);
                F += w(i) * r * (tau - (r < 0.0 ? 1.0 : 0.0));
            }
            if (F < bestF) {
                bestF = F;
                best_theta = theta;
            }
        }
        // next combination
        Eigen::Index t = p - 1;
        while (t >= 0 && pick[static_cast<std::size_t>(t)] == m - p + t) --t;
        if (t < 0) break;
        ++pick[static_cast<std::size_t>(t)];
        for (Eigen::Index q = t + 1; q < p; ++q)
            pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
    }
    if (!std::isfinite(bestF)) throw DegenerateWindowError("all basic solutions singular", w.sum());
    QrSolution sol;
    sol.a = best_theta(0);
    sol.b = best_theta.tail(l);
    return sol;
}

} // namespace detail

double weighted_quantile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                         double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie strictly in (0,1)");
    if (values.size() != weights.size()) throw ConfigError("values/weights length mismatch");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (weights(i) < 0.0) throw ConfigError("weighted_quantile requires nonnegative weights");
    if (!(weights.sum() > 0.0)) throw Error("all weights zero in weighted_quantile");
    return detail::pl_min_1d(values, weights, tau).first;
}

LocalFit local_linear_qr(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& w, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie strictly in (0,1)");
    const Eigen::Index n = y.size();
    const Eigen::Index l = u.cols();
    if (u.rows() != n || w.size() != n) throw ConfigError("local_linear_qr: shape mismatch");

    const double eff = w.sum();

    std::vector<Eigen::Index> used;
    used.reserve(static_cast<std::size_t>(n));
    Eigen::Index npos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) != 0.0) used.push_back(i);
        if (w(i) > kWeightFloor) ++npos;
    }
    if (npos < l + 1)
        throw DegenerateWindowError(
            "degenerate window: " + std::to_string(npos) + " positively weighted points, need " +
                std::to_string(l + 1),
            eff);

    const Eigen::Index m = static_cast<Eigen::Index>(used.size());
    Eigen::VectorXd ym(m), wm(m);
    Eigen::MatrixXd um(m, l);
    for (Eigen::Index t = 0; t < m; ++t) {
        ym(t) = y(used[static_cast<std::size_t>(t)]);
        wm(t) = w(used[static_cast<std::size_t>(t)]);
        um.row(t) = u.row(used[static_cast<std::size_t>(t)]);
    }

    bool all_same_u = true;
    for (Eigen::Index t = 1; t < m && all_same_u; ++t)
        all_same_u = (um.row(t) == um.row(0));

    detail::QrSolution sol;
    if (all_same_u) {
        auto [cstar, obj] = detail::pl_min_1d(ym, wm, tau);
        (void)obj;
        sol.a = cstar;
        sol.b = Eigen::VectorXd::Zero(l);
    } else {
        bool has_neg = false;
        for (Eigen::Index t = 0; t < m; ++t) has_neg = has_neg || (wm(t) < 0.0);
        if (l == 1) {
            if (has_neg && static_cast<std::size_t>(m) > kNegWeightWindowCap)
                throw Error("exact solve with negative weights limited to windows of " +
                            std::to_string(kNegWeightWindowCap) + " points, got " +
                            std::to_string(m));
            if (!has_neg && m > 4000)
                sol = detail::qr_simplex(ym, um, wm, tau);
            else
                sol = detail::qr_line_sweep(ym, um.col(0), wm, tau);
        } else {
            if (has_neg)
                sol = detail::qr_bruteforce(ym, um, wm, tau);
            else
                sol = detail::qr_simplex(ym, um, wm, tau);
        }
    }

    LocalFit fit;
    fit.a = sol.a;
    fit.b = sol.b;
    fit.eff_weight = eff;
    fit.objective = direct_objective(ym, um, wm, tau, sol.a, sol.b);
    return fit;
}

LocalFit fit_arm(const Dataset& data, const Eigen::VectorXd& phat, Arm arm,
                 const Eigen::VectorXd& x10, double tau, double h, const ProductKernel& kern) {
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    const int l = data.l();
    if (x10.size() != l) throw ConfigError("x10 must have length l");
    if (kern.dim() != l) throw ConfigError("kernel dimension must equal l");
    const int n = data.n();
    if (phat.size() != n) throw ConfigError("phat length mismatch");
    for (int i = 0; i < n; ++i)
        if (!(phat(i) > 0.0 && phat(i) < 1.0))
            throw ConfigError("phat must be trimmed strictly inside (0,1)");

    const auto& order = data.canonical_order();
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(l),
                                          std::vector<double>(static_cast<std::size_t>(n)));
    std::vector<const double*> colptr(static_cast<std::size_t>(l));
    for (int dcol = 0; dcol < l; ++dcol) {
        for (int t = 0; t < n; ++t)
            cols[static_cast<std::size_t>(dcol)][static_cast<std::size_t>(t)] =
                data.x()(order[static_cast<std::size_t>(t)], dcol);
        colptr[static_cast<std::size_t>(dcol)] = cols[static_cast<std::size_t>(dcol)].data();
    }
    std::vector<double> ki(static_cast<std::size_t>(n));
    const auto& coef = kern.base().coeffs();
    vec::ops().product_kernel_row(colptr.data(), static_cast<std::size_t>(l),
                                  static_cast<std::size_t>(n), x10.data(), 1.0 / h, coef.data(),
                                  static_cast<int>(coef.size()), ki.data());

    Eigen::VectorXd yb(n), wb(n);
    Eigen::MatrixXd ub(n, l);
    for (int t = 0; t < n; ++t) {
        const int i = order[static_cast<std::size_t>(t)];
        yb(t) = data.y()(i);
        for (int dcol = 0; dcol < l; ++dcol) ub(t, dcol) = data.x()(i, dcol) - x10(dcol);
        const bool treated = data.d()(i) == 1;
        if (arm == Arm::treated)
            wb(t) = treated ? ki[static_cast<std::size_t>(t)] / phat(i) : 0.0;
        else
            wb(t) = treated ? 0.0 : ki[static_cast<std::size_t>(t)] / (1.0 - phat(i));
    }

    try {
        return local_linear_qr(yb, ub, wb, tau);
    } catch (const DegenerateWindowError& e) {
        std::string where = arm == Arm::treated ? "treated" : "control";
        std::string pt = "(";
        for (int j = 0; j < l; ++j) pt += (j ? "," : "") + std::to_string(x10(j));
        pt += ")";
        throw DegenerateWindowError(std::string(e.what()) + " [arm=" + where + ", x10=" + pt + "]",
                                    e.effWeight());
    }
}

} // namespace cqte
