#include "cqte/propensity.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cqte/vec.hpp"

namespace cqte {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

//! Shared leave-one-out NW core over r-dimensional points given in canonical
//! order; scatters results back to original row positions.
Eigen::VectorXd nw_loo(const Eigen::MatrixXd& pts_canonical, const std::vector<int>& order,
                       const Eigen::VectorXi& d, const Kernel& base, double h) {
    const int n = static_cast<int>(pts_canonical.rows());
    const int r = static_cast<int>(pts_canonical.cols());
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");

    std::vector<std::vector<double>> cols(static_cast<std::size_t>(r),
                                          std::vector<double>(static_cast<std::size_t>(n)));
    std::vector<const double*> colptr(static_cast<std::size_t>(r));
    for (int c = 0; c < r; ++c) {
        for (int t = 0; t < n; ++t)
            cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] = pts_canonical(t, c);
        colptr[static_cast<std::size_t>(c)] = cols[static_cast<std::size_t>(c)].data();
    }

    const auto& coef = base.coeffs();
    Eigen::VectorXd phat(n);
    std::vector<double> kij(static_cast<std::size_t>(n));
    Eigen::VectorXd x0(r);
    for (int t = 0; t < n; ++t) {
        x0 = pts_canonical.row(t);
        vec::ops().product_kernel_row(colptr.data(), static_cast<std::size_t>(r),
                                      static_cast<std::size_t>(n), x0.data(), 1.0 / h,
                                      coef.data(), static_cast<int>(coef.size()), kij.data());
        kij[static_cast<std::size_t>(t)] = 0.0; // leave self out
        double den = 0.0, num = 0.0;
        for (int j = 0; j < n; ++j) {
            den += kij[static_cast<std::size_t>(j)];
            if (d(order[static_cast<std::size_t>(j)]) == 1) num += kij[static_cast<std::size_t>(j)];
        }
        if (std::abs(den) < 1e-12)
            throw Error("isolated point: kernel weight sum vanishes at data row " +
                        std::to_string(order[static_cast<std::size_t>(t)] + 1) +
                        " (bandwidth too small)");
        phat(order[static_cast<std::size_t>(t)]) = num / den;
    }
    return phat;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
}

} // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> fit_logit(const Dataset& data) {
    const int n = data.n();
    const int k = data.k();
    Eigen::MatrixXd Z(n, k + 1);
    Z.col(0).setOnes();
    const auto& order = data.canonical_order();
    for (int t = 0; t < n; ++t) Z.row(t).tail(k) = data.x().row(order[static_cast<std::size_t>(t)]);
    Eigen::VectorXd dv(n);
    for (int t = 0; t < n; ++t) dv(t) = data.d()(order[static_cast<std::size_t>(t)]);

    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
        qr.setThreshold(1e-10);
        if (qr.rank() < k + 1)
            throw SingularError("design matrix [1, X] is rank deficient");
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k + 1);
    auto loglik = [&](const Eigen::VectorXd& b) {
        double ll = 0.0;
        const Eigen::VectorXd eta = Z * b;
        for (int i = 0; i < n; ++i) {
            // log-likelihood in the numerically stable -log(1+exp(.)) form
            const double e = eta(i);
            ll += dv(i) * e - (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
        }
        return ll;
    };

    double ll = loglik(beta);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = Z * beta;
        Eigen::VectorXd pi(n), wdiag(n);
        for (int i = 0; i < n; ++i) {
            pi(i) = logistic(eta(i));
            wdiag(i) = pi(i) * (1.0 - pi(i));
        }
        const Eigen::VectorXd g = Z.transpose() * (dv - pi);
        if (g.cwiseAbs().maxCoeff() < 1e-8) break;
        const Eigen::MatrixXd H = Z.transpose() * wdiag.asDiagonal() * Z;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success)
            throw SingularError("logistic Hessian is singular");
        Eigen::VectorXd step = ldlt.solve(g);
        double scale = 1.0;
        for (int half = 0; half < 30; ++half) {
            const Eigen::VectorXd cand = beta + scale * step;
            const double llc = loglik(cand);
            if (llc >= ll - 1e-12) {
                beta = cand;
                ll = llc;
                break;
            }
            scale *= 0.5;
        }
        if (beta.norm() > 1e4)
            throw SeparationError("perfect separation detected while fitting the logistic model "
                                  "(coefficients diverge)");
    }
    {
        const Eigen::VectorXd eta = Z * beta;
        Eigen::VectorXd pi(n);
        for (int i = 0; i < n; ++i) pi(i) = logistic(eta(i));
        const Eigen::VectorXd g = Z.transpose() * (dv - pi);
        if (g.cwiseAbs().maxCoeff() >= 1e-6)
            throw SeparationError("logistic fit did not converge (separation or near-separation)");
        // With separated classes the gradient also vanishes while the
        // likelihood keeps improving along t*beta: the fitted direction then
        // classifies every observation strictly, which a genuine interior
        // MLE cannot do.
        bool separates = beta.tail(k).cwiseAbs().maxCoeff() > 0.0;
        for (int i = 0; i < n && separates; ++i)
            separates = (dv(i) == 1.0) ? (eta(i) > 0.0) : (eta(i) < 0.0);
        if (separates)
            throw SeparationError("perfect separation detected while fitting the logistic model");
    }

    Eigen::VectorXd phat(n);
    for (int i = 0; i < n; ++i) {
        const double eta = beta(0) + data.x().row(i) * beta.tail(k);
        phat(i) = logistic(eta);
    }
    return {beta, phat};
}

Eigen::VectorXd nw_propensity(const Dataset& data, const Kernel& base, double h0) {
    const int n = data.n();
    const int k = data.k();
    const auto& order = data.canonical_order();
    Eigen::MatrixXd pts(n, k);
    for (int t = 0; t < n; ++t) pts.row(t) = data.x().row(order[static_cast<std::size_t>(t)]);
    return nw_loo(pts, order, data.d(), base, h0);
}

Eigen::VectorXd sir_direction(const Dataset& data) {
    const int n = data.n();
    const int k = data.k();
    if (k < 2) throw ConfigError("sir_direction requires k >= 2");
    const auto& order = data.canonical_order();

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(k);
    for (int t = 0; t < n; ++t) mu += data.x().row(order[static_cast<std::size_t>(t)]).transpose();
    mu /= n;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
    for (int t = 0; t < n; ++t) {
        const Eigen::VectorXd c =
            data.x().row(order[static_cast<std::size_t>(t)]).transpose() - mu;
        S += c * c.transpose();
    }
    S /= (n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
        throw SingularError("sample covariance of X is singular");
    const Eigen::MatrixXd Sinvh = es.operatorInverseSqrt();

    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(k), m1 = Eigen::VectorXd::Zero(k);
    int n0 = 0, n1 = 0;
    for (int t = 0; t < n; ++t) {
        const int i = order[static_cast<std::size_t>(t)];
        const Eigen::VectorXd z = Sinvh * (data.x().row(i).transpose() - mu);
        if (data.d()(i) == 1) {
            m1 += z;
            ++n1;
        } else {
            m0 += z;
            ++n0;
        }
    }
    m0 /= n0;
    m1 /= n1;
    Eigen::MatrixXd M = (static_cast<double>(n0) / n) * m0 * m0.transpose() +
                        (static_cast<double>(n1) / n) * m1 * m1.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esm(M);
    Eigen::VectorXd v = esm.eigenvectors().col(k - 1); // largest eigenvalue
    Eigen::VectorXd alpha = Sinvh * v;
    alpha.normalize();
    fix_sign(alpha);
    return alpha;
}

Eigen::MatrixXd opg_directions(const Dataset& data, int q, double pilot) {
    const int n = data.n();
    const int k = data.k();
    if (q < 1 || q > k) throw ConfigError("opg_directions: need 1 <= q <= k");
    const auto& order = data.canonical_order();

    Eigen::MatrixXd pts(n, k);
    Eigen::VectorXd dv(n);
    for (int t = 0; t < n; ++t) {
        pts.row(t) = data.x().row(order[static_cast<std::size_t>(t)]);
        dv(t) = data.d()(order[static_cast<std::size_t>(t)]);
    }

    // average of local-linear gradient outer products, with Gaussian weights
    // over the supplied (already bandwidth-scaled) coordinates
    const auto gradient_matrix = [&](const Eigen::MatrixXd& zw, int& bad) {
        const int r = static_cast<int>(zw.cols());
        std::vector<std::vector<double>> cols(static_cast<std::size_t>(r),
                                              std::vector<double>(static_cast<std::size_t>(n)));
        std::vector<const double*> colptr(static_cast<std::size_t>(r));
        for (int c = 0; c < r; ++c) {
            for (int t = 0; t < n; ++t)
                cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] = zw(t, c);
            colptr[static_cast<std::size_t>(c)] = cols[static_cast<std::size_t>(c)].data();
        }
        const double gauss_coef[1] = {1.0};
        std::vector<double> wts(static_cast<std::size_t>(n));
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
        Eigen::MatrixXd Zi(n, k + 1);
        Zi.col(0).setOnes();
        Eigen::VectorXd x0(r);
        int ok = 0;
        bad = 0;
        for (int t = 0; t < n; ++t) {
            x0 = zw.row(t);
            vec::ops().product_kernel_row(colptr.data(), static_cast<std::size_t>(r),
                                          static_cast<std::size_t>(n), x0.data(), 1.0,
                                          gauss_coef, 1, wts.data());
            for (int j = 0; j < n; ++j) Zi.row(j).tail(k) = pts.row(j) - pts.row(t);
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k + 1, k + 1);
            Eigen::VectorXd bvec = Eigen::VectorXd::Zero(k + 1);
            for (int j = 0; j < n; ++j) {
                const double wj = wts[static_cast<std::size_t>(j)];
                A.noalias() += wj * Zi.row(j).transpose() * Zi.row(j);
                bvec.noalias() += wj * dv(j) * Zi.row(j).transpose();
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            lu.setThreshold(1e-10);
            if (!lu.isInvertible()) {
                ++bad;
                continue;
            }
            const Eigen::VectorXd th = lu.solve(bvec);
            M.noalias() += th.tail(k) * th.tail(k).transpose();
            ++ok;
        }
        if (ok > 0) M /= ok;
        return M;
    };

    const auto top_q = [&](const Eigen::MatrixXd& M) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        Eigen::MatrixXd a(k, q);
        for (int c = 0; c < q; ++c) a.col(c) = es.eigenvectors().col(k - 1 - c);
        return a;
    };

    Eigen::VectorXd sd(k);
    for (int c = 0; c < k; ++c) {
        const double m = pts.col(c).mean();
        sd(c) = std::sqrt((pts.col(c).array() - m).square().sum() / (n - 1));
        if (sd(c) <= 0.0) sd(c) = 1.0;
    }
    const double scale = pilot > 0.0 ? pilot : std::pow(n, -1.0 / (k + 4));
    Eigen::MatrixXd zw(n, k);
    for (int c = 0; c < k; ++c) zw.col(c) = pts.col(c) / (sd(c) * scale);

    int bad = 0;
    Eigen::MatrixXd alpha = top_q(gradient_matrix(zw, bad));
    if (bad > n / 10)
        throw SingularError("opg_directions: singular local design at " + std::to_string(bad) +
                            " of " + std::to_string(n) +
                            " points; increase the pilot bandwidth");

    // refinement passes: weights from distances in the current index space
    // sharpen the gradients along the directions that matter
    const double rscale = 1.2 * std::pow(n, -1.0 / (q + 4));
    for (int it = 0; it < 4; ++it) {
        const Eigen::MatrixXd idx = pts * alpha;
        Eigen::MatrixXd zr(n, q);
        for (int c = 0; c < q; ++c) {
            const double m = idx.col(c).mean();
            double sdc = std::sqrt((idx.col(c).array() - m).square().sum() / (n - 1));
            if (!(sdc > 1e-12)) sdc = 1.0;
            zr.col(c) = idx.col(c) / (sdc * rscale);
        }
        int bad_r = 0;
        const Eigen::MatrixXd M = gradient_matrix(zr, bad_r);
        if (bad_r > n / 10) break;
        alpha = top_q(M);
    }

    for (int c = 0; c < q; ++c) fix_sign(alpha.col(c));
    return alpha;
}

Eigen::VectorXd semiparam_propensity(const Dataset& data, const Eigen::MatrixXd& alpha,
                                     const Kernel& base, double h2) {
    const int n = data.n();
    if (alpha.rows() != data.k()) throw ConfigError("alpha must have k rows");
    const Eigen::MatrixXd ortho = alpha.transpose() * alpha;
    if ((ortho - Eigen::MatrixXd::Identity(alpha.cols(), alpha.cols())).cwiseAbs().maxCoeff() >
        1e-8)
        throw ConfigError("alpha must have orthonormal columns");
    const auto& order = data.canonical_order();
    Eigen::MatrixXd pts(n, alpha.cols());
    for (int t = 0; t < n; ++t)
        pts.row(t) = data.x().row(order[static_cast<std::size_t>(t)]) * alpha;
    return nw_loo(pts, order, data.d(), base, h2);
}

std::pair<Eigen::VectorXd, int> trim(const Eigen::VectorXd& phat, double lo, double hi) {
    if (!(0.0 < lo && lo < hi && hi < 1.0))
        throw ConfigError("trim bounds must satisfy 0 < lo < hi < 1");
    Eigen::VectorXd out = phat;
    int count = 0;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (out(i) < lo) {
            out(i) = lo;
            ++count;
        } else if (out(i) > hi) {
            out(i) = hi;
            ++count;
        }
    }
    return {out, count};
}

FittedPropensity fit_propensity(const Dataset& data, const PropensitySpec& spec) {
    FittedPropensity fit;
    Eigen::VectorXd raw(data.n());
    if (const auto* oracle = std::get_if<OracleSpec>(&spec.variant)) {
        if (!oracle->p) throw ConfigError("oracle propensity function not set");
        for (int i = 0; i < data.n(); ++i) {
            raw(i) = oracle->p(data.x().row(i).transpose());
            if (!(raw(i) > 0.0 && raw(i) < 1.0))
                throw ConfigError("oracle propensity must map into (0,1)");
        }
    } else if (std::holds_alternative<ParametricSpec>(spec.variant)) {
        auto [beta, phat] = fit_logit(data);
        fit.beta = beta;
        raw = phat;
    } else if (const auto* np = std::get_if<NonparametricSpec>(&spec.variant)) {
        raw = nw_propensity(data, Kernel::gaussian_order(np->kernel_order), np->h0);
    } else {
        const auto& sp = std::get<SemiparametricSpec>(spec.variant);
        Eigen::MatrixXd alpha;
        if (sp.q == 1)
            alpha = sir_direction(data);
        else
            alpha = opg_directions(data, sp.q, sp.opg_pilot);
        fit.alpha = alpha;
        raw = semiparam_propensity(data, alpha, Kernel::gaussian_order(sp.kernel_order), sp.h2);
    }
    auto [clamped, count] = trim(raw, spec.trim.lo, spec.trim.hi);
    fit.phat = std::move(clamped);
    fit.trim_count = count;
    return fit;
}

} // namespace cqte
