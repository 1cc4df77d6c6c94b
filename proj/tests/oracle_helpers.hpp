#pragma once

// Test-only oracles: plain-loop implementations kept deliberately independent
// of the library's solver and SIMD paths.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace test_oracle {

inline double rho(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

inline double objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& U,
                        const Eigen::VectorXd& w, double tau, double a,
                        const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) s += w(i) * rho(y(i) - a - U.row(i).dot(b), tau);
    return s;
}

//! Exhaustive minimum of the weighted check loss over all interpolating basic
//! solutions (size l+1 subsets) plus flat intercept-only candidates.
inline double best_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& U,
                             const Eigen::VectorXd& w, double tau) {
    const Eigen::Index n = y.size();
    const Eigen::Index l = U.cols();
    const Eigen::Index p = l + 1;
    double best = std::numeric_limits<double>::infinity();

    const Eigen::VectorXd zero_b = Eigen::VectorXd::Zero(l);
    for (Eigen::Index i = 0; i < n; ++i)
        best = std::min(best, objective(y, U, w, tau, y(i), zero_b));

    if (n < p) return best;
    Eigen::MatrixXd Z(n, p);
    Z.col(0).setOnes();
    Z.rightCols(l) = U;

    std::vector<Eigen::Index> pick(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) pick[static_cast<std::size_t>(i)] = i;
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
            best = std::min(best, objective(y, U, w, tau, theta(0), theta.tail(l)));
        }
        Eigen::Index t = p - 1;
        while (t >= 0 && pick[static_cast<std::size_t>(t)] == n - p + t) --t;
        if (t < 0) break;
        ++pick[static_cast<std::size_t>(t)];
        for (Eigen::Index q = t + 1; q < p; ++q)
            pick[static_cast<std::size_t>(q)] = pick[static_cast<std::size_t>(q - 1)] + 1;
    }
    return best;
}

//! Composite Simpson quadrature, independent of the library's version.
template <typename F>
double simpson(F f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace test_oracle
