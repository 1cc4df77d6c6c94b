#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "cqte/propensity.hpp"
#include "cqte/rng.hpp"
#include "cqte/simulation.hpp"

using namespace cqte;

namespace {

Dataset logistic_index_data(int n, const Eigen::VectorXd& alpha, std::uint64_t seed,
                            bool add_intercept_noise = false) {
    Rng rng(seed);
    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) x(i, j) = rng.normal();
        const double idx = x.row(i) * alpha;
        const double p = 1.0 / (1.0 + std::exp(-idx));
        d(i) = rng.bernoulli(p) ? 1 : 0;
        y(i) = rng.normal() + (add_intercept_noise ? idx : 0.0);
    }
    return Dataset::create(std::move(y), std::move(d), std::move(x), 1);
}

double abs_cos(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

} // namespace

TEST_SUITE("propensity") {

TEST_CASE("logit recovers the generating coefficients at large n") {
    Eigen::VectorXd alpha(2);
    alpha << 1.0, 1.0;
    const Dataset ds = logistic_index_data(100000, alpha, 929);
    const auto [beta, phat] = fit_logit(ds);
    CHECK(beta(0) == doctest::Approx(0.0).epsilon(0.05));
    CHECK(std::abs(beta(0)) < 0.05);
    CHECK(std::abs(beta(1) - 1.0) < 0.05);
    CHECK(std::abs(beta(2) - 1.0) < 0.05);
    for (int i = 0; i < ds.n(); ++i) {
        CHECK(phat(i) > 0.0);
        CHECK(phat(i) < 1.0);
    }
}

TEST_CASE("logit null model: coefficients near zero") {
    Rng rng(31);
    const int n = 10000, k = 2;
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        d(i) = rng.bernoulli(0.5) ? 1 : 0;
        y(i) = rng.normal();
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    const auto [beta, phat] = fit_logit(ds);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(beta(j)) < 0.1);
}

TEST_CASE("logit gradient at solution is small and beats the null") {
    Eigen::VectorXd alpha(2);
    alpha << 0.5, -1.0;
    const Dataset ds = logistic_index_data(2000, alpha, 73);
    const auto [beta, phat] = fit_logit(ds);
    // gradient max-norm below the convergence tolerance
    Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
    double ll = 0.0, ll0 = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
        Eigen::Vector3d z(1.0, ds.x()(i, 0), ds.x()(i, 1));
        const double pi = 1.0 / (1.0 + std::exp(-z.dot(beta)));
        g += (ds.d()(i) - pi) * z;
        ll += ds.d()(i) * std::log(pi) + (1 - ds.d()(i)) * std::log(1 - pi);
        ll0 += std::log(0.5);
    }
    CHECK(g.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(ll >= ll0);
}

TEST_CASE("perfectly separated data raises SeparationError") {
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    Eigen::VectorXi d(4);
    d << 1, 1, 0, 0;
    Eigen::MatrixXd x(4, 2);
    x << 1, 0.3, 2, 0.1, -1, 0.2, -2, 0.4;
    const Dataset ds = Dataset::create(y, d, x, 1);
    CHECK_THROWS_AS(fit_logit(ds), SeparationError);
}

TEST_CASE("rank-deficient design raises SingularError") {
    Rng rng(5);
    const int n = 50;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = 2.0 * x(i, 0); // collinear
        d(i) = rng.bernoulli(0.5) ? 1 : 0;
        y(i) = rng.normal();
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    CHECK_THROWS_AS(fit_logit(ds), SingularError);
}

TEST_CASE("two-point leave-one-out swaps treatments") {
    Eigen::VectorXd y(2);
    y << 5, 6;
    Eigen::VectorXi d(2);
    d << 1, 0;
    Eigen::MatrixXd x(2, 2);
    x << 0.5, 0.5, 0.5, 0.5; // identical covariates
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Eigen::VectorXd phat = nw_propensity(ds, Kernel::gaussian_order(2), 1.0);
    CHECK(phat(0) == doctest::Approx(0.0));
    CHECK(phat(1) == doctest::Approx(1.0));
}

TEST_CASE("constant treatment gives constant phat") {
    // all-treated data is invalid, so place a single control at the window
    // fringe where its kernel weight is negligible but nonzero
    Rng rng(41);
    const int n = 40;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(-0.2, 0.2);
        x(i, 1) = rng.uniform(-0.2, 0.2);
        d(i) = 1;
        y(i) = rng.normal();
    }
    d(n - 1) = 0;
    x(n - 1, 0) = 2.0;
    x(n - 1, 1) = 2.0;
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Eigen::VectorXd phat = nw_propensity(ds, Kernel::gaussian_order(2), 0.5);
    for (int i = 0; i + 1 < n; ++i) CHECK(phat(i) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("five-point configuration against the hand-computed ratio") {
    const int n = 5;
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    Eigen::MatrixXd x(n, 2);
    const double xs[5] = {0.0, 0.1, 0.2, 0.3, 0.4};
    const int ds_[5] = {1, 0, 1, 0, 1};
    for (int i = 0; i < n; ++i) {
        x(i, 0) = xs[i];
        x(i, 1) = 0.0;
        d(i) = ds_[i];
        y(i) = i;
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Kernel k2 = Kernel::gaussian_order(2);
    const double h0 = 0.2;
    const Eigen::VectorXd phat = nw_propensity(ds, k2, h0);
    // brute-force oracle over the explicit leave-one-out ratio
    for (int i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double kx = k2((xs[j] - xs[i]) / h0) * k2(0.0);
            den += kx;
            if (ds_[j] == 1) num += kx;
        }
        CHECK(phat(i) == doctest::Approx(num / den).epsilon(1e-12));
    }
}

TEST_CASE("isolated point reported") {
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    Eigen::VectorXi d(3);
    d << 1, 0, 1;
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 0.1, 0, 1000.0, 0;
    const Dataset ds = Dataset::create(y, d, x, 1);
    CHECK_THROWS_WITH_AS(nw_propensity(ds, Kernel::gaussian_order(2), 0.05),
                         doctest::Contains("isolated"), Error);
}

TEST_CASE("nw propensity stays within [0,1] for order-2 kernels") {
    const Generated g = generate({ModelId::m1, 300, 555});
    const Eigen::VectorXd phat = nw_propensity(g.data, Kernel::gaussian_order(2), 0.3);
    for (int i = 0; i < g.data.n(); ++i) {
        CHECK(phat(i) >= 0.0);
        CHECK(phat(i) <= 1.0);
    }
}

TEST_CASE("sir recovers a noiseless single index") {
    Rng rng(61);
    const int n = 2000, k = 3;
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) x(i, j) = rng.normal();
        d(i) = x(i, 0) > 0.0 ? 1 : 0;
        y(i) = rng.normal();
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Eigen::VectorXd alpha = sir_direction(ds);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(k);
    e1(0) = 1.0;
    CHECK(abs_cos(alpha, e1) > 0.99);
    CHECK(alpha.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sir on the x2-only design finds (0,1)") {
    const Generated g = generate({ModelId::m2, 10000, 17});
    const Eigen::VectorXd alpha = sir_direction(g.data);
    Eigen::VectorXd target(2);
    target << 0.0, 1.0;
    CHECK(abs_cos(alpha, target) > 0.95);
}

TEST_CASE("sir with independent treatment still returns a unit vector") {
    Rng rng(67);
    const int n = 500, k = 2;
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        d(i) = rng.bernoulli(0.5) ? 1 : 0;
        y(i) = rng.normal();
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Eigen::VectorXd alpha = sir_direction(ds); // uninformative but valid
    CHECK(alpha.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("opg saturates to an orthonormal basis at q=k") {
    const Generated g = generate({ModelId::m1, 300, 7});
    const Eigen::MatrixXd alpha = opg_directions(g.data, 2);
    const Eigen::MatrixXd gram = alpha.transpose() * alpha;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("opg agrees with sir on an exact linear single index") {
    Rng rng(83);
    const int n = 2000, k = 3;
    Eigen::VectorXd alpha_true(3);
    alpha_true << 1.0, -0.5, 0.25;
    alpha_true.normalize();
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) x(i, j) = rng.normal();
        d(i) = x.row(i) * alpha_true > 0.0 ? 1 : 0; // deterministic index
        y(i) = rng.normal();
    }
    const Dataset ds = Dataset::create(y, d, x, 1);
    const Eigen::VectorXd a_sir = sir_direction(ds);
    const Eigen::MatrixXd a_opg = opg_directions(ds, 1);
    CHECK(abs_cos(a_sir, a_opg.col(0)) > 0.99);
    CHECK(abs_cos(a_sir, alpha_true) > 0.99);
}

TEST_CASE("opg tracks the model-3 index subspace") {
    // the second index direction carries only a few percent of propensity
    // variation here, so single draws scatter; the median over seeds is the
    // stable summary of estimation quality
    Eigen::MatrixXd target(4, 2);
    const double c = 1.0 / std::sqrt(3.0);
    target << 1, 0, 0, c, 0, c, 0, c;
    const Eigen::MatrixXd qt = Eigen::HouseholderQR<Eigen::MatrixXd>(target)
                                   .householderQ() *
                               Eigen::MatrixXd::Identity(4, 2);
    const Eigen::MatrixXd P2 = qt * qt.transpose();
    std::vector<double> dists;
    for (std::uint64_t seed : {23, 24, 25, 26, 27}) {
        const Generated g = generate({ModelId::m3, 4000, seed});
        const Eigen::MatrixXd alpha = opg_directions(g.data, 2);
        const Eigen::MatrixXd P1 = alpha * alpha.transpose();
        dists.push_back((P1 - P2).norm() / std::sqrt(4.0));
    }
    std::sort(dists.begin(), dists.end());
    CHECK(dists[2] < 0.35); // median
    CHECK(dists[0] < 0.25); // best draws do resolve the subspace
}

TEST_CASE("semiparametric with identity index equals full NW bit for bit") {
    const Generated g = generate({ModelId::m1, 200, 11});
    const Kernel k4 = Kernel::gaussian_order(4);
    const Eigen::VectorXd a = nw_propensity(g.data, k4, 0.4);
    const Eigen::VectorXd b =
        semiparam_propensity(g.data, Eigen::MatrixXd::Identity(2, 2), k4, 0.4);
    for (int i = 0; i < g.data.n(); ++i) CHECK(a(i) == b(i));
}

TEST_CASE("semiparametric propensity is accurate on the single-index design") {
    const Generated g = generate({ModelId::m1, 2000, 301});
    Eigen::MatrixXd alpha(2, 1);
    alpha << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const double h2 = 1.2 * std::pow(2000.0, -1.0 / 3.0);
    const Eigen::VectorXd phat =
        semiparam_propensity(g.data, alpha, Kernel::gaussian_order(2), h2);
    double mean_err = 0.0;
    for (int i = 0; i < g.data.n(); ++i)
        mean_err += std::abs(phat(i) - g.true_propensity(g.data.x().row(i).transpose()));
    mean_err /= g.data.n();
    CHECK(mean_err < 0.05);
}

TEST_CASE("semiparametric propensity of constant treatment is constant") {
    Rng rng(71);
    const int n = 60;
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    Eigen::VectorXi d = Eigen::VectorXi::Zero(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(-1, 1);
        x(i, 1) = rng.uniform(-1, 1);
        y(i) = rng.normal();
    }
    d(0) = 1;
    x(0, 0) = 4.0; // lone treated point at the fringe of the windows
    x(0, 1) = 4.0;
    const Dataset ds = Dataset::create(y, d, x, 1);
    Eigen::MatrixXd alpha(2, 1);
    alpha << 1.0, 0.0;
    const Eigen::VectorXd phat =
        semiparam_propensity(ds, alpha, Kernel::gaussian_order(2), 0.5);
    for (int i = 1; i < n; ++i) CHECK(phat(i) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("alpha orthonormality enforced and produced") {
    const Generated g = generate({ModelId::m3, 500, 3});
    const Eigen::MatrixXd alpha = opg_directions(g.data, 2);
    CHECK((alpha.transpose() * alpha - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-8);
    Eigen::MatrixXd bad(4, 2);
    bad.setOnes();
    CHECK_THROWS_AS(semiparam_propensity(g.data, bad, Kernel::gaussian_order(2), 0.3),
                    ConfigError);
}

TEST_CASE("trim clamps and counts") {
    Eigen::VectorXd p(3);
    p << 0.001, 0.5, 0.999;
    auto [out, count] = trim(p, 0.005, 0.995);
    CHECK(out(0) == 0.005);
    CHECK(out(1) == 0.5);
    CHECK(out(2) == 0.995);
    CHECK(count == 2);

    Eigen::VectorXd interior(3);
    interior << 0.2, 0.5, 0.8;
    auto [out2, count2] = trim(interior, 0.005, 0.995);
    CHECK(count2 == 0);
    for (int i = 0; i < 3; ++i) CHECK(out2(i) == interior(i));

    Eigen::VectorXd boundary(1);
    boundary << 0.005;
    auto [out3, count3] = trim(boundary, 0.005, 0.995);
    CHECK(count3 == 0);
    CHECK(out3(0) == 0.005);

    // idempotence
    auto [once, c1] = trim(p, 0.005, 0.995);
    auto [twice, c2] = trim(once, 0.005, 0.995);
    CHECK(c2 == 0);
    for (int i = 0; i < 3; ++i) CHECK(once(i) == twice(i));

    CHECK_THROWS_AS(trim(p, 0.0, 0.995), ConfigError);
    CHECK_THROWS_AS(trim(p, 0.5, 0.5), ConfigError);
}

} // TEST_SUITE
