#include <doctest.h>

#include <cmath>

#include "cqte/rng.hpp"
#include "cqte/simulation.hpp"

using namespace cqte;

TEST_SUITE("simulation") {

TEST_CASE("generated moments match the design") {
    const Generated g = generate({ModelId::m1, 100000, 8});
    // E[X2] = 1 + E[X1^2] = 1 + 1/12
    CHECK(g.data.x().col(1).mean() == doctest::Approx(1.0833333).epsilon(0.01));
    CHECK(g.data.x().col(0).mean() == doctest::Approx(0.0).epsilon(0.02));
    // treated outcomes follow Y(1), controls are exactly zero
    for (int i = 0; i < 200; ++i)
        if (g.data.d()(i) == 0) CHECK(g.data.y()(i) == 0.0);
}

TEST_CASE("model 2 treatment nearly uncorrelated with x1") {
    const Generated g = generate({ModelId::m2, 100000, 12});
    const auto& x1 = g.data.x().col(0);
    Eigen::VectorXd d(g.data.n());
    for (int i = 0; i < g.data.n(); ++i) d(i) = g.data.d()(i);
    const double mx = x1.mean(), md = d.mean();
    double cov = 0.0, vx = 0.0, vd = 0.0;
    for (int i = 0; i < g.data.n(); ++i) {
        cov += (x1(i) - mx) * (d(i) - md);
        vx += (x1(i) - mx) * (x1(i) - mx);
        vd += (d(i) - md) * (d(i) - md);
    }
    const double corr = cov / std::sqrt(vx * vd);
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("model 3 covariate construction") {
    const Generated g = generate({ModelId::m3, 50000, 21});
    CHECK(g.data.k() == 4);
    const auto& x = g.data.x();
    // X3 = X1(1+X1) + noise: E[X3] = E[X1^2] = 1/12
    CHECK(x.col(2).mean() == doctest::Approx(1.0 / 12.0).epsilon(0.05));
    // X4 = exp(-1-X1) + noise: E[X4] = e^{-1}E[e^{-X1}] = e^{-1}·(e^{0.5}-e^{-0.5})
    const double expect = std::exp(-1.0) * (std::exp(0.5) - std::exp(-0.5));
    CHECK(x.col(3).mean() == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("generation is deterministic given the seed") {
    const Generated a = generate({ModelId::m3, 500, 77});
    const Generated b = generate({ModelId::m3, 500, 77});
    for (int i = 0; i < a.data.n(); ++i) {
        CHECK(a.data.y()(i) == b.data.y()(i));
        CHECK(a.data.d()(i) == b.data.d()(i));
        for (int j = 0; j < a.data.k(); ++j) CHECK(a.data.x()(i, j) == b.data.x()(i, j));
    }
    const Generated c = generate({ModelId::m3, 500, 78});
    bool any_diff = false;
    for (int i = 0; i < a.data.n() && !any_diff; ++i) any_diff = a.data.y()(i) != c.data.y()(i);
    CHECK(any_diff);
}

TEST_CASE("true delta closed forms") {
    CHECK(true_delta(ModelId::m1, 0.5, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(true_delta(ModelId::m1, 0.5, 0.2) == doctest::Approx(1.24).epsilon(1e-12));
    CHECK(true_delta(ModelId::m3, 0.5, 0.0) ==
          doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-12));
    // nontrivial tau against direct inversion
    const double v = true_delta(ModelId::m2, 0.9, 0.1);
    const double expect = 0.1 + 1.01 + normal_quantile(0.9) * std::sqrt(0.01 + 0.0625);
    CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(true_delta(ModelId::m1, 0.0, 0.0), ConfigError);
}

TEST_CASE("small monte carlo run has the right shape and pairing") {
    McOptions opt;
    opt.reps = 4;
    opt.master_seed = 11;
    opt.threads = 2;
    opt.estimators = {EstimatorTag::ocqte, EstimatorTag::pcqte};
    const auto cells = monte_carlo(ModelId::m1, 120, opt);
    REQUIRE(cells.size() == 6); // 2 estimators x 3 points
    for (const auto& c : cells) {
        CHECK(c.reps + c.failures == 4);
        if (c.estimator == EstimatorTag::ocqte) CHECK(c.are == doctest::Approx(1.0));
        CHECK(c.mse >= c.bias * c.bias - 1e-12);
    }
    CHECK_THROWS_AS(monte_carlo(ModelId::m1, 120, [] {
                        McOptions o;
                        o.reps = 1;
                        return o;
                    }()),
                    ConfigError);
}

TEST_CASE("monte carlo is reproducible and thread-count invariant") {
    McOptions opt;
    opt.reps = 6;
    opt.master_seed = 5;
    opt.estimators = {EstimatorTag::ocqte, EstimatorTag::pcqte};
    opt.threads = 1;
    const auto a = monte_carlo(ModelId::m1, 100, opt);
    opt.threads = 8;
    const auto b = monte_carlo(ModelId::m1, 100, opt);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].bias == b[i].bias);
        CHECK(a[i].sd == b[i].sd);
        CHECK(a[i].mse == b[i].mse);
    }
    CHECK(mc_report_csv(a) == mc_report_csv(b));
}

TEST_CASE("mse identity against bias and sd") {
    McOptions opt;
    opt.reps = 50;
    opt.master_seed = 23;
    opt.estimators = {EstimatorTag::ocqte};
    const auto cells = monte_carlo(ModelId::m1, 150, opt);
    for (const auto& c : cells) {
        if (c.reps < 2) continue;
        const double recon = c.bias * c.bias + c.sd * c.sd * (c.reps - 1.0) / c.reps;
        CHECK(c.mse == doctest::Approx(recon).epsilon(1e-10));
    }
}

TEST_CASE("oracle bias contracts from n=250 to n=1000") {
    McOptions opt;
    opt.reps = 300;
    opt.master_seed = 31;
    opt.estimators = {EstimatorTag::ocqte};
    opt.threads = 2;
    const auto small = monte_carlo(ModelId::m1, 250, opt);
    const auto big = monte_carlo(ModelId::m1, 1000, opt);
    int strict = 0;
    for (std::size_t i = 0; i < small.size(); ++i) {
        if (std::abs(big[i].bias) < std::abs(small[i].bias)) ++strict;
        CHECK(std::abs(big[i].bias) < 1.5 * std::abs(small[i].bias));
    }
    CHECK(strict >= 2); // majority of the three grid points
}

TEST_CASE("csv serialization shape") {
    McOptions opt;
    opt.reps = 3;
    opt.master_seed = 2;
    opt.estimators = {EstimatorTag::ocqte};
    const auto cells = monte_carlo(ModelId::m1, 100, opt);
    const std::string csv = mc_report_csv(cells);
    CHECK(csv.rfind("model,n,estimator,x1,tau,bias,sd,mse,are,reps,failures\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("model spec validation") {
    CHECK_THROWS_AS(generate({ModelId::m1, 10, 1}), ConfigError);
    CHECK(model_from_int(2) == ModelId::m2);
    CHECK_THROWS_AS(model_from_int(4), ConfigError);
}

} // TEST_SUITE
