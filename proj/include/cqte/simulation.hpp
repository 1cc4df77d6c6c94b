#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cqte/dataset.hpp"
#include "cqte/estimator.hpp"

namespace cqte {

enum class ModelId { m1 = 1, m2 = 2, m3 = 3 };

ModelId model_from_int(int id);

struct ModelSpec {
    ModelId id = ModelId::m1;
    int n = 500;
    std::uint64_t seed = 0;
};

struct Generated {
    Dataset data;
    std::function<double(const Eigen::VectorXd&)> true_propensity;
};

//! Draw one sample from the chosen heteroscedastic design (k=2 for models 1-2,
//! k=4 for model 3); deterministic given the seed.
Generated generate(const ModelSpec& spec);

//! Closed-form CQTE at (tau, x1) for each model.
double true_delta(ModelId model, double tau, double x1);

//! Structural index dimension used by the semiparametric estimator.
int model_q(ModelId model);
int model_k(ModelId model);

struct McCell {
    ModelId model;
    int n = 0;
    EstimatorTag estimator;
    double x1 = 0.0;
    double tau = 0.0;
    double bias = 0.0;
    double sd = 0.0;
    double mse = 0.0;
    double are = 0.0; // SD ratio against OCQTE; NaN when OCQTE absent
    int reps = 0;
    int failures = 0;
};

struct McOptions {
    std::vector<EstimatorTag> estimators{EstimatorTag::ocqte, EstimatorTag::pcqte,
                                         EstimatorTag::ncqte, EstimatorTag::scqte};
    std::vector<double> x1_points{-0.2, 0.0, 0.2};
    double tau = 0.5;
    TuningGroup tuning;
    std::uint64_t master_seed = 1;
    int reps = 300;
    unsigned threads = 1;
};

//! Paired Monte Carlo comparison: every estimator sees the identical draw in
//! each replication; per-cell failures are excluded and counted.
std::vector<McCell> monte_carlo(ModelId model, int n, const McOptions& opt);

//! CSV serialization (header model,n,estimator,x1,tau,bias,sd,mse,are,reps,failures).
std::string mc_report_csv(const std::vector<McCell>& cells);

} // namespace cqte
