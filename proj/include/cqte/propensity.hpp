#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <utility>
#include <variant>

#include "cqte/dataset.hpp"
#include "cqte/kernels.hpp"

namespace cqte {

struct TrimBounds {
    double lo = 0.005;
    double hi = 0.995;
};

//! The propensity is supplied as a known function of the covariate row.
struct OracleSpec {
    std::function<double(const Eigen::VectorXd&)> p;
};

//! Logistic model with intercept, fitted by maximum likelihood.
struct ParametricSpec {};

//! Leave-one-out Nadaraya-Watson regression of D on the full covariate vector.
struct NonparametricSpec {
    int kernel_order = 2;
    double h0 = 0.0;
};

//! Dimension reduction to a k×q index matrix, then leave-one-out NW on the
//! index values. q = 1 uses sliced inverse regression; q >= 2 uses
//! gradient-outer-product directions.
struct SemiparametricSpec {
    int q = 1;
    int kernel_order = 2;
    double h2 = 0.0;
    double opg_pilot = 0.0; // <=0: default n^{-1/(k+4)} per-coordinate scale
};

struct PropensitySpec {
    std::variant<OracleSpec, ParametricSpec, NonparametricSpec, SemiparametricSpec> variant;
    TrimBounds trim;
};

struct FittedPropensity {
    Eigen::VectorXd phat; // trimmed, leave-one-out at sample points
    std::optional<Eigen::VectorXd> beta;
    std::optional<Eigen::MatrixXd> alpha;
    int trim_count = 0;
};

//! Maximum-likelihood logistic fit of D on [1, X] by Newton iteration;
//! converged when the gradient max-norm drops below 1e-8.
std::pair<Eigen::VectorXd, Eigen::VectorXd> fit_logit(const Dataset& data);

//! Leave-one-out NW estimate of p at every sample point, product kernel over
//! all k covariates.
Eigen::VectorXd nw_propensity(const Dataset& data, const Kernel& base, double h0);

//! Single SIR direction for binary D (two slices), unit norm, sign fixed so
//! the largest-magnitude entry is positive.
Eigen::VectorXd sir_direction(const Dataset& data);

//! Top-q eigenvectors of the average outer product of local-linear gradient
//! estimates of D on X. pilot <= 0 selects the default per-coordinate scale
//! sd_j * n^{-1/(k+4)}.
Eigen::MatrixXd opg_directions(const Dataset& data, int q, double pilot = 0.0);

//! Leave-one-out NW of D on the index values alpha^T X (q dimensions).
//! With alpha = I_k this reproduces nw_propensity bit for bit.
Eigen::VectorXd semiparam_propensity(const Dataset& data, const Eigen::MatrixXd& alpha,
                                     const Kernel& base, double h2);

//! Clamp estimated propensities into [lo, hi]; returns the modified count.
std::pair<Eigen::VectorXd, int> trim(const Eigen::VectorXd& phat, double lo, double hi);

//! Fit whichever variant is selected and apply trimming.
FittedPropensity fit_propensity(const Dataset& data, const PropensitySpec& spec);

} // namespace cqte
