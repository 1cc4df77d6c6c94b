#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cqte/dataset.hpp"
#include "cqte/kernels.hpp"
#include "cqte/propensity.hpp"
#include "cqte/quantile_fit.hpp"

namespace cqte {

//! Bandwidth-rule multipliers; Group 1 and Group 2 reproduce the baseline
//! tuning constants of the simulation design.
struct TuningGroup {
    double a = 0.5;
    double a1 = 1.1;
    double b1 = 1.2;
    double delta = 0.0;
    double delta0 = 0.0;

    static TuningGroup group(int id);
};

//! Kernel order for the final smoothing stage (and the NW stage over all of
//! X): k + l, pushed up by one when even, then rounded to the next even
//! integer since symmetric kernels satisfy odd moment conditions for free.
int kernel_order_rule(int k, int l);

//! Same rule for the index stage of the semiparametric estimator, with q in
//! place of k.
int index_kernel_order(int q, int l);

struct BandwidthSet {
    double h = 0.0;  // final local-linear stage
    double h0 = 0.0; // NW over X
    double h2 = 0.0; // NW over the estimated index
};

//! Rule-of-thumb bandwidths h = a·n^{-1/(l+2s1-δ)}, h0 = a1·n^{-1/(k+s+δ0)},
//! h2 = b1·n^{-1/(q+s2+δ0)}.
BandwidthSet bandwidths(int n, int k, int l, int q, int s1, int s, int s2,
                        const TuningGroup& tuning);

enum class EstimatorTag { ocqte, pcqte, ncqte, scqte };

std::string tag_name(EstimatorTag tag);
EstimatorTag tag_from_name(const std::string& name);
EstimatorTag tag_of(const PropensitySpec& spec);

struct Diagnostics {
    double eff_w1 = 0.0;
    double eff_w0 = 0.0;
    int trim_count = 0;
    double h = 0.0;
    int kernel_order = 0;
};

struct CqteEstimate {
    Eigen::VectorXd x10;
    double tau = 0.0;
    double q1 = 0.0;
    double q0 = 0.0;
    double delta = 0.0; // always exactly q1 - q0
    std::optional<double> se;
    EstimatorTag method = EstimatorTag::ocqte;
    Diagnostics diag;
};

//! Fit the propensity once, then run both arms' local fits at every
//! (x10, tau) of the grid. All estimator variants share the same final-stage
//! kernel and bandwidth.
std::vector<CqteEstimate> estimate(const Dataset& data, const PropensitySpec& spec,
                                   const EvalGrid& grid, const Kernel& kern, double h,
                                   unsigned threads = 1);

//! Same, with an already-fitted propensity (callers that also need phat for
//! variance estimation fit it once and pass it through).
std::vector<CqteEstimate> estimate_with(const Dataset& data, const FittedPropensity& fitted,
                                        EstimatorTag tag, const EvalGrid& grid,
                                        const Kernel& kern, double h, unsigned threads = 1);

//! Kernel plug-in standard error for one estimate, using the same phat the
//! estimator used.
double plugin_variance(const Dataset& data, const CqteEstimate& fit, const Eigen::VectorXd& phat,
                       const Kernel& kern, double h);

struct BootstrapResult {
    double se = 0.0;               // centered at the original-sample estimate
    double se_mean_centered = 0.0; // centered at the replicate mean
    int failures = 0;
};

//! Nonparametric bootstrap of full rows with per-replicate refit of the
//! propensity and the local fits; deterministic given (seed, B).
BootstrapResult bootstrap_variance(const Dataset& data, const PropensitySpec& spec,
                                   const Eigen::VectorXd& x10, double tau, const Kernel& kern,
                                   double h, int B, std::uint64_t seed, unsigned threads = 1);

} // namespace cqte
