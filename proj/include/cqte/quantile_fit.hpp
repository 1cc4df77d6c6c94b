#pragma once

#include <Eigen/Core>

#include "cqte/dataset.hpp"
#include "cqte/kernels.hpp"

namespace cqte {

//! Result of one local-linear weighted quantile fit: intercept a estimates the
//! conditional quantile at the centering point, slope b its gradient.
struct LocalFit {
    double a = 0.0;
    Eigen::VectorXd b;
    double objective = 0.0;
    double eff_weight = 0.0; // sum of the combined IPW x kernel weights
};

enum class Arm { treated, control };

//! Check function ρ_τ(u) = u·(τ − 1{u<0}).
double check_loss(double u, double tau);

//! Minimizer of Σ wᵢ ρ_τ(vᵢ − a) over a, for nonnegative weights. When the
//! minimizing set is an interval, returns its left endpoint.
double weighted_quantile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                         double tau);

//! Global minimizer of the weighted check loss Σ wᵢ ρ_τ(yᵢ − a − bᵀuᵢ).
//! Weights may be negative (high-order kernels); the solve is exact in every
//! supported regime:
//!   - l = 1: vertex sweep over the residual-line arrangement (any weight sign,
//!     up to 5000 nonzero-weight points when negatives are present);
//!   - l ≥ 2, w ≥ 0: simplex over (l+1)-point bases;
//!   - l ≥ 2 with negative weights: exhaustive basic solutions, budget-capped.
//! Ties on flat optimal faces are unspecified; the objective value is the
//! contract.
LocalFit local_linear_qr(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& w, double tau);

//! Build the combined weights wᵢ = [Dᵢ/p̂ᵢ or (1−Dᵢ)/(1−p̂ᵢ)]·K((X₁ᵢ−x₁₀)/h)
//! for one arm (the other arm's weights are exactly zero) and run the local
//! fit. phat must already be trimmed strictly inside (0,1).
LocalFit fit_arm(const Dataset& data, const Eigen::VectorXd& phat, Arm arm,
                 const Eigen::VectorXd& x10, double tau, double h, const ProductKernel& kern);

namespace detail {

struct QrSolution {
    double a = 0.0;
    Eigen::VectorXd b;
};

// Individual solver entry points, exposed so tests can target each path.
QrSolution qr_line_sweep(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w, double tau);
QrSolution qr_simplex(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                      const Eigen::VectorXd& w, double tau);
QrSolution qr_bruteforce(const Eigen::VectorXd& y, const Eigen::MatrixXd& u,
                         const Eigen::VectorXd& w, double tau);

// Exact minimizer of the 1-d piecewise-linear quantile objective; weights may
// be signed as long as their sum is positive. Returns (leftmost argmin, value).
std::pair<double, double> pl_min_1d(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                                    double tau);

} // namespace detail

} // namespace cqte
