#pragma once

#include <Eigen/Core>
#include <vector>

#include "cqte/errors.hpp"

namespace cqte {

//! Univariate Gaussian-derived kernel of even order s: K(u) = P(u²)·φ(u) where
//! the even polynomial P (degree s−2 in u) is fixed by the moment conditions
//! ∫K = 1, ∫uʲK = 0 for 1 ≤ j < s. Order 2 is the Gaussian density itself;
//! higher orders trade nonnegativity for vanishing low moments.
class Kernel {
public:
    //! Build the order-s member of the family. s must be even, 2 ≤ s ≤ 10.
    static Kernel gaussian_order(int s);

    int order() const { return order_; }

    double operator()(double u) const;

    //! K(u/h); unnormalized, the 1/(n·h^l) factors appear explicitly in the
    //! estimators that use it.
    double eval_scaled(double u, double h) const;

    //! ∫K²(u)du (computed once at construction).
    double l2norm() const { return l2norm_; }

    //! ∫uˢK(u)du, the first nonvanishing moment.
    double mu_s() const { return mu_s_; }

    //! ∫uʲK(u)du by composite-Simpson quadrature on [−10,10]; Gaussian tails
    //! beyond that contribute below 1e−20.
    double moment(int j) const;

    //! Coefficients of P in powers of z = u² (length s/2).
    const std::vector<double>& coeffs() const { return coeffs_; }

private:
    Kernel() = default;
    int order_ = 0;
    std::vector<double> coeffs_;
    double l2norm_ = 0.0;
    double mu_s_ = 0.0;
};

//! r-fold product of a univariate kernel; a kernel of the same order on R^r.
class ProductKernel {
public:
    ProductKernel(Kernel base, int dim);

    double operator()(const Eigen::VectorXd& u) const;

    const Kernel& base() const { return base_; }
    int dim() const { return dim_; }

private:
    Kernel base_;
    int dim_;
};

inline Kernel gaussian_order(int s) { return Kernel::gaussian_order(s); }

inline double eval_scaled(const Kernel& kern, double u, double h) {
    return kern.eval_scaled(u, h);
}

inline double kernel_moment(const Kernel& kern, int j) { return kern.moment(j); }

} // namespace cqte
