#include "cqte/kernels.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cqte/vec.hpp"

namespace cqte {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double phi(double u) { return std::exp(-0.5 * u * u) * kInvSqrt2Pi; }

//! (r−1)!! — the r-th moment of the standard normal for even r.
double gaussian_moment(int r) {
    double v = 1.0;
    for (int t = r - 1; t > 1; t -= 2) v *= t;
    return v;
}

template <typename F>
double simpson(F f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace

Kernel Kernel::gaussian_order(int s) {
    if (s < 2 || s > 10 || s % 2 != 0)
        throw ConfigError("kernel order must be even and in [2,10], got " + std::to_string(s));
    const int m = s / 2;
    // Moment system against Gaussian even moments: sum_t c_t M_{2(t+row)} = 1{row=0}.
    Eigen::MatrixXd A(m, m);
    for (int row = 0; row < m; ++row)
        for (int t = 0; t < m; ++t) A(row, t) = gaussian_moment(2 * (row + t));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(0) = 1.0;
    const Eigen::VectorXd c = A.fullPivLu().solve(rhs);

    Kernel k;
    k.order_ = s;
    k.coeffs_.assign(c.data(), c.data() + m);
    k.l2norm_ = simpson([&k](double u) { const double v = k(u); return v * v; }, -10.0, 10.0, 20000);
    k.mu_s_ = k.moment(s);
    return k;
}

double Kernel::operator()(double u) const {
    const double z = u * u;
    double p = coeffs_.back();
    for (int t = static_cast<int>(coeffs_.size()) - 2; t >= 0; --t) p = p * z + coeffs_[t];
    return p * phi(u);
}

double Kernel::eval_scaled(double u, double h) const {
    if (!(h > 0.0)) throw ConfigError("bandwidth must be positive");
    return (*this)(u / h);
}

double Kernel::moment(int j) const {
    if (j < 0) throw ConfigError("kernel moment order must be nonnegative");
    return simpson([this, j](double u) { return std::pow(u, j) * (*this)(u); }, -10.0, 10.0,
                   20000);
}

ProductKernel::ProductKernel(Kernel base, int dim) : base_(std::move(base)), dim_(dim) {
    if (dim < 1) throw ConfigError("product kernel dimension must be >= 1");
}

double ProductKernel::operator()(const Eigen::VectorXd& u) const {
    if (u.size() != dim_) throw ConfigError("product kernel: argument dimension mismatch");
    double v = 1.0;
    for (int d = 0; d < dim_; ++d) v *= base_(u(d));
    return v;
}

} // namespace cqte
