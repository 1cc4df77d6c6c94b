#include "cqte/vec_impl.hpp"

#include <cmath>

namespace cqte::vec {

namespace {

inline double poly_z(const double* coeffs, int nc, double z) {
    double p = coeffs[nc - 1];
    for (int t = nc - 2; t >= 0; --t) p = p * z + coeffs[t];
    return p;
}

void kernel_eval_scalar(const double* u, std::size_t n, double inv_h,
                        const double* coeffs, int nc, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = u[i] * inv_h;
        const double z = t * t;
        out[i] = poly_z(coeffs, nc, z) * std::exp(-0.5 * z) * kInvSqrt2Pi;
    }
}

void product_kernel_row_scalar(const double* const* cols, std::size_t r, std::size_t n,
                               const double* x0, double inv_h,
                               const double* coeffs, int nc, double* out) {
    double norm = 1.0;
    for (std::size_t d = 0; d < r; ++d) norm *= kInvSqrt2Pi;
    for (std::size_t j = 0; j < n; ++j) {
        double sq = 0.0, prod = 1.0;
        for (std::size_t d = 0; d < r; ++d) {
            const double t = (cols[d][j] - x0[d]) * inv_h;
            const double z = t * t;
            sq += z;
            prod *= poly_z(coeffs, nc, z);
        }
        out[j] = prod * std::exp(-0.5 * sq) * norm;
    }
}



double check_loss_sum_scalar(const double* y, const double* u, const double* w,
                             std::size_t n, double a, double b, double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - a - b * u[i];
        s += w[i] * r * (tau - (r < 0.0 ? 1.0 : 0.0));
    }
    return s;
}

} // namespace

const Ops& scalar_ops() {
    static const Ops table{kernel_eval_scalar, product_kernel_row_scalar,
                           check_loss_sum_scalar};
    return table;
}

} // namespace cqte::vec
