#pragma once

#include <cstddef>
#include <string>

namespace cqte::vec {

//! Instruction-set lane for the arithmetic inner loops. The scalar lane is the
//! reference implementation; the AVX2 lane is selected at runtime when the CPU
//! supports AVX2+FMA. Override with CQTE_SIMD=scalar|avx2.
enum class Lane { scalar, avx2 };

Lane active_lane();
const char* lane_name(Lane lane);

//! Function table for one lane. All entries are pure and use a fixed
//! accumulation order, so output depends only on the input arrays.
struct Ops {
    //! out[i] = P(z)·exp(-z/2)/√(2π) with z = (u[i]·inv_h)², P given by `nc`
    //! coefficients in powers of z (the even-polynomial form of a
    //! Gaussian-derived kernel).
    void (*kernel_eval)(const double* u, std::size_t n, double inv_h,
                        const double* coeffs, int nc, double* out);

    //! out[j] = Π_d K((cols[d][j] − x0[d])·inv_h) for an r-dimensional product
    //! kernel over column-major coordinates.
    void (*product_kernel_row)(const double* const* cols, std::size_t r, std::size_t n,
                               const double* x0, double inv_h,
                               const double* coeffs, int nc, double* out);

    //! Σ_i w[i]·ρ_τ(y[i] − a − b·u[i]) with ρ_τ(v) = v·(τ − 1{v<0}).
    double (*check_loss_sum)(const double* y, const double* u, const double* w,
                             std::size_t n, double a, double b, double tau);
};

//! Table of the runtime-selected lane.
const Ops& ops();

//! Table of a specific lane (throws if the lane is unavailable on this CPU).
const Ops& ops_for(Lane lane);

bool lane_available(Lane lane);

} // namespace cqte::vec
