#include "cqte/vec_impl.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace cqte::vec {

namespace {

// exp(x) for 4 doubles: Cody-Waite range reduction against ln2, degree-13
// Taylor polynomial on |r| <= ln2/2, then 2^n scaling through the exponent
// bits. Inputs are clamped so the bit trick stays in the normal range.
inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);

    x = _mm256_min_pd(x, _mm256_set1_pd(708.0));
    const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
    x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));

    const __m256d n =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    __m256d p = _mm256_set1_pd(1.6059043836821614599e-10); // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868098979e-9));  // 1/12!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441718775e-8));  // 1/11!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985890653e-7));  // 1/10!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985892510e-6));  // 1/9!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587301566e-5));  // 1/8!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841253e-4));  // 1/7!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888889419e-3));  // 1/6!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333332177e-3));  // 1/5!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666664354e-2));  // 1/4!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666665741e-1));  // 1/3!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(5.0e-1));                    // 1/2!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));                       // 1/1!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));                       // 1/0!

    const __m128i ni = _mm256_cvtpd_epi32(n);
    const __m256i nl = _mm256_cvtepi32_epi64(ni);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(nl, _mm256_set1_epi64x(1023)), 52);
    const __m256d scale = _mm256_castsi256_pd(bits);
    __m256d result = _mm256_mul_pd(p, scale);
    return _mm256_andnot_pd(underflow, result);
}

inline __m256d poly_z_pd(const double* coeffs, int nc, __m256d z) {
    __m256d p = _mm256_set1_pd(coeffs[nc - 1]);
    for (int t = nc - 2; t >= 0; --t) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(coeffs[t]));
    return p;
}

inline __m256d kernel_block(__m256d u, __m256d inv_h, const double* coeffs, int nc) {
    const __m256d t = _mm256_mul_pd(u, inv_h);
    const __m256d z = _mm256_mul_pd(t, t);
    const __m256d e = exp_pd(_mm256_mul_pd(z, _mm256_set1_pd(-0.5)));
    return _mm256_mul_pd(_mm256_mul_pd(poly_z_pd(coeffs, nc, z), e),
                         _mm256_set1_pd(kInvSqrt2Pi));
}

void kernel_eval_avx2(const double* u, std::size_t n, double inv_h,
                      const double* coeffs, int nc, double* out) {
    const __m256d vih = _mm256_set1_pd(inv_h);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, kernel_block(_mm256_loadu_pd(u + i), vih, coeffs, nc));
    if (i < n) {
        double buf[4] = {0, 0, 0, 0};
        std::memcpy(buf, u + i, (n - i) * sizeof(double));
        double res[4];
        _mm256_storeu_pd(res, kernel_block(_mm256_loadu_pd(buf), vih, coeffs, nc));
        std::memcpy(out + i, res, (n - i) * sizeof(double));
    }
}

void product_kernel_row_avx2(const double* const* cols, std::size_t r, std::size_t n,
                             const double* x0, double inv_h,
                             const double* coeffs, int nc, double* out) {
    double norm = 1.0;
    for (std::size_t d = 0; d < r; ++d) norm *= kInvSqrt2Pi;
    const __m256d vih = _mm256_set1_pd(inv_h);
    const __m256d vnorm = _mm256_set1_pd(norm);

    auto block = [&](std::size_t j, const double* const* c) {
        __m256d sq = _mm256_setzero_pd();
        __m256d prod = _mm256_set1_pd(1.0);
        for (std::size_t d = 0; d < r; ++d) {
            const __m256d t = _mm256_mul_pd(
                _mm256_sub_pd(_mm256_loadu_pd(c[d] + j), _mm256_set1_pd(x0[d])), vih);
            const __m256d z = _mm256_mul_pd(t, t);
            sq = _mm256_add_pd(sq, z);
            prod = _mm256_mul_pd(prod, poly_z_pd(coeffs, nc, z));
        }
        const __m256d e = exp_pd(_mm256_mul_pd(sq, _mm256_set1_pd(-0.5)));
        return _mm256_mul_pd(_mm256_mul_pd(prod, e), vnorm);
    };

    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) _mm256_storeu_pd(out + j, block(j, cols));
    if (j < n) {
        // pad the ragged tail into temp columns
        double tails[8][4];
        const double* tcols[8];
        for (std::size_t d = 0; d < r && d < 8; ++d) {
            for (std::size_t t = 0; t < 4; ++t)
                tails[d][t] = (j + t < n) ? cols[d][j + t] : x0[d];
            tcols[d] = tails[d];
        }
        if (r <= 8) {
            double res[4];
            __m256d sq = _mm256_setzero_pd();
            __m256d prod = _mm256_set1_pd(1.0);
            for (std::size_t d = 0; d < r; ++d) {
                const __m256d t = _mm256_mul_pd(
                    _mm256_sub_pd(_mm256_loadu_pd(tcols[d]), _mm256_set1_pd(x0[d])), vih);
                const __m256d z = _mm256_mul_pd(t, t);
                sq = _mm256_add_pd(sq, z);
                prod = _mm256_mul_pd(prod, poly_z_pd(coeffs, nc, z));
            }
            const __m256d e = exp_pd(_mm256_mul_pd(sq, _mm256_set1_pd(-0.5)));
            _mm256_storeu_pd(res, _mm256_mul_pd(_mm256_mul_pd(prod, e), vnorm));
            for (std::size_t t = 0; j + t < n; ++t) out[j + t] = res[t];
        } else {
            // wide covariate tails fall back to per-element math
            for (; j < n; ++j) {
                double sq = 0.0, prod = 1.0;
                for (std::size_t d = 0; d < r; ++d) {
                    const double t = (cols[d][j] - x0[d]) * inv_h;
                    const double z = t * t;
                    sq += z;
                    double p = coeffs[nc - 1];
                    for (int c = nc - 2; c >= 0; --c) p = p * z + coeffs[c];
                    prod *= p;
                }
                out[j] = prod * std::exp(-0.5 * sq) * norm;
            }
        }
    }
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}



double check_loss_sum_avx2(const double* y, const double* u, const double* w,
                           std::size_t n, double a, double b, double tau) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vtau = _mm256_set1_pd(tau);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(y + i),
                                        _mm256_fmadd_pd(vb, _mm256_loadu_pd(u + i), va));
        const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(r, zero, _CMP_LT_OQ), one);
        const __m256d psi = _mm256_sub_pd(vtau, neg);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), r), psi, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double r = y[i] - a - b * u[i];
        s += w[i] * r * (tau - (r < 0.0 ? 1.0 : 0.0));
    }
    return s;
}

} // namespace

const Ops& avx2_ops() {
    static const Ops table{kernel_eval_avx2, product_kernel_row_avx2,
                           check_loss_sum_avx2};
    return table;
}

} // namespace cqte::vec

#endif // __x86_64__
