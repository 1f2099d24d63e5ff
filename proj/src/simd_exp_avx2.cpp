/**
 * AVX2+FMA implementation of the angular exponential sum.
 *
 * The exponential uses the classic range-reduction + Pade-style rational
 * approximation (the same coefficient set as the widely used cephes exp):
 *
 *   exp(x) = 2^n * exp(r),  r = x - n ln 2,  |r| <= ln(2)/2,
 *   exp(r) = 1 + 2 px / (qx - px),  px = r P(r^2), qx = Q(r^2),
 *
 * accurate to ~2 ulp over the reduced range.  Arguments below -708 flush to
 * zero (the quadrature passes only non-positive exponents, so overflow is
 * not a concern; a defensive clamp at +709 keeps stray positive inputs
 * finite).  This TU is compiled with -mavx2 -mfma and is reached only via
 * runtime dispatch.
 */
#include <immintrin.h>

#include <cstddef>

namespace kinwave::simd::detail {

namespace {

inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two = _mm256_set1_pd(2.0);

    __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
    x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

    // n = round(x / ln 2); r = x - n ln 2 using a split ln 2 for accuracy.
    __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, c1, x);
    r = _mm256_fnmadd_pd(n, c2, r);
    __m256d z = _mm256_mul_pd(r, r);

    __m256d px = _mm256_fmadd_pd(p0, z, p1);
    px = _mm256_fmadd_pd(px, z, p2);
    px = _mm256_mul_pd(px, r);
    __m256d qx = _mm256_fmadd_pd(q0, z, q1);
    qx = _mm256_fmadd_pd(qx, z, q2);
    qx = _mm256_fmadd_pd(qx, z, q3);

    __m256d er = _mm256_add_pd(
        one, _mm256_div_pd(_mm256_mul_pd(two, px), _mm256_sub_pd(qx, px)));

    // Scale by 2^n through the exponent field.
    __m128i ni = _mm256_cvtpd_epi32(n);
    __m256i nl = _mm256_cvtepi32_epi64(ni);
    __m256i pow2 = _mm256_slli_epi64(_mm256_add_epi64(nl, _mm256_set1_epi64x(1023)), 52);
    __m256d result = _mm256_mul_pd(er, _mm256_castsi256_pd(pow2));

    return _mm256_andnot_pd(under, result);
}

} // namespace

double angular_exp_sum_avx2(double base, double t, const double *c, std::size_t m) {
    const __m256d vb = _mm256_set1_pd(base);
    const __m256d vt = _mm256_set1_pd(t);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < m; k += 4) {
        __m256d vc = _mm256_loadu_pd(c + k);
        acc = _mm256_add_pd(acc, exp_pd(_mm256_fnmadd_pd(vt, vc, vb)));
    }
    // Horizontal sum in the same (0+1)+(2+3) order as the scalar reference.
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s01 = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    __m128d s23 = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
    return _mm_cvtsd_f64(s01) + _mm_cvtsd_f64(s23);
}

void exp4_avx2(const double *x, double *out) {
    _mm256_storeu_pd(out, exp_pd(_mm256_loadu_pd(x)));
}

} // namespace kinwave::simd::detail
