#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cassert>
#include <span>

namespace dail::simd {

float dot_avx2(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= a.size(); i += 8) {
        __m256 va = _mm256_loadu_ps(a.data() + i);
        __m256 vb = _mm256_loadu_ps(b.data() + i);
        acc = _mm256_fmadd_ps(va, vb, acc);
    }
    // horizontal reduce
    __m128 lo = _mm256_castps256_ps128(acc);
    __m128 hi = _mm256_extractf128_ps(acc, 1);
    __m128 sum4 = _mm_add_ps(lo, hi);
    __m128 sum2 = _mm_add_ps(sum4, _mm_movehl_ps(sum4, sum4));
    __m128 sum1 = _mm_add_ss(sum2, _mm_shuffle_ps(sum2, sum2, 0x55));
    float sum = _mm_cvtss_f32(sum1);
    for (; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

float squared_norm_avx2(std::span<const float> a) {
    return dot_avx2(a, a);
}

} // namespace dail::simd

#endif
