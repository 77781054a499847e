#include "dail/simd.hpp"

#include <cassert>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace dail::simd {

float dot_scalar(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    float acc = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

float squared_norm_scalar(std::span<const float> a) {
    float acc = 0.0f;
    for (float v : a) acc += v * v;
    return acc;
}

#if defined(__x86_64__) || defined(_M_X64)
// defined in vecops_avx2.cpp, compiled with -mavx2
float dot_avx2(std::span<const float> a, std::span<const float> b);
float squared_norm_avx2(std::span<const float> a);
#endif

#if defined(__aarch64__)
namespace {

float dot_neon(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= a.size(); i += 4) {
        acc = vfmaq_f32(acc, vld1q_f32(a.data() + i), vld1q_f32(b.data() + i));
    }
    float sum = vaddvq_f32(acc);
    for (; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

float squared_norm_neon(std::span<const float> a) {
    return dot_neon(a, a);
}

} // namespace
#endif

namespace {

using DotFn = float (*)(std::span<const float>, std::span<const float>);
using NormFn = float (*)(std::span<const float>);

struct Kernels {
    DotFn dot = dot_scalar;
    NormFn norm = squared_norm_scalar;
    const char* name = "scalar";
};

Kernels resolve() {
    Kernels k;
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        k.dot = dot_avx2;
        k.norm = squared_norm_avx2;
        k.name = "avx2";
    }
#elif defined(__aarch64__)
    k.dot = dot_neon;
    k.norm = squared_norm_neon;
    k.name = "neon";
#endif
    return k;
}

const Kernels& kernels() {
    static const Kernels k = resolve();
    return k;
}

} // namespace

float dot(std::span<const float> a, std::span<const float> b) {
    return kernels().dot(a, b);
}

float squared_norm(std::span<const float> a) {
    return kernels().norm(a);
}

const char* active_kernel() {
    return kernels().name;
}

} // namespace dail::simd
