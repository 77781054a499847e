#pragma once

#include <cstddef>
#include <span>

namespace dail::simd {

// Scalar reference kernels.
float dot_scalar(std::span<const float> a, std::span<const float> b);
float squared_norm_scalar(std::span<const float> a);

// Dispatched entry points; resolve to AVX2/NEON when the CPU supports it,
// scalar otherwise. Sizes must match for dot.
float dot(std::span<const float> a, std::span<const float> b);
float squared_norm(std::span<const float> a);

// Which kernel the dispatcher picked: "avx2", "neon" or "scalar".
const char* active_kernel();

} // namespace dail::simd
