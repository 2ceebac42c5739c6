#include "matmul.hpp"

#include <algorithm>
#include <cmath>

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

namespace latentdyn::ad::detail {
namespace {

#if defined(__AVX512F__)
using Vec = __m512;
constexpr std::size_t lanes = 16;
inline Vec vzero() { return _mm512_setzero_ps(); }
inline Vec vload(const float* p) { return _mm512_loadu_ps(p); }
inline void vstore(float* p, Vec v) { _mm512_storeu_ps(p, v); }
inline Vec vmadd(float a, Vec b, Vec c) { return _mm512_fmadd_ps(_mm512_set1_ps(a), b, c); }
inline float smadd(float a, float b, float c) { return std::fma(a, b, c); }
#elif defined(__AVX2__) && defined(__FMA__)
using Vec = __m256;
constexpr std::size_t lanes = 8;
inline Vec vzero() { return _mm256_setzero_ps(); }
inline Vec vload(const float* p) { return _mm256_loadu_ps(p); }
inline void vstore(float* p, Vec v) { _mm256_storeu_ps(p, v); }
inline Vec vmadd(float a, Vec b, Vec c) { return _mm256_fmadd_ps(_mm256_set1_ps(a), b, c); }
inline float smadd(float a, float b, float c) { return std::fma(a, b, c); }
#else
using Vec = float __attribute__((vector_size(16)));
using VecRef = float __attribute__((vector_size(16), aligned(4)));
constexpr std::size_t lanes = 4;
inline Vec vzero() { return Vec{}; }
inline Vec vload(const float* p) { return *reinterpret_cast<const VecRef*>(p); }
inline void vstore(float* p, Vec v) { *reinterpret_cast<VecRef*>(p) = v; }
inline Vec vmadd(float a, Vec b, Vec c) { return c + a * b; }
inline float smadd(float a, float b, float c) { return c + a * b; }
#endif

// R x V register tile over a k-chunk; carries partial sums through C.
template <std::size_t R, std::size_t V>
void tile(const float* a, Strides sa, const float* b, float* c, std::size_t k,
          std::size_t m, bool first) {
  Vec acc[R][V];
#pragma GCC unroll 8
  for (std::size_t r = 0; r < R; ++r) {
#pragma GCC unroll 8
    for (std::size_t v = 0; v < V; ++v) {
      acc[r][v] = first ? vzero() : vload(c + r * m + v * lanes);
    }
  }
  for (std::size_t kk = 0; kk < k; ++kk) {
    Vec bv[V];
#pragma GCC unroll 8
    for (std::size_t v = 0; v < V; ++v) bv[v] = vload(b + kk * m + v * lanes);
    const float* ak = a + kk * sa.col;
#pragma GCC unroll 8
    for (std::size_t r = 0; r < R; ++r) {
      const float x = ak[r * sa.row];
#pragma GCC unroll 8
      for (std::size_t v = 0; v < V; ++v) acc[r][v] = vmadd(x, bv[v], acc[r][v]);
    }
  }
#pragma GCC unroll 8
  for (std::size_t r = 0; r < R; ++r) {
#pragma GCC unroll 8
    for (std::size_t v = 0; v < V; ++v) vstore(c + r * m + v * lanes, acc[r][v]);
  }
}

template <std::size_t R>
void rows(const float* a, Strides sa, const float* b, float* c, std::size_t k, std::size_t m,
          bool first) {
  std::size_t j = 0;
  for (; j + 4 * lanes <= m; j += 4 * lanes) tile<R, 4>(a, sa, b + j, c + j, k, m, first);
  for (; j + 2 * lanes <= m; j += 2 * lanes) tile<R, 2>(a, sa, b + j, c + j, k, m, first);
  for (; j + lanes <= m; j += lanes) tile<R, 1>(a, sa, b + j, c + j, k, m, first);
  for (; j < m; ++j) {
    float s[R];
    for (std::size_t r = 0; r < R; ++r) s[r] = first ? 0.0f : c[r * m + j];
    for (std::size_t kk = 0; kk < k; ++kk) {
      const float bj = b[kk * m + j];
      const float* ak = a + kk * sa.col;
#pragma GCC unroll 8
      for (std::size_t r = 0; r < R; ++r) s[r] = smadd(ak[r * sa.row], bj, s[r]);
    }
    for (std::size_t r = 0; r < R; ++r) c[r * m + j] = s[r];
  }
}

}  // namespace

void matmul(const float* a, Strides sa, const float* b, float* c, std::size_t n,
            std::size_t k, std::size_t m) {
  if (k == 0) {
    std::fill(c, c + n * m, 0.0f);
    return;
  }
  // Chunks of k keep the slice of B in cache; partial sums ride in C.
  constexpr std::size_t chunk = 256;
  for (std::size_t k0 = 0; k0 < k; k0 += chunk) {
    const std::size_t kc = std::min(chunk, k - k0);
    const float* ak = a + k0 * sa.col;
    const float* bk = b + k0 * m;
    std::size_t r = 0;
    for (; r + 4 <= n; r += 4) rows<4>(ak + r * sa.row, sa, bk, c + r * m, kc, m, k0 == 0);
    for (; r < n; ++r) rows<1>(ak + r * sa.row, sa, bk, c + r * m, kc, m, k0 == 0);
  }
}

}  // namespace latentdyn::ad::detail
