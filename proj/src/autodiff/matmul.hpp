#pragma once

#include <cstddef>

namespace latentdyn::ad::detail {

// Element (r, kk) of a left operand lives at r * row + kk * col.
struct Strides {
  std::size_t row;
  std::size_t col;
};

// C (n x m) = A (n x k) * B (k x m), B row-major and dense.
// Every entry is accumulated over k in increasing order with the same
// multiply-add, whatever n is and wherever the buffers sit, so a batched
// product equals its rows computed one at a time bit for bit.
void matmul(const float* a, Strides sa, const float* b, float* c, std::size_t n,
            std::size_t k, std::size_t m);

}  // namespace latentdyn::ad::detail
