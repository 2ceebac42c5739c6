#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace latentdyn::ad {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

class Tape;

/// Immutable float32 array, row-major. A tensor is either a constant or the
/// output of a node on a tape; copies share storage.
class Tensor {
 public:
  /// Scalar zero.
  Tensor();
  Tensor(Shape shape, std::vector<float> values);

  static Tensor scalar(float value);
  static Tensor zeros(Shape shape);
  static Tensor vector(std::vector<float> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::span<const float> values() const noexcept { return {values_.get(), size_}; }

  /// Value of a single-element tensor.
  float item() const;
  float operator[](std::size_t i) const { return values_[i]; }
  float at(std::size_t row, std::size_t col) const;

  bool tracked() const noexcept { return tape_ != nullptr; }
  std::optional<NodeId> node_id() const noexcept;
  Tape* tape() const noexcept { return tape_; }

  /// Same values, cut from any tape.
  Tensor detached() const;

  /// Untracked tensor with uninitialized storage, for kernels that write
  /// every element before the tensor is shared.
  static std::pair<Tensor, float*> allocate(Shape shape);

 private:
  friend class Tape;

  Shape shape_;
  std::shared_ptr<const float[]> values_;
  std::size_t size_ = 0;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

std::size_t element_count(const Shape& shape) noexcept;

namespace detail {
/// Float buffer of n elements, uninitialized. Large buffers are recycled
/// through a per-thread pool instead of going back to the system allocator.
std::shared_ptr<float[]> acquire_buffer(std::size_t n);
}  // namespace detail

}  // namespace latentdyn::ad
