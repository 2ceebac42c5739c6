#include "latentdyn/autodiff/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_map>

#include "latentdyn/errors.hpp"

namespace latentdyn::ad {

namespace detail {
namespace {

constexpr std::size_t pooled_min_elements = 4096;
constexpr std::size_t pool_max_bytes = std::size_t{512} << 20;

class BufferPool {
 public:
  ~BufferPool() {
    for (auto& [n, list] : free_) {
      for (float* p : list) delete[] p;
    }
  }

  float* take(std::size_t n) {
    auto it = free_.find(n);
    if (it == free_.end() || it->second.empty()) return new float[n];
    float* p = it->second.back();
    it->second.pop_back();
    cached_bytes_ -= n * sizeof(float);
    return p;
  }

  void give(float* p, std::size_t n) {
    if (cached_bytes_ + n * sizeof(float) > pool_max_bytes) {
      delete[] p;
      return;
    }
    free_[n].push_back(p);
    cached_bytes_ += n * sizeof(float);
  }

 private:
  std::unordered_map<std::size_t, std::vector<float*>> free_;
  std::size_t cached_bytes_ = 0;
};

BufferPool& pool() {
  thread_local BufferPool p;
  return p;
}

}  // namespace

std::shared_ptr<float[]> acquire_buffer(std::size_t n) {
  if (n < pooled_min_elements) return std::shared_ptr<float[]>(new float[std::max<std::size_t>(n, 1)]);
  return std::shared_ptr<float[]>(pool().take(n),
                                  [n](float* p) { pool().give(p, n); });
}

}  // namespace detail

std::size_t element_count(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor() : Tensor(Shape{}, {0.0f}) {}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)) {
  if (element_count(shape_) != values.size()) {
    throw ValidationError("tensor shape holds " +
                          std::to_string(element_count(shape_)) +
                          " values but " + std::to_string(values.size()) +
                          " were given");
  }
  size_ = values.size();
  auto buf = detail::acquire_buffer(size_);
  std::copy(values.begin(), values.end(), buf.get());
  values_ = std::move(buf);
}

std::pair<Tensor, float*> Tensor::allocate(Shape shape) {
  Tensor t;
  t.size_ = element_count(shape);
  t.shape_ = std::move(shape);
  auto buf = detail::acquire_buffer(t.size_);
  float* raw = buf.get();
  t.values_ = std::move(buf);
  return {std::move(t), raw};
}

Tensor Tensor::scalar(float value) { return Tensor({}, {value}); }

Tensor Tensor::zeros(Shape shape) {
  auto [t, raw] = allocate(std::move(shape));
  std::fill(raw, raw + t.size(), 0.0f);
  return t;
}

Tensor Tensor::vector(std::vector<float> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<float> values) {
  return Tensor({rows, cols}, std::move(values));
}

float Tensor::item() const {
  if (size() != 1) {
    throw ValidationError("item() on a tensor with " + std::to_string(size()) +
                          " elements");
  }
  return values_[0];
}

float Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2 || row >= shape_[0] || col >= shape_[1]) {
    throw ValidationError("tensor index out of range");
  }
  return values_[row * shape_[1] + col];
}

std::optional<NodeId> Tensor::node_id() const noexcept {
  if (tape_ == nullptr) return std::nullopt;
  return node_;
}

Tensor Tensor::detached() const {
  Tensor out = *this;
  out.tape_ = nullptr;
  out.node_ = 0;
  return out;
}

}  // namespace latentdyn::ad
