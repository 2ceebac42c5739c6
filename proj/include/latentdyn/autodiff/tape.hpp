#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "latentdyn/autodiff/tensor.hpp"

namespace latentdyn::ad {

/// The closed primitive set. Every primitive has a reverse rule and a
/// tangent rule; tangent rules are themselves written with primitives, so a
/// tangent computed on a tape can be differentiated again in reverse.
enum class Op : std::uint8_t {
  leaf,
  affine,  // W [m x n], x [n] or [B x n], optional b [m]
  tanh,
  add,
  sub,
  mul,  // elementwise
  square,
  mean,  // over all elements, yields a scalar
  sum,   // over all elements, yields a scalar
  scale,
};

std::string_view op_name(Op op) noexcept;

using GradientMap = std::unordered_map<NodeId, Tensor>;

/// Define-by-run record of primitive applications. Nodes are appended in
/// topological order. Tensors produced here point back at the tape, so a tape
/// must outlive them and cannot be moved.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a differentiable leaf (a parameter or an input).
  Tensor variable(const Tensor& value);

  std::size_t size() const noexcept { return nodes_.size(); }
  Op op_at(NodeId id) const { return nodes_.at(id).op; }

  /// Reverse pass from a rank-0 root. The result has one entry per leaf;
  /// leaves the root does not depend on get zeros.
  GradientMap backward(const Tensor& root) const;

  /// Directional derivative of `output` with respect to `input` along
  /// `tangent`. The tangent computation is appended to this tape, so the
  /// result is itself differentiable (forward-over-reverse).
  Tensor forward_tangent(const Tensor& output, const Tensor& input,
                         const Tensor& tangent);

 private:
  friend Tensor apply_primitive(Op op, std::span<const Tensor> inputs,
                                float factor);

  struct Node {
    Op op = Op::leaf;
    std::array<Tensor, 3> inputs;
    std::uint8_t arity = 0;
    Tensor output;
    float factor = 1.0f;
  };

  Tensor record(Node node, Tensor value);

  std::vector<Node> nodes_;
};

/// Evaluates one primitive. When any input is tracked the application is
/// recorded on that input's tape. `factor` is only read by Op::scale.
Tensor apply_primitive(Op op, std::span<const Tensor> inputs,
                       float factor = 1.0f);

Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b);
Tensor affine(const Tensor& w, const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor square(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor scale(const Tensor& x, float factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double c, const Tensor& x) {
  return scale(x, static_cast<float>(c));
}

/// Every primitive already rejects non-finite outputs.
inline bool state_is_finite(const Tensor&) { return true; }

}  // namespace latentdyn::ad
