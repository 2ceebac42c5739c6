#include "latentdyn/autodiff/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latentdyn/errors.hpp"
#include "matmul.hpp"

namespace latentdyn::ad {
namespace {

using ConstArr = Eigen::Map<const Eigen::ArrayXf>;
using MutArr = Eigen::Map<Eigen::ArrayXf>;

ConstArr arr(const Tensor& t) { return {t.values().data(), Eigen::Index(t.size())}; }

bool all_finite(const Tensor& t) {
  // Non-finite floats are exactly those with every exponent bit set.
  constexpr std::uint32_t exponent = 0x7f800000u;
  std::uint32_t seen = 0;
  for (float v : t.values()) seen |= ~std::bit_cast<std::uint32_t>(v) & exponent ? 0u : 1u;
  return seen == 0;
}

std::vector<float> transposed(const float* a, std::size_t rows, std::size_t cols) {
  constexpr std::size_t tile = 32;
  std::vector<float> t(rows * cols);
  for (std::size_t i0 = 0; i0 < rows; i0 += tile) {
    for (std::size_t j0 = 0; j0 < cols; j0 += tile) {
      const std::size_t i1 = std::min(rows, i0 + tile), j1 = std::min(cols, j0 + tile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) t[j * rows + i] = a[i * cols + j];
      }
    }
  }
  return t;
}

float sequential_sum(const Tensor& t) {
  float s = 0.0f;
  for (float v : t.values()) s += v;
  return s;
}

void accumulate_into(float* p, const float* v, std::size_t n, bool fresh) {
  if (fresh) {
    std::copy(v, v + n, p);
  } else {
    for (std::size_t i = 0; i < n; ++i) p[i] += v[i];
  }
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct AffineDims {
  std::size_t batch = 1;
  std::size_t in = 0;
  std::size_t out = 0;
  bool batched = false;
};

AffineDims affine_dims(const Tensor& w, const Tensor& x, const Tensor* b) {
  if (w.rank() != 2) {
    throw ValidationError("affine: weight must be a matrix, got " +
                          shape_str(w.shape()));
  }
  AffineDims d;
  d.out = w.shape()[0];
  d.in = w.shape()[1];
  if (x.rank() == 1 && x.shape()[0] == d.in) {
    d.batched = false;
  } else if (x.rank() == 2 && x.shape()[1] == d.in) {
    d.batched = true;
    d.batch = x.shape()[0];
  } else {
    throw ValidationError("affine: weight " + shape_str(w.shape()) +
                          " cannot act on " + shape_str(x.shape()));
  }
  if (b != nullptr && (b->rank() != 1 || b->shape()[0] != d.out)) {
    throw ValidationError("affine: bias " + shape_str(b->shape()) +
                          " does not match weight " + shape_str(w.shape()));
  }
  return d;
}

void require_same_shape(Op op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError(std::string(op_name(op)) + ": shape mismatch " +
                          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

std::size_t expected_arity(Op op, std::size_t given) {
  switch (op) {
    case Op::affine:
      return (given == 2 || given == 3) ? given : 3;
    case Op::add:
    case Op::sub:
    case Op::mul:
      return 2;
    case Op::leaf:
      return 0;
    default:
      return 1;
  }
}

Tensor forward_value(Op op, std::span<const Tensor> in, float factor) {
  switch (op) {
    case Op::affine: {
      const Tensor* bias = in.size() == 3 ? &in[2] : nullptr;
      const AffineDims d = affine_dims(in[0], in[1], bias);
      Shape shape = d.batched ? Shape{std::size_t(d.batch), std::size_t(d.out)}
                              : Shape{std::size_t(d.out)};
      auto [out, raw] = Tensor::allocate(std::move(shape));
      const auto wt = transposed(in[0].values().data(), d.out, d.in);
      detail::matmul(in[1].values().data(), {d.in, 1}, wt.data(), raw, d.batch, d.in, d.out);
      if (bias != nullptr) {
        const float* bv = bias->values().data();
        for (std::size_t r = 0; r < d.batch; ++r) {
          for (std::size_t j = 0; j < d.out; ++j) raw[r * d.out + j] += bv[j];
        }
      }
      return out;
    }
    case Op::tanh: {
      auto [out, raw] = Tensor::allocate(in[0].shape());
      MutArr(raw, Eigen::Index(out.size())) = arr(in[0]).tanh();
      return out;
    }
    case Op::add:
    case Op::sub:
    case Op::mul: {
      require_same_shape(op, in[0], in[1]);
      auto [out, raw] = Tensor::allocate(in[0].shape());
      MutArr o(raw, Eigen::Index(out.size()));
      if (op == Op::add) o = arr(in[0]) + arr(in[1]);
      if (op == Op::sub) o = arr(in[0]) - arr(in[1]);
      if (op == Op::mul) o = arr(in[0]) * arr(in[1]);
      return out;
    }
    case Op::square: {
      auto [out, raw] = Tensor::allocate(in[0].shape());
      MutArr(raw, Eigen::Index(out.size())) = arr(in[0]).square();
      return out;
    }
    case Op::mean:
    case Op::sum: {
      if (in[0].size() == 0) {
        throw ValidationError(std::string(op_name(op)) + " of an empty tensor");
      }
      const float s = sequential_sum(in[0]);
      return Tensor::scalar(op == Op::mean ? s / float(in[0].size()) : s);
    }
    case Op::scale: {
      auto [out, raw] = Tensor::allocate(in[0].shape());
      MutArr(raw, Eigen::Index(out.size())) = arr(in[0]) * factor;
      return out;
    }
    case Op::leaf:
      break;
  }
  throw UnsupportedOpError("no forward rule for " + std::string(op_name(op)));
}

// Gradient accumulator for one node. The first contribution is written,
// later ones are added, so buffers never need zero-filling.
struct GradSlot {
  std::shared_ptr<float[]> data;
  std::size_t size = 0;
};

template <class Expr>
void write_arr(float* p, Eigen::Index n, bool fresh, const Expr& e) {
  MutArr a(p, n);
  if (fresh) {
    a = e;
  } else {
    a += e;
  }
}

}  // namespace

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::affine: return "affine";
    case Op::tanh: return "tanh";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul_elementwise";
    case Op::square: return "square";
    case Op::mean: return "mean";
    case Op::sum: return "sum";
    case Op::scale: return "scale";
  }
  return "unknown";
}

Tensor apply_primitive(Op op, std::span<const Tensor> inputs, float factor) {
  if (op == Op::leaf) {
    throw ValidationError("leaf is not an applicable primitive; use Tape::variable");
  }
  if (inputs.size() != expected_arity(op, inputs.size())) {
    throw ValidationError(std::string(op_name(op)) + ": wrong number of inputs (" +
                          std::to_string(inputs.size()) + ")");
  }
  Tensor value = forward_value(op, inputs, factor);
  if (!all_finite(value)) {
    throw NumericalError(std::string(op_name(op)) + " produced a non-finite value");
  }

  Tape* tape = nullptr;
  for (const Tensor& t : inputs) {
    if (!t.tracked()) continue;
    if (tape != nullptr && tape != t.tape()) {
      throw ValidationError(std::string(op_name(op)) +
                            ": inputs live on different tapes");
    }
    tape = t.tape();
  }
  if (tape == nullptr) return value;

  Tape::Node node;
  node.op = op;
  node.arity = static_cast<std::uint8_t>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) node.inputs[i] = inputs[i];
  node.factor = factor;
  return tape->record(std::move(node), std::move(value));
}

Tensor Tape::record(Node node, Tensor value) {
  value.tape_ = this;
  value.node_ = nodes_.size();
  node.output = value;
  nodes_.push_back(std::move(node));
  return value;
}

Tensor Tape::variable(const Tensor& value) {
  if (value.tracked()) {
    throw ValidationError("variable: tensor is already on a tape");
  }
  if (!all_finite(value)) {
    throw NumericalError("variable: non-finite leaf value");
  }
  Node node;
  node.op = Op::leaf;
  return record(std::move(node), value.detached());
}

GradientMap Tape::backward(const Tensor& root) const {
  if (root.tape() != this) {
    throw ValidationError("backward: root was not produced on this tape");
  }
  if (root.rank() != 0) {
    throw ValidationError("backward: root must be a scalar, got shape " +
                          shape_str(root.shape()));
  }

  std::vector<GradSlot> grads(nodes_.size());
  grads[root.node_].data = detail::acquire_buffer(1);
  grads[root.node_].data[0] = 1.0f;
  grads[root.node_].size = 1;

  for (NodeId id = root.node_ + 1; id-- > 0;) {
    if (!grads[id].data) continue;
    const Node& node = nodes_[id];
    if (node.op == Op::leaf) continue;

    const float* g = grads[id].data.get();
    const Eigen::Index gn = Eigen::Index(grads[id].size);
    const ConstArr garr(g, gn);
    auto tracked = [&](std::size_t k) { return node.inputs[k].tape() == this; };
    // Calls write(buffer, fresh) on input k's gradient slot.
    auto into = [&](std::size_t k, auto&& write) {
      const Tensor& t = node.inputs[k];
      GradSlot& slot = grads[t.node_];
      const bool fresh = !slot.data;
      if (fresh) {
        slot.data = detail::acquire_buffer(t.size());
        slot.size = t.size();
      }
      write(slot.data.get(), fresh);
    };
    auto into_arr = [&](std::size_t k, const auto& expr) {
      into(k, [&](float* p, bool fresh) {
        write_arr(p, Eigen::Index(node.inputs[k].size()), fresh, expr);
      });
    };

    switch (node.op) {
      case Op::affine: {
        const Tensor& w = node.inputs[0];
        const Tensor& x = node.inputs[1];
        const AffineDims d =
            affine_dims(w, x, node.arity == 3 ? &node.inputs[2] : nullptr);
        if (tracked(0)) {
          std::vector<float> dw(d.out * d.in);
          detail::matmul(g, {1, d.out}, x.values().data(), dw.data(), d.out, d.batch, d.in);
          into(0, [&](float* p, bool fresh) { accumulate_into(p, dw.data(), dw.size(), fresh); });
        }
        if (tracked(1)) {
          std::vector<float> dx(d.batch * d.in);
          detail::matmul(g, {d.out, 1}, w.values().data(), dx.data(), d.batch, d.out, d.in);
          into(1, [&](float* p, bool fresh) { accumulate_into(p, dx.data(), dx.size(), fresh); });
        }
        if (node.arity == 3 && tracked(2)) {
          std::vector<float> db(d.out, 0.0f);
          for (std::size_t r = 0; r < d.batch; ++r) {
            for (std::size_t j = 0; j < d.out; ++j) db[j] += g[r * d.out + j];
          }
          into(2, [&](float* p, bool fresh) { accumulate_into(p, db.data(), db.size(), fresh); });
        }
        break;
      }
      case Op::tanh: {
        const ConstArr y = arr(node.output);
        if (tracked(0)) into_arr(0, garr * (1.0f - y.square()));
        break;
      }
      case Op::add:
        if (tracked(0)) into_arr(0, garr);
        if (tracked(1)) into_arr(1, garr);
        break;
      case Op::sub:
        if (tracked(0)) into_arr(0, garr);
        if (tracked(1)) into_arr(1, -garr);
        break;
      case Op::mul:
        if (tracked(0)) into_arr(0, garr * arr(node.inputs[1]));
        if (tracked(1)) into_arr(1, garr * arr(node.inputs[0]));
        break;
      case Op::square:
        if (tracked(0)) into_arr(0, 2.0f * garr * arr(node.inputs[0]));
        break;
      case Op::mean:
      case Op::sum:
        if (tracked(0)) {
          const Eigen::Index n = Eigen::Index(node.inputs[0].size());
          const float v = node.op == Op::mean ? g[0] / float(n) : g[0];
          into_arr(0, Eigen::ArrayXf::Constant(n, v));
        }
        break;
      case Op::scale:
        if (tracked(0)) into_arr(0, node.factor * garr);
        break;
      case Op::leaf:
        break;
    }
    grads[id] = {};
  }

  GradientMap out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.op != Op::leaf) continue;
    const Shape& shape = node.output.shape();
    if (!grads[id].data) {
      out.emplace(id, Tensor::zeros(shape));
    } else {
      Tensor t;
      t.shape_ = shape;
      t.size_ = grads[id].size;
      t.values_ = std::move(grads[id].data);
      out.emplace(id, std::move(t));
    }
  }
  return out;
}

namespace {

using TangentSlots = std::array<std::optional<Tensor>, 3>;

Tensor accumulate(std::optional<Tensor>& acc, Tensor term) {
  acc = acc ? add(*acc, term) : std::move(term);
  return *acc;
}

}  // namespace

Tensor Tape::forward_tangent(const Tensor& output, const Tensor& input,
                             const Tensor& tangent) {
  if (input.tape() != this) {
    throw ValidationError("forward_tangent: input is not on this tape");
  }
  if (tangent.shape() != input.shape()) {
    throw ValidationError("forward_tangent: tangent shape " +
                          shape_str(tangent.shape()) + " differs from input " +
                          shape_str(input.shape()));
  }
  if (output.tape() != this || output.node_ < input.node_) {
    return Tensor::zeros(output.shape());
  }

  std::unordered_map<NodeId, Tensor> tangents;
  tangents.emplace(input.node_, tangent);
  const NodeId last = output.node_;

  for (NodeId id = input.node_ + 1; id <= last; ++id) {
    // Copied: the rules below append to nodes_.
    const Node node = nodes_[id];
    TangentSlots t;
    bool any = false;
    for (std::size_t k = 0; k < node.arity; ++k) {
      const Tensor& in = node.inputs[k];
      if (in.tape() != this) continue;
      if (auto it = tangents.find(in.node_); it != tangents.end()) {
        t[k] = it->second;
        any = true;
      }
    }
    if (!any) continue;

    std::optional<Tensor> out;
    const auto& in = node.inputs;
    switch (node.op) {
      case Op::affine:
        if (t[1]) accumulate(out, affine(in[0], *t[1]));
        if (t[0]) accumulate(out, affine(*t[0], in[1]));
        if (node.arity == 3 && t[2]) {
          accumulate(out, affine(Tensor::zeros(in[0].shape()), in[1], *t[2]));
        }
        break;
      case Op::tanh:
        // d tanh = (1 - y^2) dx
        out = sub(*t[0], mul(square(node.output), *t[0]));
        break;
      case Op::add:
        if (t[0]) accumulate(out, *t[0]);
        if (t[1]) accumulate(out, *t[1]);
        break;
      case Op::sub:
        if (t[0]) accumulate(out, *t[0]);
        if (t[1]) out = out ? sub(*out, *t[1]) : scale(*t[1], -1.0f);
        break;
      case Op::mul:
        if (t[0]) accumulate(out, mul(*t[0], in[1]));
        if (t[1]) accumulate(out, mul(in[0], *t[1]));
        break;
      case Op::square:
        out = scale(mul(in[0], *t[0]), 2.0f);
        break;
      case Op::mean:
        out = mean(*t[0]);
        break;
      case Op::sum:
        out = sum(*t[0]);
        break;
      case Op::scale:
        out = scale(*t[0], node.factor);
        break;
      case Op::leaf:
        throw UnsupportedOpError("leaf has no tangent rule");
    }
    tangents.emplace(id, *out);
  }

  auto it = tangents.find(last);
  return it == tangents.end() ? Tensor::zeros(output.shape()) : it->second;
}

Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b) {
  const std::array<Tensor, 3> in{w, x, b};
  return apply_primitive(Op::affine, in);
}

Tensor affine(const Tensor& w, const Tensor& x) {
  const std::array<Tensor, 2> in{w, x};
  return apply_primitive(Op::affine, in);
}

namespace {
Tensor unary(Op op, const Tensor& x, float factor = 1.0f) {
  const std::array<Tensor, 1> in{x};
  return apply_primitive(op, in, factor);
}
Tensor binary(Op op, const Tensor& a, const Tensor& b) {
  const std::array<Tensor, 2> in{a, b};
  return apply_primitive(op, in);
}
}  // namespace

Tensor tanh(const Tensor& x) { return unary(Op::tanh, x); }
Tensor add(const Tensor& a, const Tensor& b) { return binary(Op::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(Op::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(Op::mul, a, b); }
Tensor square(const Tensor& x) { return unary(Op::square, x); }
Tensor mean(const Tensor& x) { return unary(Op::mean, x); }
Tensor sum(const Tensor& x) { return unary(Op::sum, x); }
Tensor scale(const Tensor& x, float factor) { return unary(Op::scale, x, factor); }

}  // namespace latentdyn::ad
