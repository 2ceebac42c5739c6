#include "latentdyn/nn/mlp.hpp"

#include <cmath>
#include <string>

#include "latentdyn/errors.hpp"

namespace latentdyn::nn {

void MlpSpec::validate() const {
  if (dims.size() < 2) {
    throw ValidationError("MLP needs at least an input and an output width");
  }
  for (std::size_t w : dims) {
    if (w == 0) throw ValidationError("MLP layer widths must be >= 1");
  }
}

void MlpParams::validate() const {
  spec.validate();
  if (layers.size() != spec.layer_count()) {
    throw ValidationError("MLP has " + std::to_string(layers.size()) +
                          " layers, spec expects " +
                          std::to_string(spec.layer_count()));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const ad::Shape w{spec.dims[k + 1], spec.dims[k]};
    const ad::Shape b{spec.dims[k + 1]};
    if (layers[k].weight.shape() != w || layers[k].bias.shape() != b) {
      throw ValidationError("layer " + std::to_string(k) +
                            " shape disagrees with spec");
    }
    for (const ad::Tensor* t : {&layers[k].weight, &layers[k].bias}) {
      for (float v : t->values()) {
        if (!std::isfinite(v)) {
          throw NumericalError("layer " + std::to_string(k) +
                               " holds a non-finite parameter");
        }
      }
    }
  }
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpParams init_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  MlpParams p{spec, {}};
  for (std::size_t k = 0; k + 1 < spec.dims.size(); ++k) {
    const std::size_t in = spec.dims[k];
    const std::size_t out = spec.dims[k + 1];
    const double bound = 1.0 / std::sqrt(double(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<float> w(out * in);
    std::vector<float> b(out);
    for (float& v : w) v = static_cast<float>(u(rng));
    for (float& v : b) v = static_cast<float>(u(rng));
    p.layers.push_back({ad::Tensor::matrix(out, in, std::move(w)),
                        ad::Tensor::vector(std::move(b))});
  }
  return p;
}

MlpParams zero_params(const MlpSpec& spec) {
  spec.validate();
  MlpParams p{spec, {}};
  for (std::size_t k = 0; k + 1 < spec.dims.size(); ++k) {
    p.layers.push_back({ad::Tensor::zeros({spec.dims[k + 1], spec.dims[k]}),
                        ad::Tensor::zeros({spec.dims[k + 1]})});
  }
  return p;
}

std::vector<Layer> bind(const MlpParams& params, ad::Tape& tape) {
  std::vector<Layer> out;
  out.reserve(params.layers.size());
  for (const Layer& l : params.layers) {
    out.push_back({tape.variable(l.weight), tape.variable(l.bias)});
  }
  return out;
}

ad::Tensor mlp_forward(std::span<const Layer> layers, const ad::Tensor& x) {
  if (layers.empty()) throw ValidationError("mlp_forward: no layers");
  const std::size_t in = layers.front().weight.shape()[1];
  if (x.rank() == 0 || x.rank() > 2 || x.shape().back() != in) {
    throw ValidationError("mlp_forward: input last dimension must be " +
                          std::to_string(in));
  }
  ad::Tensor h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = ad::affine(layers[k].weight, h, layers[k].bias);
    if (k + 1 < layers.size()) h = ad::tanh(h);
  }
  return h;
}

ad::Tensor mlp_forward(const MlpParams& params, const ad::Tensor& x) {
  return mlp_forward(params.layers, x);
}

DecodedWithJacobian decode_with_jacobian(std::span<const Layer> decoder,
                                         const ad::Tensor& phi, ad::Tape& tape) {
  if (decoder.empty() || decoder.front().weight.shape()[1] != 1) {
    throw ValidationError("decoder_jacobian: decoder must take a scalar input");
  }
  ad::Tensor input = phi;
  if (!input.tracked()) {
    input = tape.variable(phi);
  } else if (input.tape() != &tape) {
    throw ValidationError("decoder_jacobian: phi lives on another tape");
  }
  ad::Tensor value = mlp_forward(decoder, input);
  const ad::Tensor ones(input.shape(), std::vector<float>(input.size(), 1.0f));
  ad::Tensor jac = tape.forward_tangent(value, input, ones);
  return {std::move(value), std::move(jac)};
}

ad::Tensor decoder_jacobian(std::span<const Layer> decoder, const ad::Tensor& phi,
                            ad::Tape& tape) {
  return decode_with_jacobian(decoder, phi, tape).jacobian;
}

MlpEvaluator::MlpEvaluator(const MlpParams& params) {
  params.validate();
  input_dim_ = params.spec.input_dim();
  output_dim_ = params.spec.output_dim();
  for (const Layer& l : params.layers) {
    DenseLayer d;
    d.rows = l.weight.shape()[0];
    d.cols = l.weight.shape()[1];
    d.weight.assign(l.weight.values().begin(), l.weight.values().end());
    d.bias.assign(l.bias.values().begin(), l.bias.values().end());
    layers_.push_back(std::move(d));
  }
}

std::vector<double> MlpEvaluator::operator()(std::span<const double> x) const {
  const std::vector<double> zero(x.size(), 0.0);
  return with_tangent(x, zero).first;
}

std::pair<std::vector<double>, std::vector<double>> MlpEvaluator::with_tangent(
    std::span<const double> x, std::span<const double> dx) const {
  if (x.size() != input_dim_ || dx.size() != input_dim_) {
    throw ValidationError("MlpEvaluator: expected input of size " +
                          std::to_string(input_dim_));
  }
  std::vector<double> h(x.begin(), x.end());
  std::vector<double> t(dx.begin(), dx.end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& l = layers_[k];
    std::vector<double> nh(l.rows), nt(l.rows);
    for (std::size_t r = 0; r < l.rows; ++r) {
      double a = l.bias[r];
      double da = 0.0;
      for (std::size_t c = 0; c < l.cols; ++c) {
        a += l.weight[r * l.cols + c] * h[c];
        da += l.weight[r * l.cols + c] * t[c];
      }
      if (k + 1 < layers_.size()) {
        const double y = std::tanh(a);
        nh[r] = y;
        nt[r] = (1.0 - y * y) * da;
      } else {
        nh[r] = a;
        nt[r] = da;
      }
    }
    h = std::move(nh);
    t = std::move(nt);
  }
  return {std::move(h), std::move(t)};
}

}  // namespace latentdyn::nn
