#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latentdyn/autodiff/tape.hpp"
#include "latentdyn/rng.hpp"

namespace latentdyn::nn {

/// Layer widths of a tanh MLP with a linear output layer and a bias in every
/// layer.
struct MlpSpec {
  std::vector<std::size_t> dims;

  void validate() const;
  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t layer_count() const { return dims.size() - 1; }

  static MlpSpec encoder() { return {{2, 128, 128, 128, 1}}; }
  static MlpSpec decoder() { return {{1, 128, 128, 2}}; }
  static MlpSpec latent() { return {{1, 64, 64, 1}}; }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// weight [out x in], bias [out]. Tracked when bound to a tape.
struct Layer {
  ad::Tensor weight;
  ad::Tensor bias;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<Layer> layers;

  /// Throws ValidationError when layer shapes disagree with the spec or an
  /// entry is non-finite.
  void validate() const;
  std::size_t parameter_count() const;
};

/// Uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], weights row-major then bias,
/// layer by layer.
MlpParams init_params(const MlpSpec& spec, Rng& rng);
MlpParams zero_params(const MlpSpec& spec);

/// Registers every weight and bias as a leaf of `tape`.
std::vector<Layer> bind(const MlpParams& params, ad::Tape& tape);

/// Batched over the leading dimension: x is [in] or [B x in].
ad::Tensor mlp_forward(std::span<const Layer> layers, const ad::Tensor& x);
ad::Tensor mlp_forward(const MlpParams& params, const ad::Tensor& x);

struct DecodedWithJacobian {
  ad::Tensor value;     // D(phi), [B x out]
  ad::Tensor jacobian;  // dD/dphi, [B x out]
};

/// D(phi) and its derivative for a scalar-input net. The derivative is built
/// on `tape` by forward_tangent, so it carries gradients to the weights.
/// An untracked phi is registered on `tape` first.
DecodedWithJacobian decode_with_jacobian(std::span<const Layer> decoder,
                                         const ad::Tensor& phi, ad::Tape& tape);
ad::Tensor decoder_jacobian(std::span<const Layer> decoder, const ad::Tensor& phi,
                            ad::Tape& tape);

/// Float64 evaluation of frozen float32 weights.
class MlpEvaluator {
 public:
  explicit MlpEvaluator(const MlpParams& params);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }

  std::vector<double> operator()(std::span<const double> x) const;

  /// Output and directional derivative along `dx`.
  std::pair<std::vector<double>, std::vector<double>> with_tangent(
      std::span<const double> x, std::span<const double> dx) const;

 private:
  struct DenseLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weight;
    std::vector<double> bias;
  };
  std::vector<DenseLayer> layers_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
};

}  // namespace latentdyn::nn
