#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "mvc/matrix.hpp"
#include "mvc/rng.hpp"

namespace mvc {

/// Weights of the MLP encoder plus the linear classification head.
/// Layer weights are stored input-dim × output-dim so a batch forward is
/// activations·W + b. Hidden layers use ReLU; the final encoder layer is
/// linear and its width is embed_dim.
struct EncoderParams {
  struct Layer {
    Matrix weight;              // in × out
    std::vector<double> bias;   // out
  };
  std::vector<Layer> layers;
  Layer head;                   // embed_dim × 1
  std::size_t embed_dim = 0;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : layers.front().weight.rows;
  }
  std::size_t param_count() const;

  /// Visits every parameter in a fixed order (layers then head, weight
  /// then bias). Adam state and flatten/unflatten share this order.
  void for_each(const std::function<void(double&)>& fn);
  void for_each(const std::function<void(double)>& fn) const;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

/// Gradients shaped exactly like EncoderParams.
struct ParamGrads {
  std::vector<EncoderParams::Layer> layers;
  EncoderParams::Layer head;

  static ParamGrads zeros_like(const EncoderParams& p);
  void add(const ParamGrads& other);
  void for_each(const std::function<void(double)>& fn) const;
  std::vector<double> flatten() const;
};

/// Pre-activations kept for the backward pass.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre_act;   // per layer, before ReLU (last layer linear)
  std::vector<Matrix> post_act;  // per layer, after activation
};

struct BackwardResult {
  ParamGrads grads;
  Matrix grad_inputs;
};

/// He-normal hidden layers, N(0, 1/fan_in) final embedding layer, zero head.
EncoderParams init_encoder(std::size_t input_dim,
                           const std::vector<std::size_t>& hidden_dims,
                           std::size_t embed_dim, Rng& rng);

std::pair<Matrix, ForwardCache> mlp_forward(const EncoderParams& params,
                                            const Matrix& inputs);

/// Gradient of any scalar loss w.r.t. encoder layer parameters and the
/// inputs, given the upstream gradient w.r.t. the embeddings. Head
/// gradients are left zero (see head_backward).
BackwardResult mlp_backward(const EncoderParams& params,
                            const ForwardCache& cache,
                            const Matrix& grad_embeddings);

/// Linear head: logit per row = h·w + b.
std::vector<double> head_forward(const EncoderParams& params,
                                 const Matrix& embeddings);

/// Accumulates head weight/bias gradients into grads and returns the
/// gradient w.r.t. the embeddings.
Matrix head_backward(const EncoderParams& params, const Matrix& embeddings,
                     const std::vector<double>& grad_logits,
                     ParamGrads& grads);

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

/// Binary encoder snapshot (magic MVCP), bit-exact round trip.
void save_encoder(const EncoderParams& params,
                  const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace mvc
