#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "h2st/matrix.hpp"
#include "h2st/rng.hpp"

namespace h2st {

// Fully connected layer: weights are out x in, row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  /// Glorot-uniform weights in +-sqrt(6 / (in + out)); zero bias.
  static DenseLayer xavier(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  static double xavier_bound(std::size_t in_dim, std::size_t out_dim);

  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  Matrix forward(const Matrix& input) const;

  bool operator==(const DenseLayer&) const = default;
};

// Multi-layer perceptron with ReLU on hidden layers. The last layer is
// linear unless `activate_output` is set, in which case it is ReLU too
// (used for feature extractors whose output is the last hidden activation).
class Mlp {
 public:
  struct Trace {
    // activations[0] is the input; activations[l + 1] is the output of layer l.
    std::vector<Matrix> activations;
    const Matrix& output() const { return activations.back(); }
  };

  Mlp() = default;
  Mlp(std::size_t input_dim, std::span<const std::size_t> widths, bool activate_output, Rng& rng);

  Trace forward(const Matrix& input) const;

  /// Gradients of every layer given dLoss/dOutput. When `grad_input` is
  /// non-null it receives dLoss/dInput.
  std::vector<DenseLayer> backward(const Trace& trace, const Matrix& grad_output,
                                   Matrix* grad_input = nullptr) const;

  void descend(const std::vector<DenseLayer>& grads, double rate);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t parameter_count() const;
  bool activates_output() const { return activate_output_; }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<DenseLayer> layers_;
  bool activate_output_ = false;
};

/// Appends every weight then bias of each layer, in layer order.
void flatten_into(const std::vector<DenseLayer>& layers, std::vector<double>& out);

/// Inverse of flatten_into; returns the number of values consumed.
std::size_t unflatten_from(std::span<const double> values, std::vector<DenseLayer>& layers);

}  // namespace h2st
