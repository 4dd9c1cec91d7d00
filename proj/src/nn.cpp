#include "h2st/nn.hpp"

#include <cmath>

#include "h2st/errors.hpp"
#include "h2st/kernels.hpp"

namespace h2st {

double DenseLayer::xavier_bound(std::size_t in_dim, std::size_t out_dim) {
  return std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
}

DenseLayer DenseLayer::xavier(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  DenseLayer layer(in_dim, out_dim);
  const double bound = xavier_bound(in_dim, out_dim);
  for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  return layer;
}

Matrix DenseLayer::forward(const Matrix& input) const {
  if (input.cols != in) throw DimensionError("DenseLayer::forward: input width mismatch");
  Matrix output(input.rows, out);
  kernels::affine_forward(input.data, weights, bias, output.data, {input.rows, in, out});
  return output;
}

Mlp::Mlp(std::size_t input_dim, std::span<const std::size_t> widths, bool activate_output, Rng& rng)
    : activate_output_(activate_output) {
  if (input_dim == 0 || widths.empty()) throw DomainError("Mlp: empty architecture");
  std::size_t prev = input_dim;
  for (std::size_t w : widths) {
    if (w == 0) throw DomainError("Mlp: zero-width layer");
    layers_.push_back(DenseLayer::xavier(prev, w, rng));
    prev = w;
  }
}

Mlp::Trace Mlp::forward(const Matrix& input) const {
  Trace trace;
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(input);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].forward(trace.activations.back());
    if (l + 1 < layers_.size() || activate_output_) kernels::relu_inplace(z.data);
    trace.activations.push_back(std::move(z));
  }
  return trace;
}

std::vector<DenseLayer> Mlp::backward(const Trace& trace, const Matrix& grad_output,
                                      Matrix* grad_input) const {
  if (grad_output.rows != trace.output().rows || grad_output.cols != output_dim()) {
    throw DimensionError("Mlp::backward: gradient shape mismatch");
  }
  std::vector<DenseLayer> grads(layers_.size());
  Matrix delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    if (l + 1 < layers_.size() || activate_output_) {
      kernels::relu_mask(trace.activations[l + 1].data, delta.data);
    }
    const Matrix& input = trace.activations[l];
    const kernels::AffineDims dims{input.rows, layer.in, layer.out};
    grads[l] = DenseLayer(layer.in, layer.out);
    kernels::affine_grad_params(input.data, delta.data, grads[l].weights, grads[l].bias, dims);
    if (l > 0 || grad_input != nullptr) {
      Matrix next(input.rows, layer.in);
      kernels::affine_grad_input(layer.weights, delta.data, next.data, dims);
      delta = std::move(next);
    }
  }
  if (grad_input != nullptr) *grad_input = std::move(delta);
  return grads;
}

void Mlp::descend(const std::vector<DenseLayer>& grads, double rate) {
  if (grads.size() != layers_.size()) throw DimensionError("Mlp::descend: layer count mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    kernels::axpy_descent(layers_[l].weights, grads[l].weights, rate);
    kernels::axpy_descent(layers_[l].bias, grads[l].bias, rate);
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.parameter_count();
  return n;
}

void flatten_into(const std::vector<DenseLayer>& layers, std::vector<double>& out) {
  for (const auto& layer : layers) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
}

std::size_t unflatten_from(std::span<const double> values, std::vector<DenseLayer>& layers) {
  std::size_t k = 0;
  for (auto& layer : layers) {
    if (k + layer.parameter_count() > values.size()) {
      throw DimensionError("unflatten_from: not enough values");
    }
    for (double& w : layer.weights) w = values[k++];
    for (double& b : layer.bias) b = values[k++];
  }
  return k;
}

}  // namespace h2st
