#include "h2st/kernels.hpp"

namespace h2st::kernels::serial {

void affine_forward(std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output, AffineDims dims) {
  for (std::size_t b = 0; b < dims.batch; ++b) {
    const double* x = input.data() + b * dims.in;
    for (std::size_t o = 0; o < dims.out; ++o) {
      const double* w = weights.data() + o * dims.in;
      double acc = bias[o];
      for (std::size_t i = 0; i < dims.in; ++i) acc += w[i] * x[i];
      output[b * dims.out + o] = acc;
    }
  }
}

void affine_grad_params(std::span<const double> input, std::span<const double> grad_output,
                        std::span<double> grad_weights, std::span<double> grad_bias,
                        AffineDims dims) {
  for (std::size_t o = 0; o < dims.out; ++o) {
    double* gw = grad_weights.data() + o * dims.in;
    for (std::size_t i = 0; i < dims.in; ++i) gw[i] = 0.0;
    double gb = 0.0;
    for (std::size_t b = 0; b < dims.batch; ++b) {
      const double g = grad_output[b * dims.out + o];
      const double* x = input.data() + b * dims.in;
      for (std::size_t i = 0; i < dims.in; ++i) gw[i] += g * x[i];
      gb += g;
    }
    grad_bias[o] = gb;
  }
}

void affine_grad_input(std::span<const double> weights, std::span<const double> grad_output,
                       std::span<double> grad_input, AffineDims dims) {
  for (std::size_t b = 0; b < dims.batch; ++b) {
    double* gx = grad_input.data() + b * dims.in;
    for (std::size_t i = 0; i < dims.in; ++i) gx[i] = 0.0;
    for (std::size_t o = 0; o < dims.out; ++o) {
      const double g = grad_output[b * dims.out + o];
      const double* w = weights.data() + o * dims.in;
      for (std::size_t i = 0; i < dims.in; ++i) gx[i] += g * w[i];
    }
  }
}

void relu_inplace(std::span<double> values) {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

void relu_mask(std::span<const double> activated, std::span<double> grad) {
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (!(activated[k] > 0.0)) grad[k] = 0.0;
  }
}

void axpy_descent(std::span<double> parameters, std::span<const double> gradient, double rate) {
  for (std::size_t k = 0; k < parameters.size(); ++k) parameters[k] -= rate * gradient[k];
}

}  // namespace h2st::kernels::serial
