#pragma once

#include <cstddef>
#include <span>

// Batched dense-layer kernels. Row-major layouts throughout:
//   input    batch x in
//   weights  out x in
//   output   batch x out
//
// h2st::kernels holds the OpenMP versions used in production;
// h2st::kernels::serial holds the single-threaded reference the tests and
// benchmarks compare against. Both visit every reduction in the same order,
// so results agree bitwise regardless of thread count.
namespace h2st::kernels {

struct AffineDims {
  std::size_t batch = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

/// output = input * weights^T + bias
void affine_forward(std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output, AffineDims dims);

/// grad_weights = grad_output^T * input; grad_bias = column sums of grad_output.
void affine_grad_params(std::span<const double> input, std::span<const double> grad_output,
                        std::span<double> grad_weights, std::span<double> grad_bias,
                        AffineDims dims);

/// grad_input = grad_output * weights
void affine_grad_input(std::span<const double> weights, std::span<const double> grad_output,
                       std::span<double> grad_input, AffineDims dims);

void relu_inplace(std::span<double> values);

/// Zeroes grad wherever the post-activation value is not positive.
void relu_mask(std::span<const double> activated, std::span<double> grad);

/// parameters -= rate * gradient
void axpy_descent(std::span<double> parameters, std::span<const double> gradient, double rate);

namespace serial {

void affine_forward(std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output, AffineDims dims);
void affine_grad_params(std::span<const double> input, std::span<const double> grad_output,
                        std::span<double> grad_weights, std::span<double> grad_bias,
                        AffineDims dims);
void affine_grad_input(std::span<const double> weights, std::span<const double> grad_output,
                       std::span<double> grad_input, AffineDims dims);
void relu_inplace(std::span<double> values);
void relu_mask(std::span<const double> activated, std::span<double> grad);
void axpy_descent(std::span<double> parameters, std::span<const double> gradient, double rate);

}  // namespace serial
}  // namespace h2st::kernels
