#include "h2st/kernels.hpp"

#include <cstdint>

namespace h2st::kernels {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;

bool worth_parallel(std::size_t work) { return work >= kParallelWork; }
}  // namespace

void affine_forward(std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output, AffineDims dims) {
  const auto cells = static_cast<std::int64_t>(dims.batch * dims.out);
#pragma omp parallel for schedule(static) if (worth_parallel(dims.batch * dims.out * dims.in))
  for (std::int64_t cell = 0; cell < cells; ++cell) {
    const std::size_t b = static_cast<std::size_t>(cell) / dims.out;
    const std::size_t o = static_cast<std::size_t>(cell) % dims.out;
    const double* x = input.data() + b * dims.in;
    const double* w = weights.data() + o * dims.in;
    double acc = bias[o];
    for (std::size_t i = 0; i < dims.in; ++i) acc += w[i] * x[i];
    output[b * dims.out + o] = acc;
  }
}

void affine_grad_params(std::span<const double> input, std::span<const double> grad_output,
                        std::span<double> grad_weights, std::span<double> grad_bias,
                        AffineDims dims) {
  const auto outs = static_cast<std::int64_t>(dims.out);
#pragma omp parallel for schedule(static) if (worth_parallel(dims.batch * dims.out * dims.in))
  for (std::int64_t oi = 0; oi < outs; ++oi) {
    const auto o = static_cast<std::size_t>(oi);
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
  const auto rows = static_cast<std::int64_t>(dims.batch);
#pragma omp parallel for schedule(static) if (worth_parallel(dims.batch * dims.out * dims.in))
  for (std::int64_t bi = 0; bi < rows; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
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
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static) if (worth_parallel(values.size()))
  for (std::int64_t k = 0; k < n; ++k) {
    double& v = values[static_cast<std::size_t>(k)];
    v = v > 0.0 ? v : 0.0;
  }
}

void relu_mask(std::span<const double> activated, std::span<double> grad) {
  const auto n = static_cast<std::int64_t>(grad.size());
#pragma omp parallel for schedule(static) if (worth_parallel(grad.size()))
  for (std::int64_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

void axpy_descent(std::span<double> parameters, std::span<const double> gradient, double rate) {
  const auto n = static_cast<std::int64_t>(parameters.size());
#pragma omp parallel for schedule(static) if (worth_parallel(parameters.size()))
  for (std::int64_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    parameters[i] -= rate * gradient[i];
  }
}

}  // namespace h2st::kernels
