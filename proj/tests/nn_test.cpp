#include "h2st/nn.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace h2st {
namespace {

TEST(DenseLayer, XavierBoundsAndZeroBias) {
  Rng rng(1);
  const auto layer = DenseLayer::xavier(32, 128, rng);
  const double bound = std::sqrt(6.0 / 160.0);
  EXPECT_DOUBLE_EQ(DenseLayer::xavier_bound(32, 128), bound);
  for (double w : layer.weights) EXPECT_LE(std::fabs(w), bound);
  for (double b : layer.bias) EXPECT_EQ(b, 0.0);
}

TEST(Mlp, ForwardMatchesOracle) {
  Rng rng(2);
  const std::vector<std::size_t> widths{16, 8, 3};
  const Mlp net(5, widths, false, rng);
  Rng data(3);
  Matrix x(4, 5);
  for (auto& v : x.data) v = data.normal();
  const auto out = net.forward(x).output();
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto expect =
        oracle::mlp_forward(net.layers(), {x.row(r).begin(), x.row(r).end()}, false);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(r, c), expect[c], 1e-12);
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(4);
  const std::vector<std::size_t> widths{6, 2};
  Mlp net(3, widths, true, rng);
  Rng data(5);
  Matrix x(5, 3);
  for (auto& v : x.data) v = data.normal();
  // Loss = sum of outputs weighted by fixed coefficients.
  Matrix coef(5, 2);
  for (auto& v : coef.data) v = data.normal();
  const auto loss_at = [&](std::span<const double> p) {
    Mlp copy = net;
    unflatten_from(p, copy.layers());
    const auto y = copy.forward(x).output();
    double s = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += coef.data[i] * y.data[i];
    return s;
  };
  std::vector<double> params;
  flatten_into(net.layers(), params);
  const auto grads = net.backward(net.forward(x), coef);
  std::vector<double> analytic;
  flatten_into(grads, analytic);
  EXPECT_LT(oracle::relative_error(analytic, oracle::numeric_gradient(loss_at, params)), 1e-6);
}

TEST(Mlp, FlattenRoundTrip) {
  Rng rng(6);
  const std::vector<std::size_t> widths{4, 1};
  Mlp a(3, widths, false, rng);
  std::vector<double> flat;
  flatten_into(a.layers(), flat);
  EXPECT_EQ(flat.size(), a.parameter_count());
  Rng other(7);
  Mlp b(3, widths, false, other);
  EXPECT_EQ(unflatten_from(flat, b.layers()), flat.size());
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace h2st
