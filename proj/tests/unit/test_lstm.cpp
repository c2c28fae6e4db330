#include <doctest.h>

#include <cmath>
#include <random>

#include "vsdl/autodiff/lstm.hpp"
#include "vsdl/error.hpp"

using namespace vsdl;
using namespace vsdl::autodiff;

namespace {

LstmParams<double> zero_params(std::size_t in, std::size_t h) {
  return {Tensor64::zeros({4 * h, in}), Tensor64::zeros({4 * h, h}), Tensor64::zeros({4 * h})};
}

LstmParams<double> random_params(std::size_t in, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  auto fill = [&](Shape s) {
    std::vector<double> v(element_count(s));
    for (auto& x : v) x = d(rng);
    return Tensor64::from_data(s, v);
  };
  return {fill({4 * h, in}), fill({4 * h, h}), fill({4 * h})};
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar re-derivation of one cell step from the gate equations.
void reference_cell(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c,
                    const LstmParams<double>& p) {
  const std::size_t H = h.size(), I = x.size();
  std::vector<double> pre(4 * H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double acc = p.bias.at(r);
    for (std::size_t i = 0; i < I; ++i) acc += p.w_input.at(r * I + i) * x[i];
    for (std::size_t j = 0; j < H; ++j) acc += p.w_hidden.at(r * H + j) * h[j];
    pre[r] = acc;
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sig(pre[j]), f = sig(pre[H + j]), o = sig(pre[2 * H + j]), g = std::tanh(pre[3 * H + j]);
    c[j] = f * c[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
}

}  // namespace

TEST_CASE("zero parameters with zero state stay at zero") {
  auto s = lstm_cell(Tensor64::zeros({3}), Tensor64::zeros({2}), Tensor64::zeros({2}), zero_params(3, 2));
  for (double v : s.h.data()) CHECK(v == 0.0);
  for (double v : s.c.data()) CHECK(v == 0.0);
}

TEST_CASE("zero parameters halve the cell state") {
  const std::vector<double> c0{0.8, -1.6, 3.0};
  auto s = lstm_cell(Tensor64::from_data({2}, {0.3, -0.2}), Tensor64::zeros({3}), Tensor64::from_data({3}, c0),
                     zero_params(2, 3));
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(s.c.at(j) == doctest::Approx(0.5 * c0[j]).epsilon(1e-15));
    CHECK(s.h.at(j) == doctest::Approx(0.5 * std::tanh(0.5 * c0[j])).epsilon(1e-15));
  }
}

TEST_CASE("saturated forget gate carries the cell state") {
  auto p = zero_params(2, 3);
  for (std::size_t j = 0; j < 3; ++j) p.bias.mutable_data()[3 + j] = 20.0;
  const std::vector<double> c0{0.8, -1.6, 3.0};
  auto s = lstm_cell(Tensor64::from_data({2}, {0.3, -0.2}), Tensor64::zeros({3}), Tensor64::from_data({3}, c0), p);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(s.c.at(j) - c0[j]) <= 1e-6);
}

TEST_CASE("lstm_cell matches the scalar gate equations") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t I = 1 + trial % 4, H = 1 + trial % 3;
    auto p = random_params(I, H, rng);
    std::vector<double> x(I), h(H), c(H);
    for (auto& v : x) v = d(rng);
    for (auto& v : h) v = d(rng);
    for (auto& v : c) v = d(rng);
    auto s = lstm_cell(Tensor64::from_data({I}, x), Tensor64::from_data({H}, h), Tensor64::from_data({H}, c), p);
    reference_cell(x, h, c, p);
    for (std::size_t j = 0; j < H; ++j) {
      CHECK(s.h.at(j) == doctest::Approx(h[j]).epsilon(1e-12));
      CHECK(s.c.at(j) == doctest::Approx(c[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("multilayer_lstm base case equals one cell step") {
  std::mt19937_64 rng(8);
  auto p = random_params(3, 2, rng);
  auto x = Tensor64::from_data({3}, {0.1, -0.4, 0.9});
  auto cell = lstm_cell(x, Tensor64::zeros({2}), Tensor64::zeros({2}), p);
  auto out = multilayer_lstm(std::vector<Tensor64>{x}, std::vector<LstmParams<double>>{p});
  for (std::size_t j = 0; j < 2; ++j) CHECK(out.at(j) == doctest::Approx(cell.h.at(j)).epsilon(1e-14));
}

TEST_CASE("multilayer_lstm unrolls two steps and two layers by hand") {
  std::mt19937_64 rng(12);
  auto p1 = random_params(2, 3, rng), p2 = random_params(3, 3, rng);
  const std::vector<std::vector<double>> seq{{0.5, -0.5}, {-0.25, 1.0}};
  std::vector<double> h1(3, 0.0), c1(3, 0.0), h2(3, 0.0), c2(3, 0.0);
  for (const auto& x : seq) {
    reference_cell(x, h1, c1, p1);
    reference_cell(h1, h2, c2, p2);
  }
  auto rows = Tensor64::from_data({2, 2}, {0.5, -0.5, -0.25, 1.0});
  auto out = multilayer_lstm(rows, std::vector<LstmParams<double>>{p1, p2});
  auto out_list = multilayer_lstm(std::vector<Tensor64>{Tensor64::from_data({2}, seq[0]), Tensor64::from_data({2}, seq[1])},
                                  std::vector<LstmParams<double>>{p1, p2});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(out.at(j) == doctest::Approx(h2[j]).epsilon(1e-12));
    CHECK(out_list.at(j) == doctest::Approx(h2[j]).epsilon(1e-12));
  }
}

TEST_CASE("multilayer_lstm with zero parameters outputs zero") {
  auto rows = Tensor64::from_data({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  auto out = multilayer_lstm(rows, std::vector<LstmParams<double>>{zero_params(2, 3), zero_params(3, 3)});
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm errors") {
  CHECK_THROWS_AS(multilayer_lstm(std::vector<Tensor64>{}, std::vector<LstmParams<double>>{zero_params(2, 2)}),
                  InputError);
  CHECK_THROWS_AS(lstm_cell(Tensor64::zeros({3}), Tensor64::zeros({2}), Tensor64::zeros({2}), zero_params(2, 2)),
                  ShapeError);
  CHECK_THROWS_AS(lstm_cell(Tensor64::zeros({2}), Tensor64::zeros({3}), Tensor64::zeros({2}), zero_params(2, 2)),
                  ShapeError);
}
