#include "vsdl/autodiff/lstm.hpp"

#include <string>

#include "vsdl/autodiff/ops.hpp"
#include "vsdl/error.hpp"

namespace vsdl::autodiff {

namespace {

template <typename T>
void check_params(const LstmParams<T>& p, std::size_t input_width) {
  if (p.w_hidden.rank() != 2 || p.w_hidden.dim(0) != 4 * p.w_hidden.dim(1)) {
    throw ShapeError("lstm: w_hidden must be [4H,H], got " + to_string(p.w_hidden.shape()));
  }
  const std::size_t h = p.hidden();
  if (p.w_input.rank() != 2 || p.w_input.dim(0) != 4 * h) {
    throw ShapeError("lstm: w_input must be [" + std::to_string(4 * h) + ",I], got " +
                     to_string(p.w_input.shape()));
  }
  if (p.w_input.dim(1) != input_width) {
    throw ShapeError("lstm: w_input expects input width " + std::to_string(p.w_input.dim(1)) + ", got " +
                     std::to_string(input_width));
  }
  if (p.bias.rank() != 1 || p.bias.dim(0) != 4 * h) {
    throw ShapeError("lstm: bias must be [" + std::to_string(4 * h) + "], got " + to_string(p.bias.shape()));
  }
}

// Recurrence given the precomputed input projection W x + b.
template <typename T>
LstmState<T> step_projected(const BasicTensor<T>& projected, const BasicTensor<T>& h_prev,
                            const BasicTensor<T>& c_prev, const BasicTensor<T>& w_hidden) {
  const std::size_t h = w_hidden.dim(1);
  BasicTensor<T> undefined;
  auto z = add(projected, dense(h_prev, w_hidden, undefined));
  auto gates = reshape(z, {4, h});
  auto i = sigmoid(select(gates, 0));
  auto f = sigmoid(select(gates, 1));
  auto o = sigmoid(select(gates, 2));
  auto g = tanh(select(gates, 3));
  auto c = add(mul(f, c_prev), mul(i, g));
  auto h_out = mul(o, tanh(c));
  return {h_out, c};
}

}  // namespace

template <typename T>
LstmState<T> lstm_cell(const BasicTensor<T>& x, const BasicTensor<T>& h_prev, const BasicTensor<T>& c_prev,
                       const LstmParams<T>& params) {
  if (x.rank() != 1) throw ShapeError("lstm_cell: x must be a vector, got " + to_string(x.shape()));
  check_params(params, x.dim(0));
  const Shape hs{params.hidden()};
  if (h_prev.shape() != hs || c_prev.shape() != hs) {
    throw ShapeError("lstm_cell: states must be " + to_string(hs) + ", got h " + to_string(h_prev.shape()) +
                     " and c " + to_string(c_prev.shape()));
  }
  return step_projected(dense(x, params.w_input, params.bias), h_prev, c_prev, params.w_hidden);
}

template <typename T>
BasicTensor<T> multilayer_lstm(const BasicTensor<T>& sequence_rows, const std::vector<LstmParams<T>>& layers) {
  if (layers.empty()) throw ConfigError("multilayer_lstm: at least one layer required");
  if (sequence_rows.rank() != 2) {
    throw ShapeError("multilayer_lstm: sequence must be [T,I], got " + to_string(sequence_rows.shape()));
  }
  const std::size_t steps = sequence_rows.dim(0);
  BasicTensor<T> rows = sequence_rows;
  BasicTensor<T> last;
  for (std::size_t layer = 0; layer < layers.size(); ++layer) {
    const auto& p = layers[layer];
    check_params(p, rows.dim(1));
    // One batched projection of all timesteps, then the recurrence.
    auto projected = dense(rows, p.w_input, p.bias);
    auto h = BasicTensor<T>::zeros({p.hidden()});
    auto c = BasicTensor<T>::zeros({p.hidden()});
    std::vector<BasicTensor<T>> outputs;
    outputs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      auto state = step_projected(select(projected, t), h, c, p.w_hidden);
      h = state.h;
      c = state.c;
      outputs.push_back(h);
    }
    last = h;
    if (layer + 1 < layers.size()) rows = stack(outputs);
  }
  return last;
}

template <typename T>
BasicTensor<T> multilayer_lstm(const std::vector<BasicTensor<T>>& sequence, const std::vector<LstmParams<T>>& layers) {
  if (sequence.empty()) throw InputError("multilayer_lstm: empty sequence");
  for (const auto& x : sequence) {
    if (x.rank() != 1 || x.shape() != sequence.front().shape()) {
      throw ShapeError("multilayer_lstm: inconsistent feature width in sequence");
    }
  }
  return multilayer_lstm(stack(sequence), layers);
}

template struct LstmParams<float>;
template struct LstmParams<double>;
template LstmState<float> lstm_cell(const Tensor&, const Tensor&, const Tensor&, const LstmParams<float>&);
template LstmState<double> lstm_cell(const Tensor64&, const Tensor64&, const Tensor64&, const LstmParams<double>&);
template Tensor multilayer_lstm(const std::vector<Tensor>&, const std::vector<LstmParams<float>>&);
template Tensor64 multilayer_lstm(const std::vector<Tensor64>&, const std::vector<LstmParams<double>>&);
template Tensor multilayer_lstm(const Tensor&, const std::vector<LstmParams<float>>&);
template Tensor64 multilayer_lstm(const Tensor64&, const std::vector<LstmParams<double>>&);

}  // namespace vsdl::autodiff
