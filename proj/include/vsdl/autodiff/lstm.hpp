#pragma once

#include <utility>
#include <vector>

#include "vsdl/autodiff/tensor.hpp"

namespace vsdl::autodiff {

/// Gate parameters of one LSTM layer. Rows of `w_input`, `w_hidden` and
/// `bias` are four stacked blocks of `hidden` rows in the order
/// input gate, forget gate, output gate, candidate.
template <typename T>
struct LstmParams {
  BasicTensor<T> w_input;   // [4H, I]
  BasicTensor<T> w_hidden;  // [4H, H]
  BasicTensor<T> bias;      // [4H]

  std::size_t hidden() const { return w_hidden.dim(1); }
  std::size_t input_width() const { return w_input.dim(1); }
};

template <typename T>
struct LstmState {
  BasicTensor<T> h;
  BasicTensor<T> c;
};

/// One step of the standard LSTM recurrence:
///   i = sig(Wi x + Ui h + bi), f = sig(Wf x + Uf h + bf), o = sig(Wo x + Uo h + bo),
///   g = tanh(Wg x + Ug h + bg), c' = f*c + i*g, h' = o*tanh(c').
template <typename T>
LstmState<T> lstm_cell(const BasicTensor<T>& x, const BasicTensor<T>& h_prev, const BasicTensor<T>& c_prev,
                       const LstmParams<T>& params);

/// Runs a stack of LSTM layers over `sequence` from zero states and returns
/// the last hidden state of the top layer. Layer l+1 consumes the hidden
/// sequence of layer l.
template <typename T>
BasicTensor<T> multilayer_lstm(const std::vector<BasicTensor<T>>& sequence,
                               const std::vector<LstmParams<T>>& layers);

/// Same as above with the sequence given as rows of a [T, I] tensor.
template <typename T>
BasicTensor<T> multilayer_lstm(const BasicTensor<T>& sequence_rows, const std::vector<LstmParams<T>>& layers);

}  // namespace vsdl::autodiff
