#pragma once

#include <vector>

#include "vsdl/autodiff/tensor.hpp"

namespace vsdl::autodiff {

enum class Activation { relu, sigmoid, tanh };

/// 2D cross-correlation. `input` is [C_in,H,W] or a batch [N,C_in,H,W];
/// `kernels` is [C_out,C_in,kH,kW] and `bias` is [C_out]. Zero padding.
/// Throws ShapeError on mismatched dimensions and ConfigError when the
/// output extent (H + 2*padding - kH) / stride + 1 is not integral.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      const BasicTensor<T>& bias, int stride, int padding);

/// 3D cross-correlation over [C_in,D,H,W] (or batched [N,C_in,D,H,W]) with
/// kernels [C_out,C_in,kD,kH,kW]. Same stride/padding on every axis.
template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      const BasicTensor<T>& bias, int stride, int padding);

/// Max pooling over [C,H,W] or [N,C,H,W]. Output extents are floored.
/// Gradient goes to the first maximal element of each window in row-major order.
template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, int window, int stride);

/// Max pooling over [C,D,H,W] or [N,C,D,H,W] with a cubic window.
template <typename T>
BasicTensor<T> maxpool3d(const BasicTensor<T>& input, int window, int stride);

/// output_j = sum_i weights_ji * input_i + bias_j. `input` may be [N] or a
/// row batch [B,N]; weights are [M,N]. An undefined `bias` means no bias.
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  return activation(input, Activation::relu);
}
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& input) {
  return activation(input, Activation::sigmoid);
}
template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& input) {
  return activation(input, Activation::tanh);
}

// Elementwise arithmetic on identically shaped tensors.
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

/// Sum of all elements, as a rank-0 tensor.
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

/// Arithmetic mean of single-element tensors, as a rank-0 tensor.
template <typename T>
BasicTensor<T> mean(const std::vector<BasicTensor<T>>& scalars);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

/// a[index] along the leading axis.
template <typename T>
BasicTensor<T> select(const BasicTensor<T>& a, std::size_t index);

/// a[begin : begin + count] along the leading axis.
template <typename T>
BasicTensor<T> slice(const BasicTensor<T>& a, std::size_t begin, std::size_t count);

/// Stacks equally shaped tensors along a new leading axis.
template <typename T>
BasicTensor<T> stack(const std::vector<BasicTensor<T>>& parts);

/// Binary cross-entropy of a single probability against a {0,1} label.
/// The probability is clamped to [1e-7, 1 - 1e-7] before the logarithm;
/// the gradient is evaluated at the clamped point.
template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& prediction, T label);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace vsdl::autodiff
