#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vsdl/autodiff/tensor.hpp"

namespace vsdl::autodiff {

struct AdamHyperParams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter Adam moments. `step` counts completed updates.
template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  AdamHyperParams hyper;

  AdamState() = default;
  AdamState(std::size_t length, AdamHyperParams h)
      : first_moment(length, T{}), second_moment(length, T{}), hyper(h) {}
};

/// One bias-corrected Adam update of `params` in place:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
/// Throws ShapeError if the buffer lengths disagree.
template <typename T>
void adam_step(BasicTensor<T>& params, std::span<const T> grads, AdamState<T>& state);

}  // namespace vsdl::autodiff
