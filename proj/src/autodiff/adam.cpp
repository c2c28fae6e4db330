#include "vsdl/autodiff/adam.hpp"

#include <cmath>
#include <string>

#include "vsdl/error.hpp"

namespace vsdl::autodiff {

template <typename T>
void adam_step(BasicTensor<T>& params, std::span<const T> grads, AdamState<T>& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw ShapeError("adam_step: length mismatch (params " + std::to_string(n) + ", grads " +
                     std::to_string(grads.size()) + ", moments " + std::to_string(state.first_moment.size()) +
                     "/" + std::to_string(state.second_moment.size()) + ")");
  }
  const auto& hp = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(hp.beta1, t);
  const double bias2 = 1.0 - std::pow(hp.beta2, t);
  auto theta = params.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    const double m = hp.beta1 * state.first_moment[i] + (1.0 - hp.beta1) * g;
    const double v = hp.beta2 * state.second_moment[i] + (1.0 - hp.beta2) * g * g;
    state.first_moment[i] = static_cast<T>(m);
    state.second_moment[i] = static_cast<T>(v);
    const double update = hp.learning_rate * (m / bias1) / (std::sqrt(v / bias2) + hp.epsilon);
    theta[i] = static_cast<T>(theta[i] - update);
  }
}

template void adam_step(Tensor&, std::span<const float>, AdamState<float>&);
template void adam_step(Tensor64&, std::span<const double>, AdamState<double>&);

}  // namespace vsdl::autodiff
