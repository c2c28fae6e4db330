#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsdl/autodiff/tensor.hpp"
#include "vsdl/datapipe/image.hpp"
#include "vsdl/netblocks/model_spec.hpp"

namespace vsdl::netblocks {

using autodiff::Tensor;

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Trainable weights of one architecture. Parameter order and names are
/// fixed by the spec and stable across save/load.
class Network {
 public:
  Network(ModelSpec spec, std::uint64_t seed, std::vector<NamedParameter> parameters);

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<NamedParameter>& parameters() { return parameters_; }
  const std::vector<NamedParameter>& parameters() const { return parameters_; }

  /// Throws ConfigError for unknown names.
  Tensor& parameter(const std::string& name);
  const Tensor& parameter(const std::string& name) const;

  std::size_t parameter_count() const;

  /// Flat copy of every parameter buffer, in parameter order.
  std::vector<std::vector<float>> snapshot() const;
  void restore(const std::vector<std::vector<float>>& values);

 private:
  ModelSpec spec_;
  std::uint64_t seed_;
  std::vector<NamedParameter> parameters_;
};

/// Deterministic initialization: He-normal (std sqrt(2/fan_in)) conv and
/// dense weights with zero biases, uniform +-sqrt(1/H) for LSTM gates.
Network build(const ModelSpec& spec, std::uint64_t seed);

/// Builds the graph for one stack and returns the probability as a [1]
/// tensor. Dispatches on spec().kind.
Tensor forward(const Network& net, const datapipe::SliceStack& stack);

Tensor forward_cnn3d(const Network& net, const datapipe::SliceStack& stack);
Tensor forward_cnn_lstm(const Network& net, const datapipe::SliceStack& stack);
Tensor forward_dcnn_lstm(const Network& net, const datapipe::SliceStack& stack);

/// Inference without lineage.
float predict(const Network& net, const datapipe::SliceStack& stack);

/// Timesteps (or depth slices for CNN3D) the model processes per stack.
std::size_t timesteps(const ModelSpec& spec);

/// Validates `stack` against the spec and returns the frames the model
/// consumes: the raw slices, or the successive differences for DCNN_LSTM.
std::vector<datapipe::Image> model_input_frames(const ModelSpec& spec, const datapipe::SliceStack& stack);

/// Shared-weight 2D extractor applied to every frame; returns [frames, features].
Tensor extract_sequence_features(const Network& net, const std::vector<datapipe::Image>& frames);

}  // namespace vsdl::netblocks
