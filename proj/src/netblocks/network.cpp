#include "vsdl/netblocks/network.hpp"

#include <cmath>
#include <random>

#include "vsdl/autodiff/lstm.hpp"
#include "vsdl/autodiff/ops.hpp"
#include "vsdl/datapipe/preprocess.hpp"
#include "vsdl/error.hpp"

namespace vsdl::netblocks {

namespace ad = vsdl::autodiff;
using datapipe::Image;
using datapipe::SliceStack;

Network::Network(ModelSpec spec, std::uint64_t seed, std::vector<NamedParameter> parameters)
    : spec_(std::move(spec)), seed_(seed), parameters_(std::move(parameters)) {}

Tensor& Network::parameter(const std::string& name) {
  for (auto& p : parameters_) {
    if (p.name == name) return p.tensor;
  }
  throw ConfigError("network has no parameter named '" + name + "'");
}

const Tensor& Network::parameter(const std::string& name) const {
  return const_cast<Network*>(this)->parameter(name);
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters_) n += p.tensor.size();
  return n;
}

std::vector<std::vector<float>> Network::snapshot() const {
  std::vector<std::vector<float>> out;
  out.reserve(parameters_.size());
  for (const auto& p : parameters_) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void Network::restore(const std::vector<std::vector<float>>& values) {
  if (values.size() != parameters_.size()) throw ShapeError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto dst = parameters_[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) {
      throw ShapeError("restore: size mismatch for '" + parameters_[i].name + "'");
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

std::size_t timesteps(const ModelSpec& spec) { return spec.sequence_len; }

namespace {

Tensor he_normal(std::mt19937_64& rng, ad::Shape shape, std::size_t fan_in) {
  std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  std::vector<float> values(ad::element_count(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(values), true);
}

Tensor uniform(std::mt19937_64& rng, ad::Shape shape, float bound) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  std::vector<float> values(ad::element_count(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from_data(std::move(shape), std::move(values), true);
}

std::string stage_prefix(const ModelSpec& spec, std::size_t i) {
  return (spec.kind == ModelKind::cnn3d ? "conv3d." : "conv2d.") + std::to_string(i);
}

void check_kind(const Network& net, ModelKind kind) {
  if (net.spec().kind != kind) {
    throw ConfigError("network is " + to_string(net.spec().kind) + ", expected " + to_string(kind));
  }
}

Tensor frames_tensor(const std::vector<Image>& frames, ad::Shape shape) {
  std::vector<float> values;
  values.reserve(ad::element_count(shape));
  for (const auto& f : frames) values.insert(values.end(), f.pixels.begin(), f.pixels.end());
  return Tensor::from_data(std::move(shape), std::move(values));
}

Tensor apply_head(const Network& net, Tensor features) {
  const auto& head = net.spec().head;
  Tensor x = std::move(features);
  for (std::size_t i = 0; i < head.size(); ++i) {
    const std::string p = "head." + std::to_string(i);
    x = ad::dense(x, net.parameter(p + ".weight"), net.parameter(p + ".bias"));
    x = i + 1 < head.size() ? ad::relu(x) : ad::sigmoid(x);
  }
  return x;
}

Tensor recurrent_forward(const Network& net, const SliceStack& stack) {
  const auto frames = model_input_frames(net.spec(), stack);
  auto features = extract_sequence_features(net, frames);
  std::vector<ad::LstmParams<float>> layers;
  for (std::size_t l = 0; l < net.spec().lstm_layers; ++l) {
    const std::string p = "lstm." + std::to_string(l);
    layers.push_back({net.parameter(p + ".w_input"), net.parameter(p + ".w_hidden"), net.parameter(p + ".bias")});
  }
  return apply_head(net, ad::multilayer_lstm(features, layers));
}

}  // namespace

Network build(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<NamedParameter> params;
  const bool volumetric = spec.kind == ModelKind::cnn3d;
  std::size_t in_channels = 1;
  for (std::size_t i = 0; i < spec.extractor.size(); ++i) {
    const auto& s = spec.extractor[i];
    ad::Shape kshape{s.channels, in_channels, s.kernel, s.kernel};
    if (volumetric) kshape.push_back(s.kernel);
    const std::size_t fan_in = ad::element_count(kshape) / s.channels;
    const auto prefix = stage_prefix(spec, i);
    params.push_back({prefix + ".kernel", he_normal(rng, kshape, fan_in)});
    params.push_back({prefix + ".bias", Tensor::zeros({s.channels}, true)});
    in_channels = s.channels;
  }
  std::size_t width = spec.feature_width();
  if (!volumetric) {
    const std::size_t h = spec.lstm_hidden;
    const float bound = 1.0f / std::sqrt(static_cast<float>(h));
    for (std::size_t l = 0; l < spec.lstm_layers; ++l) {
      const std::string p = "lstm." + std::to_string(l);
      params.push_back({p + ".w_input", uniform(rng, {4 * h, width}, bound)});
      params.push_back({p + ".w_hidden", uniform(rng, {4 * h, h}, bound)});
      params.push_back({p + ".bias", uniform(rng, {4 * h}, bound)});
      width = h;
    }
  }
  for (std::size_t i = 0; i < spec.head.size(); ++i) {
    const std::string p = "head." + std::to_string(i);
    params.push_back({p + ".weight", he_normal(rng, {spec.head[i], width}, width)});
    params.push_back({p + ".bias", Tensor::zeros({spec.head[i]}, true)});
    width = spec.head[i];
  }
  return Network(spec, seed, std::move(params));
}

std::vector<Image> model_input_frames(const ModelSpec& spec, const SliceStack& stack) {
  const std::size_t expected = input_slices(spec);
  if (stack.slices.size() != expected) {
    throw InputError("stack '" + stack.id + "' has " + std::to_string(stack.slices.size()) + " slices, model expects " +
                     std::to_string(expected));
  }
  for (std::size_t k = 0; k < stack.slices.size(); ++k) {
    const auto& s = stack.slices[k];
    if (s.height != spec.input_side || s.width != spec.input_side || s.pixels.size() != s.height * s.width) {
      throw InputError("slice " + std::to_string(k) + " of stack '" + stack.id + "' is " + std::to_string(s.height) +
                       "x" + std::to_string(s.width) + ", model expects " + std::to_string(spec.input_side) + "x" +
                       std::to_string(spec.input_side));
    }
    for (float v : s.pixels) {
      if (!(v >= 0.0f && v <= 1.0f)) {
        throw InputError("slice " + std::to_string(k) + " of stack '" + stack.id + "' is not normalized to [0,1]");
      }
    }
  }
  if (spec.kind == ModelKind::dcnn_lstm) return datapipe::differential(stack);
  return stack.slices;
}

Tensor extract_sequence_features(const Network& net, const std::vector<Image>& frames) {
  const auto& spec = net.spec();
  const std::size_t side = spec.input_side;
  Tensor x = frames_tensor(frames, {frames.size(), 1, side, side});
  for (std::size_t i = 0; i < spec.extractor.size(); ++i) {
    const auto& s = spec.extractor[i];
    const auto prefix = stage_prefix(spec, i);
    x = ad::conv2d(x, net.parameter(prefix + ".kernel"), net.parameter(prefix + ".bias"), static_cast<int>(s.stride),
                   static_cast<int>(s.kernel / 2));
    x = ad::relu(x);
    if (s.pool > 1) x = ad::maxpool2d(x, static_cast<int>(s.pool), static_cast<int>(s.pool));
  }
  const std::size_t n = frames.size();
  return ad::reshape(x, {n, x.size() / n});
}

Tensor forward_cnn3d(const Network& net, const SliceStack& stack) {
  check_kind(net, ModelKind::cnn3d);
  const auto& spec = net.spec();
  const auto frames = model_input_frames(spec, stack);
  const std::size_t side = spec.input_side;
  Tensor x = frames_tensor(frames, {1, frames.size(), side, side});
  for (std::size_t i = 0; i < spec.extractor.size(); ++i) {
    const auto& s = spec.extractor[i];
    const auto prefix = stage_prefix(spec, i);
    x = ad::conv3d(x, net.parameter(prefix + ".kernel"), net.parameter(prefix + ".bias"), static_cast<int>(s.stride),
                   static_cast<int>(s.kernel / 2));
    x = ad::relu(x);
    if (s.pool > 1) x = ad::maxpool3d(x, static_cast<int>(s.pool), static_cast<int>(s.pool));
  }
  return apply_head(net, ad::reshape(x, {x.size()}));
}

Tensor forward_cnn_lstm(const Network& net, const SliceStack& stack) {
  check_kind(net, ModelKind::cnn_lstm);
  return recurrent_forward(net, stack);
}

Tensor forward_dcnn_lstm(const Network& net, const SliceStack& stack) {
  check_kind(net, ModelKind::dcnn_lstm);
  return recurrent_forward(net, stack);
}

Tensor forward(const Network& net, const SliceStack& stack) {
  switch (net.spec().kind) {
    case ModelKind::cnn3d:
      return forward_cnn3d(net, stack);
    case ModelKind::cnn_lstm:
      return forward_cnn_lstm(net, stack);
    case ModelKind::dcnn_lstm:
      return forward_dcnn_lstm(net, stack);
  }
  throw ConfigError("unknown model kind");
}

float predict(const Network& net, const SliceStack& stack) {
  ad::NoGradGuard no_grad;
  return forward(net, stack).item();
}

}  // namespace vsdl::netblocks
