#include "vsdl/netblocks/model_spec.hpp"

#include "vsdl/datapipe/image.hpp"
#include "vsdl/error.hpp"

namespace vsdl::netblocks {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn3d:
      return "cnn3d";
    case ModelKind::cnn_lstm:
      return "cnn-lstm";
    case ModelKind::dcnn_lstm:
      return "dcnn-lstm";
  }
  return "cnn-lstm";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cnn3d" || name == "CNN3D") return ModelKind::cnn3d;
  if (name == "cnn-lstm" || name == "CNN_LSTM") return ModelKind::cnn_lstm;
  if (name == "dcnn-lstm" || name == "DCNN_LSTM") return ModelKind::dcnn_lstm;
  throw ConfigError("unknown model kind '" + name + "' (expected cnn3d, cnn-lstm or dcnn-lstm)");
}

ModelSpec ModelSpec::desk_default(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.sequence_len = kind == ModelKind::dcnn_lstm ? datapipe::kStackSlices - 1 : datapipe::kStackSlices;
  return spec;
}

std::size_t input_slices(const ModelSpec&) { return datapipe::kStackSlices; }

namespace {

struct Extent {
  std::size_t depth, side, channels;
};

std::size_t stage_extent(std::size_t in, const ExtractorStage& s, std::size_t index, const char* axis) {
  const std::size_t pad = s.kernel / 2;
  const std::size_t padded = in + 2 * pad;
  const std::string where = "extractor stage " + std::to_string(index) + " (" + axis + "): ";
  if (s.kernel > padded) {
    throw ConfigError(where + "kernel " + std::to_string(s.kernel) + " exceeds padded extent " + std::to_string(padded));
  }
  if ((padded - s.kernel) % s.stride != 0) {
    throw ConfigError(where + "stride " + std::to_string(s.stride) + " gives a non-integral output extent from " +
                      std::to_string(in));
  }
  std::size_t out = (padded - s.kernel) / s.stride + 1;
  if (s.pool > 1) {
    if (s.pool > out) {
      throw ConfigError(where + "pool " + std::to_string(s.pool) + " exceeds extent " + std::to_string(out));
    }
    out = (out - s.pool) / s.pool + 1;
  }
  return out;
}

Extent walk_stages(const ModelSpec& spec) {
  Extent e{spec.kind == ModelKind::cnn3d ? datapipe::kStackSlices : 1, spec.input_side, 1};
  for (std::size_t i = 0; i < spec.extractor.size(); ++i) {
    const auto& s = spec.extractor[i];
    if (s.channels == 0 || s.kernel == 0 || s.stride == 0 || s.pool == 0) {
      throw ConfigError("extractor stage " + std::to_string(i) + " has a zero dimension");
    }
    e.side = stage_extent(e.side, s, i, "spatial");
    if (spec.kind == ModelKind::cnn3d) e.depth = stage_extent(e.depth, s, i, "depth");
    e.channels = s.channels;
  }
  return e;
}

}  // namespace

void ModelSpec::validate() const {
  const std::size_t expected_len =
      kind == ModelKind::dcnn_lstm ? datapipe::kStackSlices - 1 : datapipe::kStackSlices;
  if (sequence_len != expected_len) {
    throw ConfigError(to_string(kind) + " requires sequence_len " + std::to_string(expected_len) + ", got " +
                      std::to_string(sequence_len));
  }
  if (input_side == 0) throw ConfigError("input_side must be positive");
  if (extractor.empty()) throw ConfigError("extractor needs at least one stage");
  if (head.empty() || head.back() != 1) throw ConfigError("head must end in width 1");
  for (auto w : head) {
    if (w == 0) throw ConfigError("head widths must be positive");
  }
  if (kind != ModelKind::cnn3d && (lstm_layers == 0 || lstm_hidden == 0)) {
    throw ConfigError("lstm_layers and lstm_hidden must be positive");
  }
  walk_stages(*this);
}

std::size_t ModelSpec::feature_width() const {
  const auto e = walk_stages(*this);
  return e.channels * e.depth * e.side * e.side;
}

std::size_t ModelSpec::parameter_count() const {
  std::size_t total = 0;
  std::size_t in_channels = 1;
  const std::size_t kernel_rank = kind == ModelKind::cnn3d ? 3 : 2;
  for (const auto& s : extractor) {
    std::size_t taps = 1;
    for (std::size_t r = 0; r < kernel_rank; ++r) taps *= s.kernel;
    total += s.channels * in_channels * taps + s.channels;
    in_channels = s.channels;
  }
  std::size_t width = feature_width();
  if (kind != ModelKind::cnn3d) {
    for (std::size_t l = 0; l < lstm_layers; ++l) {
      total += 4 * lstm_hidden * (width + lstm_hidden) + 4 * lstm_hidden;
      width = lstm_hidden;
    }
  }
  for (auto w : head) {
    total += w * width + w;
    width = w;
  }
  return total;
}

json to_json(const ModelSpec& spec) {
  json stages = json::array();
  for (const auto& s : spec.extractor) {
    stages.push_back({{"channels", s.channels}, {"kernel", s.kernel}, {"stride", s.stride}, {"pool", s.pool}});
  }
  return {{"kind", to_string(spec.kind)},      {"input_side", spec.input_side},
          {"sequence_len", spec.sequence_len}, {"extractor", stages},
          {"lstm_layers", spec.lstm_layers},   {"lstm_hidden", spec.lstm_hidden},
          {"head", spec.head}};
}

ModelSpec model_spec_from_json(const json& doc) {
  try {
    ModelSpec spec = ModelSpec::desk_default(model_kind_from_string(doc.at("kind").get<std::string>()));
    spec.input_side = doc.value("input_side", spec.input_side);
    spec.sequence_len = doc.value("sequence_len", spec.sequence_len);
    if (doc.contains("extractor")) {
      spec.extractor.clear();
      for (const auto& s : doc.at("extractor")) {
        spec.extractor.push_back({s.at("channels").get<std::size_t>(), s.at("kernel").get<std::size_t>(),
                                  s.value("stride", std::size_t{1}), s.value("pool", std::size_t{2})});
      }
    }
    spec.lstm_layers = doc.value("lstm_layers", spec.lstm_layers);
    spec.lstm_hidden = doc.value("lstm_hidden", spec.lstm_hidden);
    if (doc.contains("head")) spec.head = doc.at("head").get<std::vector<std::size_t>>();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model spec: ") + e.what());
  }
}

}  // namespace vsdl::netblocks
