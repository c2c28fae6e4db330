#include <doctest.h>

#include "vsdl/error.hpp"
#include "vsdl/netblocks/model_spec.hpp"

using namespace vsdl;
using namespace vsdl::netblocks;

namespace {

// Hand count for the desk CNN_LSTM: 64 -> 32 -> 16 -> 8 after three pooled stages.
constexpr std::size_t kConv = (8 * 1 * 9 + 8) + (16 * 8 * 9 + 16) + (32 * 16 * 9 + 32);
constexpr std::size_t kFeatures = 32 * 8 * 8;
constexpr std::size_t kLstm = (4 * 64 * (kFeatures + 64) + 4 * 64) + (4 * 64 * (64 + 64) + 4 * 64);
constexpr std::size_t kHead = (32 * 64 + 32) + (1 * 32 + 1);

}  // namespace

TEST_CASE("desk CNN_LSTM parameter count matches the hand count") {
  auto spec = ModelSpec::desk_default(ModelKind::cnn_lstm);
  spec.validate();
  CHECK(spec.feature_width() == kFeatures);
  CHECK(spec.parameter_count() == kConv + kLstm + kHead);
  CHECK(spec.parameter_count() == 581953);
}

TEST_CASE("desk DCNN_LSTM shares the CNN_LSTM weights and consumes 12 steps") {
  auto a = ModelSpec::desk_default(ModelKind::cnn_lstm);
  auto b = ModelSpec::desk_default(ModelKind::dcnn_lstm);
  CHECK(b.sequence_len == 12);
  CHECK(a.sequence_len == 13);
  CHECK(a.parameter_count() == b.parameter_count());
  CHECK(input_slices(b) == 13);
}

TEST_CASE("desk CNN3D parameter count") {
  auto spec = ModelSpec::desk_default(ModelKind::cnn3d);
  spec.validate();
  // depth 13 -> 6 -> 3 -> 1, side 64 -> 8
  CHECK(spec.feature_width() == 32 * 1 * 8 * 8);
  const std::size_t conv = (8 * 27 + 8) + (16 * 8 * 27 + 16) + (32 * 16 * 27 + 32);
  CHECK(spec.parameter_count() == conv + (32 * 2048 + 32) + 33);
}

TEST_CASE("validate rejects inconsistent specs") {
  auto bad_len = ModelSpec::desk_default(ModelKind::dcnn_lstm);
  bad_len.sequence_len = 13;
  CHECK_THROWS_AS(bad_len.validate(), ConfigError);

  auto bad_head = ModelSpec::desk_default(ModelKind::cnn_lstm);
  bad_head.head = {32, 2};
  CHECK_THROWS_AS(bad_head.validate(), ConfigError);
  bad_head.head = {};
  CHECK_THROWS_AS(bad_head.validate(), ConfigError);

  auto too_deep = ModelSpec::desk_default(ModelKind::cnn3d);
  too_deep.extractor.push_back({64, 3, 1, 2});
  CHECK_THROWS_AS(too_deep.validate(), ConfigError);

  auto bad_stride = ModelSpec::desk_default(ModelKind::cnn_lstm);
  bad_stride.input_side = 63;
  bad_stride.extractor = {{4, 4, 2, 1}};
  CHECK_THROWS_AS(bad_stride.validate(), ConfigError);

  auto zero = ModelSpec::desk_default(ModelKind::cnn_lstm);
  zero.extractor[1].channels = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
  zero = ModelSpec::desk_default(ModelKind::cnn_lstm);
  zero.lstm_hidden = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
}

TEST_CASE("model spec JSON round trip and kind names") {
  for (auto kind : {ModelKind::cnn3d, ModelKind::cnn_lstm, ModelKind::dcnn_lstm}) {
    auto spec = ModelSpec::desk_default(kind);
    spec.extractor[0].channels = 5;
    CHECK(model_spec_from_json(to_json(spec)) == spec);
    CHECK(model_kind_from_string(to_string(kind)) == kind);
  }
  CHECK(model_kind_from_string("DCNN_LSTM") == ModelKind::dcnn_lstm);
  CHECK_THROWS_AS(model_kind_from_string("vgg16"), ConfigError);
  CHECK_THROWS_AS(model_spec_from_json(nlohmann::json{{"input_side", 64}}), ConfigError);
}
