#include <doctest.h>

#include <cmath>
#include <limits>

#include "tempdir.hpp"
#include "vsdl/autodiff/ops.hpp"
#include "vsdl/error.hpp"
#include "vsdl/phantom/phantom.hpp"
#include "vsdl/trainer/trainer.hpp"

using namespace vsdl;
using namespace vsdl::trainer;
using datapipe::SliceStack;
using netblocks::ModelKind;
using netblocks::ModelSpec;
using vsdl::testing::TempDir;

namespace {

ModelSpec small_spec(ModelKind kind) {
  auto spec = ModelSpec::desk_default(kind);
  spec.input_side = 16;
  spec.extractor = {{4, 3, 1, 2}, {8, 3, 1, 2}};
  spec.lstm_hidden = 8;
  spec.head = {8, 1};
  return spec;
}

std::vector<SliceStack> phantoms(std::size_t side, std::vector<int> labels, std::uint64_t seed) {
  phantom::PhantomParams p;
  p.side_px = side;
  std::vector<SliceStack> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back(phantom::generate_stack(labels[i], p, seed + i));
    out.back().id = "s" + std::to_string(i);
  }
  return out;
}

struct Reached {
  std::size_t epoch;
};

}  // namespace

TEST_CASE("one epoch of one batch applies exactly one Adam step") {
  auto data = phantoms(16, {1, 0, 1}, 10);
  auto net = netblocks::build(small_spec(ModelKind::cnn_lstm), 1);

  // Reference gradient of the batch-mean loss at the initial weights.
  auto ref = netblocks::build(small_spec(ModelKind::cnn_lstm), 1);
  std::vector<autodiff::Tensor> losses;
  for (const auto& s : data) losses.push_back(autodiff::bce_loss(netblocks::forward(ref, s), float(*s.label)));
  autodiff::backward(autodiff::mean(losses));

  TrainConfig cfg;
  cfg.max_epochs = 1;
  auto h = train(net, data, data, cfg);
  CHECK(h.records.size() == 1);
  CHECK(h.stopped_epoch == 1);
  CHECK(h.best_epoch == 1);
  CHECK(h.optimizer_steps == 1);
  for (std::size_t k = 0; k < net.parameters().size(); ++k) {
    const auto& before = ref.parameters()[k].tensor;
    const auto& after = net.parameters()[k].tensor;
    for (std::size_t i = 0; i < before.size(); ++i) {
      const double g = before.grad()[i];
      const double expected = before.at(i) - cfg.learning_rate * g / (std::abs(g) + cfg.epsilon);
      CHECK(std::abs(after.at(i) - expected) <= 2e-7 + 1e-6 * std::abs(expected));
    }
  }
}

TEST_CASE("training is reproducible for a fixed seed triple") {
  auto data = phantoms(16, {1, 0, 0, 1, 0, 1, 0}, 20);
  auto val = phantoms(16, {1, 0, 0}, 40);
  auto run = [&](std::uint64_t seed) {
    auto net = netblocks::build(small_spec(ModelKind::dcnn_lstm), 3);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 3;
    cfg.seed = seed;
    auto h = train(net, data, val, cfg);
    return std::pair{h, net.snapshot()};
  };
  auto [ha, wa] = run(7);
  auto [hb, wb] = run(7);
  auto [hc, wc] = run(8);
  REQUIRE(ha.records.size() == hb.records.size());
  for (std::size_t e = 0; e < ha.records.size(); ++e) {
    CHECK(ha.records[e].train_loss == hb.records[e].train_loss);
    CHECK(ha.records[e].val_loss == hb.records[e].val_loss);
  }
  CHECK(wa == wb);
  CHECK(ha.optimizer_steps == 9);
  CHECK(wa != wc);
}

TEST_CASE("patience 1 stops one epoch after a worsening validation loss") {
  auto data = phantoms(16, {1, 0, 1, 0, 1, 0, 1, 0, 1, 0}, 60);
  auto flipped = data;
  for (auto& s : flipped) s.label = 1 - *s.label;

  auto net = netblocks::build(small_spec(ModelKind::cnn3d), 5);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.patience = 1;
  cfg.max_epochs = 50;
  std::vector<EpochRecord> seen;
  auto h = train(net, data, flipped, cfg, [&](const EpochRecord& r) { seen.push_back(r); });
  REQUIRE(h.records.size() >= 2);
  CHECK(h.records[1].val_loss > h.records[0].val_loss);
  CHECK(h.stopped_epoch == 2);
  CHECK(h.best_epoch == 1);
  CHECK(seen.size() == 2);
  CHECK(seen[1].epoch == 2);
  // Best-epoch weights are restored.
  CHECK(mean_loss(net, flipped) == h.records[0].val_loss);
}

TEST_CASE("returned weights never come from after the best epoch") {
  auto data = phantoms(16, {1, 0, 1, 0, 1, 0}, 70);
  auto val = phantoms(16, {0, 1, 0, 1}, 80);
  auto net = netblocks::build(small_spec(ModelKind::cnn_lstm), 6);
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.patience = 3;
  cfg.max_epochs = 12;
  auto h = train(net, data, val, cfg);
  REQUIRE(h.best_epoch >= 1);
  CHECK(h.best_epoch <= h.stopped_epoch);
  CHECK(h.records.size() == h.stopped_epoch);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : h.records) best = std::min(best, r.val_loss);
  CHECK(h.records[h.best_epoch - 1].val_loss == best);
  CHECK(mean_loss(net, val) == best);
}

TEST_CASE("validation passes do not touch the weights") {
  auto data = phantoms(16, {1, 0}, 90);
  auto net = netblocks::build(small_spec(ModelKind::cnn3d), 8);
  const auto before = net.snapshot();
  mean_loss(net, data);
  CHECK(net.snapshot() == before);
  for (const auto& p : net.parameters())
    for (float g : p.tensor.grad()) CHECK(g == 0.0f);
}

TEST_CASE("five-sample memorization at desk scale") {
  auto data = phantoms(64, {1, 0, 1, 0, 0}, 100);
  for (auto kind : {ModelKind::cnn_lstm, ModelKind::dcnn_lstm}) {
    auto net = netblocks::build(ModelSpec::desk_default(kind), 11);
    TrainConfig cfg;
    cfg.max_epochs = 500;
    cfg.patience = 500;
    std::size_t reached = 0;
    try {
      train(net, data, data, cfg, [](const EpochRecord& r) {
        if (r.train_loss < 0.05) throw Reached{r.epoch};
      });
    } catch (const Reached& r) {
      reached = r.epoch;
    }
    INFO(netblocks::to_string(kind));
    CHECK(reached >= 1);
    CHECK(reached <= 500);
  }
}

TEST_CASE("train rejects bad data and configuration") {
  auto data = phantoms(16, {1, 0}, 110);
  auto net = netblocks::build(small_spec(ModelKind::cnn_lstm), 1);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  std::vector<SliceStack> none;
  CHECK_THROWS_AS(train(net, none, data, cfg), InputError);
  CHECK_THROWS_AS(train(net, data, none, cfg), InputError);
  auto big = phantoms(32, {1, 0}, 120);
  CHECK_THROWS_AS(train(net, big, data, cfg), InputError);
  auto unlabeled = data;
  unlabeled[0].label.reset();
  CHECK_THROWS_AS(train(net, unlabeled, data, cfg), InputError);

  const std::vector<void (*)(TrainConfig&)> breakers{
      [](TrainConfig& c) { c.batch_size = 0; }, [](TrainConfig& c) { c.max_epochs = 0; },
      [](TrainConfig& c) { c.patience = 0; }, [](TrainConfig& c) { c.learning_rate = -1; }};
  for (auto broken : breakers) {
    TrainConfig c = cfg;
    broken(c);
    CHECK_THROWS_AS(train(net, data, data, c), ConfigError);
  }
}

TEST_CASE("non-finite loss names the epoch and batch") {
  auto data = phantoms(16, {1, 0}, 130);
  auto net = netblocks::build(small_spec(ModelKind::cnn_lstm), 1);
  net.parameter("head.1.bias").mutable_data()[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  cfg.max_epochs = 1;
  try {
    train(net, data, data, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 1") != std::string::npos);
  }
}

TEST_CASE("load_split takes labels from the manifest") {
  TempDir tmp;
  phantom::PhantomParams p;
  p.side_px = 16;
  auto m = phantom::generate_cohort(4, 6, p, 3, tmp.path());
  auto test = load_split(tmp / "manifest.json", m, datapipe::Split::test);
  CHECK(test.size() == m.entries_in(datapipe::Split::test).size());
  auto ids = m.entries_in(datapipe::Split::test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(test[i].id == ids[i].id);
    CHECK(test[i].label == ids[i].label);
  }
}

TEST_CASE("history CSV round trip") {
  TrainHistory h;
  h.records = {{1, 0.69314718, 0.7, std::numeric_limits<double>::quiet_NaN(), 1.25},
               {2, 0.5, 0.6, 0.75, 1.5}};
  h.best_epoch = 2;
  h.stopped_epoch = 2;
  const auto csv = history_csv(h);
  CHECK(csv.rfind("epoch,train_loss,val_loss,val_auc,seconds\n", 0) == 0);
  auto back = history_from_csv(csv);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].train_loss == 0.69314718);
  CHECK(std::isnan(back.records[0].val_auc));
  CHECK(back.records[1].val_auc == 0.75);
  CHECK(back.records[1].seconds == 1.5);
  CHECK(back.best_epoch == 2);
  CHECK(back.stopped_epoch == 2);
}

TEST_CASE("epoch time report: identity and ascending order") {
  auto history = [](std::vector<double> seconds) {
    TrainHistory h;
    for (std::size_t i = 0; i < seconds.size(); ++i) h.records.push_back({i + 1, 0, 0, 0, seconds[i]});
    h.stopped_epoch = seconds.size();
    return h;
  };
  std::vector<TimingInput> one{{"CNN_LSTM", 13, history({2.0, 4.0})}};
  auto single = epoch_time_report(one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean_seconds == 3.0);
  CHECK(single[0].epochs == 2);

  std::vector<TimingInput> three{{"CNN3D", 13, history({5.0, 5.0, 5.0})},
                                 {"CNN_LSTM", 13, history({3.0})},
                                 {"DCNN_LSTM", 12, history({2.0, 3.0})}};
  auto rows = epoch_time_report(three);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].model == "DCNN_LSTM");
  CHECK(rows[0].mean_seconds == 2.5);
  CHECK(rows[1].model == "CNN_LSTM");
  CHECK(rows[2].model == "CNN3D");
  CHECK(timing_csv(rows).rfind("model,timesteps,epochs,mean_seconds\nDCNN_LSTM,12,2,", 0) == 0);
  CHECK(format_timing_table(rows).find("CNN3D") != std::string::npos);
}
