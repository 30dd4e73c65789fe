#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "afecnn/checkpoint.hpp"
#include "afecnn/errors.hpp"
#include "afecnn/synth.hpp"
#include "afecnn/trainer.hpp"
#include "test_support.hpp"

using namespace afecnn;

namespace {

ModelConfig tiny(std::size_t classes = 4) {
  ModelConfig c(Topology::humanoid15(), classes, 64);
  c.channels = {4, 4, 8};
  c.fc_hidden = 16;
  c.scale_hidden = 8;
  return c;
}

std::vector<SkeletonSequence> small_synth(int per_class, std::uint64_t seed) {
  SynthConfig s;
  s.class_count = 4;
  s.sequences_per_class = per_class;
  s.seed = seed;
  s.frames = 40;
  return synth_generate(s);
}

PreparedSet prepare_all(const std::vector<SkeletonSequence>& data, const ModelConfig& cfg) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return prepare(data, idx, cfg);
}

std::string bytes_of(const ModelParams<float>& p, const ModelConfig& cfg) {
  std::ostringstream out;
  write_checkpoint(out, p, cfg);
  return out.str();
}

}  // namespace

TEST(TrainConfig, SingleDecayAfterEpochTwenty) {
  const TrainConfig tc;
  for (std::size_t e = 1; e <= 20; ++e) EXPECT_EQ(tc.lr_at(e), 0.001);
  for (std::size_t e = 21; e <= 60; ++e) EXPECT_EQ(tc.lr_at(e), 0.0001);
}

TEST(TrainConfig, RejectsNonsense) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), UsageError);
  tc = TrainConfig{};
  tc.lr = 0;
  EXPECT_THROW(tc.validate(), UsageError);
  tc = TrainConfig{};
  tc.epochs = 0;
  EXPECT_THROW(tc.validate(), UsageError);
}

TEST(LogLine, Format) {
  EXPECT_EQ(format_log_line({3, 0.5, std::nan(""), 0.001}), "3,0.5,nan,0.001");
  EXPECT_EQ(format_log_line({21, 1.25, 0.875, 0.0001}), "21,1.25,0.875,0.0001");
  EXPECT_STREQ(kLogHeader, "epoch,loss,test_acc,lr");
}

TEST(Prepare, RejectsMisfits) {
  auto data = small_synth(1, 1);
  EXPECT_THROW(prepare_all(data, tiny(2)), ConfigError);
  ModelConfig ntu(Topology::ntu25(), 4, 64);
  EXPECT_THROW(prepare_all(data, ntu), ConfigError);
  const auto ok = prepare_all(data, tiny());
  EXPECT_EQ(ok.size(), 4u);
  EXPECT_EQ(ok.inputs[0].shape(), (Shape{64, 15, 3}));
}

TEST(Evaluate, AgreesWithRecount) {
  const ModelConfig cfg = tiny();
  const auto set = prepare_all(small_synth(5, 2), cfg);
  const auto p = ModelParams<float>::initialize(cfg, 2);
  const Evaluation ev = evaluate(p, cfg, set);
  ASSERT_EQ(ev.predictions.size(), set.size());
  std::size_t correct = 0;
  std::vector<std::size_t> hit(4, 0), seen(4, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    correct += ev.predictions[i] == set.labels[i];
    ++seen[set.labels[i]];
    hit[set.labels[i]] += ev.predictions[i] == set.labels[i];
  }
  EXPECT_EQ(ev.accuracy, double(correct) / double(set.size()));
  EXPECT_EQ(ev.confusion.total(), set.size());
  EXPECT_EQ(ev.confusion.trace(), correct);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(ev.confusion.row_sum(c), seen[c]);
    EXPECT_EQ(ev.per_class[c], double(hit[c]) / double(seen[c]));
  }
  EXPECT_THROW(evaluate(p, cfg, PreparedSet{}), UsageError);
}

TEST(Evaluate, ConstantPredictorAndUndefinedClasses) {
  ModelConfig cfg = tiny(6);
  auto p = ModelParams<float>::initialize(cfg, 3);
  for (float& v : p.classifier.fc2_weight.mutable_data()) v = 0;
  for (float& v : p.classifier.fc2_bias.mutable_data()) v = 0;
  p.classifier.fc2_bias.mutable_data()[2] = 1;
  const auto set = prepare_all(small_synth(3, 3), cfg);
  const Evaluation ev = evaluate(p, cfg, set);
  EXPECT_EQ(ev.accuracy, 0.25);
  EXPECT_EQ(ev.per_class[2], 1.0);
  EXPECT_EQ(ev.per_class[0], 0.0);
  EXPECT_TRUE(std::isnan(ev.per_class[4]) && std::isnan(ev.per_class[5]));
  EXPECT_EQ(mean_defined(ev.per_class), 0.25);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(ev.confusion.at(t, 2), 3u);
}

TEST(Train, DeterministicForASeed) {
  const ModelConfig cfg = tiny();
  const auto data = small_synth(4, 4);
  const auto set = prepare_all(data, cfg);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 5;
  tc.seed = 11;
  const auto a = train(set, set, cfg, tc), b = train(set, set, cfg, tc);
  ASSERT_EQ(a.log.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) EXPECT_EQ(format_log_line(a.log[e]), format_log_line(b.log[e]));
  EXPECT_EQ(bytes_of(a.params, cfg), bytes_of(b.params, cfg));
  tc.seed = 12;
  EXPECT_NE(bytes_of(train(set, set, cfg, tc).params, cfg), bytes_of(a.params, cfg));
}

TEST(Train, LossFallsAndLogIsComplete) {
  const ModelConfig cfg = tiny();
  const auto set = prepare_all(small_synth(6, 5), cfg);
  TrainConfig tc;
  tc.epochs = 8;
  tc.batch_size = 8;
  tc.decay_after = 6;
  std::vector<EpochLog> seen;
  const auto r = train(set, PreparedSet{}, cfg, tc, [&](const EpochLog& e) { seen.push_back(e); });
  ASSERT_EQ(seen.size(), 8u);
  EXPECT_LT(r.log.back().loss, r.log.front().loss);
  for (std::size_t e = 0; e < 8; ++e) {
    EXPECT_EQ(seen[e].epoch, e + 1);
    EXPECT_TRUE(std::isnan(seen[e].test_acc));
    EXPECT_EQ(seen[e].lr, tc.lr_at(e + 1));
  }
  EXPECT_THROW(train(PreparedSet{}, set, cfg, tc), UsageError);
}

TEST(Train, DisabledBlocksStayAtInitialisation) {
  ModelConfig cfg = tiny();
  const auto set = prepare_all(small_synth(2, 6), cfg);
  TrainConfig tc;
  tc.epochs = 1;
  tc.flags = {false, false, false, false, true};
  tc.seed = 6;
  const auto r = train(set, PreparedSet{}, cfg, tc);
  cfg.flags = tc.flags;
  const auto init = ModelParams<float>::initialize(cfg, 6);
  const auto trained = r.params.named(), fresh = init.named();
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const bool frozen = trained[i].name.starts_with("joint_scale.") || trained[i].name.starts_with("attention.") ||
                        trained[i].name.starts_with("embedding.") || trained[i].name.starts_with("temporal.");
    const std::vector<float> a(trained[i].tensor.data().begin(), trained[i].tensor.data().end());
    const std::vector<float> b(fresh[i].tensor.data().begin(), fresh[i].tensor.data().end());
    if (frozen) {
      EXPECT_EQ(a, b) << trained[i].name;
    } else if (trained[i].name.starts_with("classifier.")) {
      EXPECT_NE(a, b) << trained[i].name;
    }
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  ModelConfig cfg = tiny();
  cfg.flags.te = false;
  auto p = ModelParams<float>::initialize(cfg, 7);
  std::mt19937_64 rng(7);
  for (auto& [name, t] : p.named()) t.mutable_data()[0] = static_cast<float>(rng() % 1000) / 7.0f;
  const std::string blob = bytes_of(p, cfg);
  std::istringstream in(blob);
  const Checkpoint ck = read_checkpoint(in);
  EXPECT_EQ(ck.config.topology, cfg.topology);
  EXPECT_EQ(ck.config.classes, cfg.classes);
  EXPECT_EQ(ck.config.channels, cfg.channels);
  EXPECT_EQ(ck.config.flags, cfg.flags);
  EXPECT_EQ(bytes_of(ck.params, ck.config), blob);

  const auto set = prepare_all(small_synth(3, 7), cfg);
  const auto a = evaluate(p, cfg, set), b = evaluate(ck.params, ck.config, set);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.predictions, b.predictions);
}

TEST(Checkpoint, HeaderLayout) {
  const ModelConfig cfg = tiny();
  const std::string blob = bytes_of(ModelParams<float>::initialize(cfg, 8), cfg);
  EXPECT_EQ(blob.substr(0, 4), "AFEC");
  EXPECT_EQ(blob.substr(4, 4), std::string("\x01\0\0\0", 4));
}

TEST(Checkpoint, RejectsDamage) {
  const ModelConfig cfg = tiny();
  const std::string blob = bytes_of(ModelParams<float>::initialize(cfg, 9), cfg);
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{10}, std::size_t{64}, blob.size() / 2,
                          blob.size() - 1}) {
    std::istringstream in(blob.substr(0, len));
    EXPECT_THROW(read_checkpoint(in), CheckpointError) << len;
  }
  std::string bad = blob;
  bad[0] = 'X';
  std::istringstream magic(bad);
  try {
    read_checkpoint(magic);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
  bad = blob;
  bad[4] = 2;
  std::istringstream version(bad);
  try {
    read_checkpoint(version);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
  EXPECT_THROW(load_checkpoint(test::scratch_dir("ck_missing") / "none.afec"), CheckpointError);
}

TEST(Ablation, DefaultGrid) {
  const auto grid = default_ablation_grid();
  ASSERT_EQ(grid.size(), 7u);
  EXPECT_EQ(grid.front().name, "raw");
  EXPECT_EQ(grid.front().flags, (EnhancementFlags{false, false, false, false, true}));
  EXPECT_EQ(grid[5].flags, EnhancementFlags{});
  EXPECT_EQ(grid.back().flags, (EnhancementFlags{true, true, true, true, false}));
}

TEST(Ablation, RunsEveryVariantOnBothSplits) {
  SynthConfig s;
  s.class_count = 4;
  s.sequences_per_class = 6;
  s.view_yaw_range = 60;
  s.frames = 40;
  const auto data = synth_generate(s);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  const std::vector<AblationVariant> grid{default_ablation_grid()[0], default_ablation_grid()[6]};
  std::vector<std::string> progress;
  const auto r = ablate(data, tiny(), tc, grid, [&](const std::string& n) { progress.push_back(n); });
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(progress, (std::vector<std::string>{"raw", "-JVTM"}));
  for (const auto& row : r) {
    EXPECT_GE(row.cross_subject, 0.0);
    EXPECT_LE(row.cross_subject, 1.0);
    EXPECT_GE(row.cross_view, 0.0);
    EXPECT_LE(row.cross_view, 1.0);
  }
}
