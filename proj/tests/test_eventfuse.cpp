#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "jelly/core.hpp"
#include "jelly/error.hpp"
#include "jelly/eventfuse.hpp"
#include "jelly/framecls.hpp"
#include "jelly/rng.hpp"
#include "jelly/sonargen.hpp"

using namespace jelly;
namespace nn = jelly::nn;

namespace {

ConfidenceSequence make_seq(const std::vector<std::array<float, 6>>& rows) {
  ConfidenceSequence seq;
  seq.probs.resize(Eigen::Index(rows.size()), kNumClasses);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < kNumClasses; ++c) seq.probs(Eigen::Index(i), c) = rows[i][std::size_t(c)];
  return seq;
}

ConfidenceSequence constant_seq(const std::array<float, 6>& row, int len) {
  return make_seq(std::vector<std::array<float, 6>>(std::size_t(len), row));
}

}  // namespace

TEST_CASE("averaging reproduces the elementwise mean") {
  auto seq = make_seq({{1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f},
                       {0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.0f},
                       {0.0f, 0.0f, 0.0f, 0.0f, 1.0f, 0.0f},
                       {0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.0f}});
  auto avg = fuse_by_average(seq);
  CHECK(avg[0] == doctest::Approx(0.25f));
  CHECK(avg[1] == doctest::Approx(0.50f));
  CHECK(avg[4] == doctest::Approx(0.25f));
  CHECK(is_valid_confidence(avg));
  CHECK(argmax_class(avg) == ClassLabel::Jellyfish);
}

TEST_CASE("averaging a constant sequence is the identity") {
  std::array<float, 6> row{0.1f, 0.2f, 0.3f, 0.1f, 0.2f, 0.1f};
  auto avg = fuse_by_average(constant_seq(row, 13));
  for (int c = 0; c < 6; ++c) CHECK(avg[c] == doctest::Approx(row[std::size_t(c)]).epsilon(1e-6));
}

TEST_CASE("averaging rejects an empty sequence") {
  ConfidenceSequence empty;
  empty.probs.resize(0, kNumClasses);
  CHECK_THROWS_AS((void)fuse_by_average(empty), Error);
}

TEST_CASE("short sequences are padded by edge replication") {
  std::array<float, 6> row{0.4f, 0.1f, 0.1f, 0.2f, 0.1f, 0.1f};
  auto x4 = sequence_to_input(constant_seq(row, 4));
  auto x7 = sequence_to_input(constant_seq(row, 7));
  CHECK(x4.shape == std::vector<Eigen::Index>{1, 6, 7});
  CHECK(x7.shape == std::vector<Eigen::Index>{1, 6, 7});
  for (Eigen::Index i = 0; i < x4.size(); ++i) CHECK(x4.data[i] == x7.data[i]);

  auto x12 = sequence_to_input(constant_seq(row, 12));
  CHECK(x12.shape == std::vector<Eigen::Index>{1, 6, 12});

  // a non-constant tail replicates the final vector only
  auto seq = make_seq({{1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f},
                       {0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 1.0f}});
  auto x = sequence_to_input(seq);
  CHECK(x.data[0 * 7 + 0] == 1.0f);  // channel 0, t=0
  for (int t = 1; t < 7; ++t) {
    CHECK(x.data[0 * 7 + t] == 0.0f);
    CHECK(x.data[5 * 7 + t] == 1.0f);
  }
}

TEST_CASE("network fusion of a constant sequence is length-invariant") {
  auto params = build_fusion_model(3);
  FusionClassifier clf(params);
  std::array<float, 6> row{0.05f, 0.25f, 0.15f, 0.25f, 0.10f, 0.20f};
  auto base = clf.fuse(constant_seq(row, 7));
  for (int len : {4, 10, 40, 150}) {
    auto out = clf.fuse(constant_seq(row, len));
    for (int c = 0; c < 6; ++c) CHECK(out[c] == doctest::Approx(base[c]).epsilon(1e-5));
  }
}

TEST_CASE("network fusion emits valid confidences deterministically") {
  auto params = build_fusion_model(4);
  FusionClassifier clf(params);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    int len = rng.uniform_int(4, 60);
    ConfidenceSequence seq;
    seq.probs.resize(len, kNumClasses);
    for (int i = 0; i < len; ++i) {
      double sum = 0.0;
      std::array<double, 6> raw{};
      for (auto& v : raw) {
        v = rng.uniform(0.0, 1.0) + 1e-9;
        sum += v;
      }
      for (int c = 0; c < 6; ++c) seq.probs(i, c) = float(raw[std::size_t(c)] / sum);
    }
    auto a = clf.fuse(seq);
    auto b = fuse_by_network(params, seq);
    CHECK(is_valid_confidence(a));
    for (int c = 0; c < 6; ++c) CHECK(a[c] == b[c]);
  }
}

TEST_CASE("fusion training learns a temporal rule averaging cannot express") {
  // class X: steady moderate confidence; class Y: short strong burst.
  // Averages are engineered to agree, so only temporal structure separates them.
  Rng rng(6);
  auto make_example = [&](bool burst) {
    const int len = 21;
    ConfidenceSequence seq;
    seq.probs.resize(len, kNumClasses);
    int burst_at = rng.uniform_int(3, len - 4);
    for (int t = 0; t < len; ++t) {
      // base: mild background preference
      std::array<float, 6> row{0.5f, 0.1f, 0.1f, 0.1f, 0.1f, 0.1f};
      if (burst) {
        if (std::abs(t - burst_at) <= 1) row = {0.1f, 0.8f, 0.025f, 0.025f, 0.025f, 0.025f};
      } else {
        row[0] -= 0.10f;
        row[1] += 0.10f;  // same jellyfish mass, spread thin
      }
      double noise = rng.uniform(0.0, 0.02);
      row[2] += float(noise);
      row[0] -= float(noise);
      for (int c = 0; c < 6; ++c) seq.probs(t, c) = row[std::size_t(c)];
    }
    return seq;
  };

  std::vector<ConfidenceSequence> train_seqs, val_seqs;
  std::vector<ClassLabel> train_labels, val_labels;
  for (int i = 0; i < 60; ++i) {
    bool burst = i % 2 == 0;
    auto seq = make_example(burst);
    auto label = burst ? ClassLabel::Jellyfish : ClassLabel::Background;
    if (i < 44) {
      train_seqs.push_back(seq);
      train_labels.push_back(label);
    } else {
      val_seqs.push_back(seq);
      val_labels.push_back(label);
    }
  }

  // averaging cannot separate the two designs
  int avg_hits = 0;
  for (std::size_t i = 0; i < val_seqs.size(); ++i)
    avg_hits += argmax_class(fuse_by_average(val_seqs[i])) == val_labels[i];
  CHECK(double(avg_hits) / double(val_seqs.size()) <= 0.55);

  FusionTrainConfig cfg;
  cfg.loss_weights = nn::LossWeights{};
  cfg.epochs = 60;
  cfg.seed = 7;
  auto result = train_fusion(build_fusion_model(cfg.seed), train_seqs, train_labels, val_seqs,
                             val_labels, cfg);
  FusionClassifier clf(result.params);
  int net_hits = 0;
  for (std::size_t i = 0; i < val_seqs.size(); ++i)
    net_hits += argmax_class(clf.fuse(val_seqs[i])) == val_labels[i];
  CHECK(double(net_hits) / double(val_seqs.size()) >= 0.9);

  REQUIRE(int(result.log.epochs.size()) == 60);  // fixed budget, no early stop
}

TEST_CASE("fusion training is deterministic in the seed") {
  Rng rng(8);
  std::vector<ConfidenceSequence> seqs;
  std::vector<ClassLabel> labels;
  for (int i = 0; i < 12; ++i) {
    ConfidenceSequence seq;
    int len = rng.uniform_int(5, 20);
    seq.probs.resize(len, kNumClasses);
    for (int t = 0; t < len; ++t) {
      double sum = 0.0;
      std::array<double, 6> raw{};
      for (auto& v : raw) {
        v = rng.uniform(0.0, 1.0);
        sum += v;
      }
      for (int c = 0; c < 6; ++c) seq.probs(t, c) = float(raw[std::size_t(c)] / sum);
    }
    seqs.push_back(seq);
    labels.push_back(class_from_index(i % 6));
  }

  FusionTrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 9;
  auto a = train_fusion(build_fusion_model(9), seqs, labels, seqs, labels, cfg);
  auto b = train_fusion(build_fusion_model(9), seqs, labels, seqs, labels, cfg);
  for (const auto& [name, t] : a.params)
    for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(t.data[i] == b.params.at(name).data[i]);
}

TEST_CASE("training validates input sizes") {
  FusionTrainConfig cfg;
  cfg.epochs = 1;
  std::vector<ConfidenceSequence> seqs(2);
  seqs[0].probs.resize(5, kNumClasses);
  seqs[0].probs.setConstant(1.0f / 6.0f);
  seqs[1] = seqs[0];
  std::vector<ClassLabel> labels{ClassLabel::Fish};  // wrong size
  CHECK_THROWS_AS(
      (void)train_fusion(build_fusion_model(1), seqs, labels, seqs, labels, cfg), Error);
  std::vector<ClassLabel> ok_labels(seqs.size(), ClassLabel::Fish);
  CHECK_THROWS_AS(
      (void)train_fusion(build_fusion_model(1), {}, {}, seqs, ok_labels, cfg), Error);
}
