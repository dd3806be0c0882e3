#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jelly/binio.hpp"
#include "jelly/error.hpp"
#include "jelly/evalkit.hpp"
#include "test_util.hpp"

using namespace jelly;

namespace {

ConfusionMatrix diag(const std::array<std::int64_t, 6>& d) {
  ConfusionMatrix cm;
  for (int c = 0; c < 6; ++c) cm.m(c, c) = d[std::size_t(c)];
  return cm;
}

}  // namespace

TEST_CASE("accuracy and per-class accuracy from a hand-built matrix") {
  ConfusionMatrix cm;
  cm.add(ClassLabel::Jellyfish, ClassLabel::Jellyfish);
  cm.add(ClassLabel::Jellyfish, ClassLabel::Jellyfish);
  cm.add(ClassLabel::Jellyfish, ClassLabel::Jellyfish);
  cm.add(ClassLabel::Jellyfish, ClassLabel::Background);
  cm.add(ClassLabel::Fish, ClassLabel::Fish);
  cm.add(ClassLabel::Fish, ClassLabel::Jellyfish);

  CHECK(accuracy(cm) == doctest::Approx(4.0 / 6.0));
  auto per = per_class_accuracy(cm);
  CHECK(per[1].value() == doctest::Approx(0.75));
  CHECK(per[3].value() == doctest::Approx(0.5));
  CHECK(!per[0].has_value());  // no background rows
  CHECK(jellyfish_fp_count(cm) == 1);
}

TEST_CASE("an empty matrix rejects accuracy and has no per-class entries") {
  ConfusionMatrix cm;
  CHECK_THROWS_AS((void)accuracy(cm), Error);
  for (const auto& v : per_class_accuracy(cm)) CHECK(!v.has_value());
  CHECK(jellyfish_fp_count(cm) == 0);
}

TEST_CASE("sum-of-stds metric on hand-computed sets") {
  const double kRoot2 = std::sqrt(2.0);
  // one varying class with diagonals {3,5}: std = sqrt(2)
  CHECK(std_sum_metric({diag({3, 2, 0, 0, 0, 0}), diag({5, 2, 0, 0, 0, 0})}) ==
        doctest::Approx(kRoot2).epsilon(1e-12));
  // identical runs: zero
  CHECK(std_sum_metric({diag({4, 1, 5, 9, 2, 6}), diag({4, 1, 5, 9, 2, 6}),
                        diag({4, 1, 5, 9, 2, 6})}) == doctest::Approx(0.0).scale(1.0));
  // every class differing by 2 over two runs: 6 * sqrt(2)
  CHECK(std_sum_metric({diag({0, 1, 2, 3, 4, 5}), diag({2, 3, 4, 5, 6, 7})}) ==
        doctest::Approx(6.0 * kRoot2).epsilon(1e-12));
  // three runs {1,2,3} on one class: sample std exactly 1
  CHECK(std_sum_metric({diag({1, 7, 7, 7, 7, 7}), diag({2, 7, 7, 7, 7, 7}),
                        diag({3, 7, 7, 7, 7, 7})}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)std_sum_metric({diag({1, 1, 1, 1, 1, 1})}), Error);
}

TEST_CASE("normalize divides by the baseline so its row reads exactly one") {
  auto out = normalize({2.5, 5.0, 1.25}, 2.5);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(2.0));
  CHECK(out[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS((void)normalize({1.0}, 0.0), Error);
}

TEST_CASE("mean_std uses the sample convention") {
  auto ms = mean_std({68.25, 70.63});
  CHECK(ms.mean == doctest::Approx(69.44).epsilon(1e-6));
  CHECK(ms.std == doctest::Approx(1.6829).epsilon(1e-3));  // |70.63-68.25|/sqrt(2)
  CHECK_THROWS_AS((void)mean_std({1.0}), Error);

  auto same = mean_std({3.0, 3.0, 3.0});
  CHECK(same.mean == 3.0);
  CHECK(same.std == 0.0);
}

TEST_CASE("jellyfish fp proportion math") {
  // 282.1 FPs out of 16250 non-jellyfish events = 1.736%
  CHECK(282.1 / 16250.0 == doctest::Approx(0.01736).epsilon(1e-3));

  ConfusionMatrix cm;
  for (int i = 0; i < 97; ++i) cm.add(ClassLabel::Fish, ClassLabel::Fish);
  for (int i = 0; i < 3; ++i) cm.add(ClassLabel::Fish, ClassLabel::Jellyfish);
  CHECK(jellyfish_fp_count(cm) == 3);
  // true jellyfish predicted as jellyfish are not false positives
  cm.add(ClassLabel::Jellyfish, ClassLabel::Jellyfish);
  CHECK(jellyfish_fp_count(cm) == 3);
}

TEST_CASE("aggregate_runs averages matrices and scalar metrics") {
  RunMetrics a, b;
  a.frame_acc = 0.6825;
  b.frame_acc = 0.7063;
  a.event_acc = 0.7;
  b.event_acc = 0.8;
  a.jelly_acc = 0.4;
  b.jelly_acc = 0.6;
  a.jelly_fp_count = 2;
  b.jelly_fp_count = 4;
  a.jelly_fp_rate = 0.02;
  b.jelly_fp_rate = 0.04;
  a.confusion = diag({3, 2, 0, 0, 0, 0});
  b.confusion = diag({5, 2, 0, 0, 0, 0});

  auto rep = aggregate_runs({a, b});
  CHECK(rep.n_runs == 2);
  CHECK(rep.frame_acc.mean == doctest::Approx(0.6944).epsilon(1e-4));
  CHECK(rep.frame_acc.std == doctest::Approx(0.016829).epsilon(1e-3));
  CHECK(rep.event_acc.mean == doctest::Approx(0.75));
  CHECK(rep.jelly_acc.mean == doctest::Approx(0.5));
  CHECK(rep.jelly_fp_count.mean == doctest::Approx(3.0));
  CHECK(rep.mean_matrix(0, 0) == doctest::Approx(4.0));
  CHECK(rep.mean_matrix(1, 1) == doctest::Approx(2.0));
  CHECK(rep.matrices.size() == 2);

  CHECK_THROWS_AS((void)aggregate_runs({a}), Error);
}

TEST_CASE("write_report emits the three documented files") {
  RunMetrics a, b;
  a.event_acc = 0.7;
  b.event_acc = 0.9;
  a.jelly_acc = 0.5;
  b.jelly_acc = 0.7;
  a.confusion = diag({1, 1, 1, 1, 1, 1});
  b.confusion = diag({1, 1, 1, 1, 1, 1});
  auto rep = aggregate_runs({a, b});

  testutil::TempDir tmp("evalkit-report");
  write_report(rep, tmp.path);

  auto j = io::read_json(tmp.path / "report.json");
  CHECK(j["n_runs"] == 2);
  CHECK(j["metrics"]["event_acc"]["mean"] == doctest::Approx(0.8));
  CHECK(j["runs"].size() == 2);
  CHECK(j["mean_matrix"].size() == 6);

  auto metrics = io::read_text(tmp.path / "metrics.csv");
  CHECK(metrics.rfind("metric,mean,std\n", 0) == 0);
  CHECK(metrics.find("jelly_fp_rate,") != std::string::npos);

  auto conf = io::read_text(tmp.path / "confusion.csv");
  CHECK(std::count(conf.begin(), conf.end(), '\n') == 6);
}
