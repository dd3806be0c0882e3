#include "jelly/evalkit.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "jelly/binio.hpp"

namespace jelly {

double accuracy(const ConfusionMatrix& cm) {
  std::int64_t n = cm.total();
  require(n > 0, Errc::degenerate_input, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.m.trace()) / static_cast<double>(n);
}

std::array<std::optional<double>, kNumClasses> per_class_accuracy(const ConfusionMatrix& cm) {
  std::array<std::optional<double>, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c) {
    std::int64_t row = cm.row_total(c);
    if (row > 0) out[static_cast<std::size_t>(c)] = static_cast<double>(cm.m(c, c)) / static_cast<double>(row);
  }
  return out;
}

std::int64_t jellyfish_fp_count(const ConfusionMatrix& cm) {
  const int j = class_index(ClassLabel::Jellyfish);
  return cm.m.col(j).sum() - cm.m(j, j);
}

double std_sum_metric(const std::vector<ConfusionMatrix>& runs) {
  require(runs.size() >= 2, Errc::degenerate_input,
          "std_sum_metric needs at least two runs");
  const auto n = static_cast<double>(runs.size());
  double y = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    double mean = 0.0;
    for (const auto& r : runs) mean += static_cast<double>(r.m(c, c));
    mean /= n;
    double ss = 0.0;
    for (const auto& r : runs) {
      double d = static_cast<double>(r.m(c, c)) - mean;
      ss += d * d;
    }
    y += std::sqrt(ss / (n - 1.0));
  }
  return y;
}

std::vector<double> normalize(const std::vector<double>& values, double baseline) {
  require(baseline > 0.0, Errc::degenerate_input, "normalize: baseline must be positive");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v / baseline);
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  require(values.size() >= 2, Errc::degenerate_input,
          "mean_std needs at least two values");
  const auto n = static_cast<double>(values.size());
  MeanStd ms;
  for (double v : values) ms.mean += v;
  ms.mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - ms.mean) * (v - ms.mean);
  ms.std = std::sqrt(ss / (n - 1.0));
  return ms;
}

RunReport aggregate_runs(const std::vector<RunMetrics>& runs) {
  require(runs.size() >= 2, Errc::degenerate_input, "aggregate_runs needs at least two runs");
  RunReport rep;
  rep.n_runs = static_cast<int>(runs.size());
  std::vector<double> frame, event, jelly, fp, fpr;
  for (const auto& r : runs) {
    rep.matrices.push_back(r.confusion);
    rep.mean_matrix += r.confusion.m.cast<double>();
    frame.push_back(r.frame_acc);
    event.push_back(r.event_acc);
    if (r.jelly_acc) jelly.push_back(*r.jelly_acc);
    fp.push_back(static_cast<double>(r.jelly_fp_count));
    fpr.push_back(r.jelly_fp_rate);
  }
  rep.mean_matrix /= static_cast<double>(runs.size());
  rep.frame_acc = mean_std(frame);
  rep.event_acc = mean_std(event);
  if (jelly.size() >= 2) rep.jelly_acc = mean_std(jelly);
  rep.jelly_fp_count = mean_std(fp);
  rep.jelly_fp_rate = mean_std(fpr);
  return rep;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  nlohmann::json j;
  j["n_runs"] = report.n_runs;
  auto put = [&](const char* name, const MeanStd& ms) {
    j["metrics"][name] = {{"mean", ms.mean}, {"std", ms.std}};
  };
  put("frame_acc", report.frame_acc);
  put("event_acc", report.event_acc);
  put("jelly_acc", report.jelly_acc);
  put("jelly_fp_count", report.jelly_fp_count);
  put("jelly_fp_rate", report.jelly_fp_rate);
  for (const auto& cm : report.matrices) {
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < kNumClasses; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < kNumClasses; ++c) row.push_back(cm.m(r, c));
      m.push_back(std::move(row));
    }
    nlohmann::json entry;
    entry["matrix"] = std::move(m);
    if (cm.reported_counts) entry["reported_counts"] = *cm.reported_counts;
    j["runs"].push_back(std::move(entry));
  }
  {
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < kNumClasses; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < kNumClasses; ++c) row.push_back(report.mean_matrix(r, c));
      m.push_back(std::move(row));
    }
    j["mean_matrix"] = std::move(m);
  }
  io::write_json(dir / "report.json", j);

  char buf[160];
  std::string csv = "metric,mean,std\n";
  auto addrow = [&](const char* name, const MeanStd& ms) {
    std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g\n", name, ms.mean, ms.std);
    csv += buf;
  };
  addrow("frame_acc", report.frame_acc);
  addrow("event_acc", report.event_acc);
  addrow("jelly_acc", report.jelly_acc);
  addrow("jelly_fp_count", report.jelly_fp_count);
  addrow("jelly_fp_rate", report.jelly_fp_rate);
  io::write_text(dir / "metrics.csv", csv);

  std::string grid;
  for (int r = 0; r < kNumClasses; ++r) {
    for (int c = 0; c < kNumClasses; ++c) {
      std::snprintf(buf, sizeof buf, "%s%.9g", c ? "," : "", report.mean_matrix(r, c));
      grid += buf;
    }
    grid += "\n";
  }
  io::write_text(dir / "confusion.csv", grid);
}

}  // namespace jelly
