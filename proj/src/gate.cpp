#include "jelly/gate.hpp"

#include <algorithm>
#include <cstdio>

#include "jelly/binio.hpp"

namespace jelly {

GateDecision apply_gate(const ConfidenceVector& pred, const GateConfig& cfg,
                        std::int64_t event_id) {
  require(is_valid_confidence(pred), Errc::invalid_argument,
          "apply_gate: not a valid confidence vector");
  double tau = std::clamp(cfg.tau, 0.0, 1.0);
  GateDecision d;
  d.event_id = event_id;
  d.predicted = argmax_class(pred);
  d.confidence = static_cast<double>(pred[class_index(d.predicted)]);
  d.reported = d.predicted == ClassLabel::Jellyfish && d.confidence >= tau;
  return d;
}

std::vector<SweepPoint> sweep_threshold(const std::vector<ConfidenceVector>& preds,
                                        const std::vector<ClassLabel>& labels,
                                        const std::vector<double>& taus) {
  require(!preds.empty(), Errc::degenerate_input, "sweep_threshold: no predictions");
  require(preds.size() == labels.size(), Errc::shape_mismatch,
          "sweep_threshold: one label per prediction required");
  require(!taus.empty(), Errc::invalid_argument, "sweep_threshold: empty tau list");

  std::int64_t true_jelly = 0;
  for (auto l : labels)
    if (l == ClassLabel::Jellyfish) ++true_jelly;
  std::int64_t non_jelly = static_cast<std::int64_t>(labels.size()) - true_jelly;

  std::vector<SweepPoint> curve;
  curve.reserve(taus.size());
  for (double tau : taus) {
    GateConfig cfg{tau};
    SweepPoint pt;
    pt.tau = std::clamp(tau, 0.0, 1.0);
    std::int64_t tp = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      GateDecision d = apply_gate(preds[i], cfg);
      if (!d.reported) continue;
      if (labels[i] == ClassLabel::Jellyfish)
        ++tp;
      else
        ++pt.fp_count;
    }
    pt.tp_rate = true_jelly > 0 ? static_cast<double>(tp) / static_cast<double>(true_jelly) : 0.0;
    pt.fp_rate =
        non_jelly > 0 ? static_cast<double>(pt.fp_count) / static_cast<double>(non_jelly) : 0.0;
    curve.push_back(pt);
  }
  return curve;
}

std::vector<double> default_sweep_grid() {
  std::vector<double> taus;
  for (int i = 0; i <= 19; ++i) taus.push_back(0.05 * i);
  return taus;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& curve) {
  std::string out = "tau,tp_rate,fp_count,fp_rate\n";
  char buf[128];
  for (const auto& pt : curve) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%lld,%.9g\n", pt.tau, pt.tp_rate,
                  static_cast<long long>(pt.fp_count), pt.fp_rate);
    out += buf;
  }
  io::write_text(path, out);
}

}  // namespace jelly
