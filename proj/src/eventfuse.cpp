#include "jelly/eventfuse.hpp"

#include <algorithm>
#include <cstdio>

#include "jelly/binio.hpp"

namespace jelly {

nn::ModelParams build_fusion_model(std::uint64_t seed) {
  auto net = make_fusion_net<float>();
  Rng rng(seed);
  auto params = net.params();
  nn::fill_he_uniform(*params.at("conv.w"), kNumClasses * kFusionWindow, rng);
  nn::fill_he_uniform(*params.at("dense.w"), 32, rng);
  return net.export_params();
}

ConfidenceVector fuse_by_average(const ConfidenceSequence& seq) {
  require(seq.length() > 0, Errc::degenerate_input, "empty confidence sequence");
  ConfidenceVector out;
  for (int c = 0; c < kNumClasses; ++c) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < seq.length(); ++i) acc += static_cast<double>(seq.probs(i, c));
    out[c] = static_cast<float>(acc / static_cast<double>(seq.length()));
  }
  return out;
}

nn::Tensor sequence_to_input(const ConfidenceSequence& seq) {
  require(seq.length() > 0, Errc::degenerate_input, "empty confidence sequence");
  auto n = std::max<Eigen::Index>(seq.length(), kFusionWindow);
  nn::Tensor x = nn::Tensor::zeros({1, kNumClasses, n});
  for (int c = 0; c < kNumClasses; ++c) {
    float* row = x.ptr() + static_cast<Eigen::Index>(c) * n;
    for (Eigen::Index t = 0; t < n; ++t)
      row[t] = seq.probs(std::min(t, seq.length() - 1), c);
  }
  return x;
}

FusionClassifier::FusionClassifier(const nn::ModelParams& params)
    : net_(make_fusion_net<float>()) {
  net_.import_params(params);
}

ConfidenceVector FusionClassifier::fuse(const ConfidenceSequence& seq) const {
  nn::Tensor probs = nn::softmax(net_.forward(sequence_to_input(seq)));
  ConfidenceVector out;
  for (int c = 0; c < kNumClasses; ++c) out[c] = probs.data[c];
  return out;
}

ConfidenceVector fuse_by_network(const nn::ModelParams& params, const ConfidenceSequence& seq) {
  return FusionClassifier(params).fuse(seq);
}

FusionTrainResult train_fusion(const nn::ModelParams& init,
                               const std::vector<ConfidenceSequence>& train_seqs,
                               const std::vector<ClassLabel>& train_labels,
                               const std::vector<ConfidenceSequence>& val_seqs,
                               const std::vector<ClassLabel>& val_labels,
                               const FusionTrainConfig& cfg) {
  require(!train_seqs.empty(), Errc::degenerate_input, "empty fusion training set");
  require(train_seqs.size() == train_labels.size() && val_seqs.size() == val_labels.size(),
          Errc::shape_mismatch, "one label per sequence required");
  require(cfg.epochs > 0 && cfg.batch_size > 0, Errc::invalid_argument,
          "epochs and batch_size must be positive");
  nn::validate(cfg.loss_weights);

  auto net = make_fusion_net<float>();
  net.import_params(init);
  auto params = net.params();
  nn::AdamState adam;
  nn::AdamConfig opt;
  opt.lr = cfg.lr;
  Rng rng = Rng(cfg.seed).split(1);

  std::vector<std::size_t> order(train_seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto eval_acc = [&](const std::vector<ConfidenceSequence>& seqs,
                      const std::vector<ClassLabel>& labels) {
    if (seqs.empty()) return 0.0;
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      nn::Tensor logits = net.forward(sequence_to_input(seqs[i]));
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < kNumClasses; ++c)
        if (logits.data[c] > logits.data[best]) best = c;
      if (static_cast<int>(best) == class_index(labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(seqs.size());
  };

  FusionTrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

    double loss_sum = 0.0;
    std::int64_t hits = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t take = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
      auto grads = net.zero_grads();
      for (std::size_t i = 0; i < take; ++i) {
        const auto& seq = train_seqs[order[at + i]];
        int target = class_index(train_labels[order[at + i]]);
        std::vector<nn::CacheT<float>> caches;
        nn::Tensor logits = net.forward(sequence_to_input(seq), &caches);
        nn::Tensor dlogits;
        loss_sum += nn::weighted_softmax_ce(logits, {target}, cfg.loss_weights, &dlogits);
        net.backward(dlogits, caches, &grads);
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < kNumClasses; ++c)
          if (logits.data[c] > logits.data[best]) best = c;
        if (static_cast<int>(best) == target) ++hits;
      }
      for (auto& [name, g] : grads) g.data *= 1.0f / static_cast<float>(take);
      nn::adam_step(params, grads, adam, opt);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.train_acc = static_cast<double>(hits) / static_cast<double>(order.size());
    entry.val_acc = eval_acc(val_seqs, val_labels);
    result.log.epochs.push_back(entry);
  }
  result.log.best_epoch = static_cast<int>(result.log.epochs.size()) - 1;
  result.params = net.export_params();
  return result;
}

void write_predictions_csv(const std::filesystem::path& path,
                           const std::vector<std::int64_t>& event_ids,
                           const std::vector<ConfidenceVector>& preds,
                           const std::vector<ClassLabel>& labels) {
  require(event_ids.size() == preds.size() && preds.size() == labels.size(),
          Errc::shape_mismatch, "ids, predictions, and labels must align");
  std::string out = "event_id,pred,conf0,conf1,conf2,conf3,conf4,conf5,label\n";
  char buf[64];
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out += std::to_string(event_ids[i]) + "," +
           std::to_string(class_index(argmax_class(preds[i])));
    for (int c = 0; c < kNumClasses; ++c) {
      std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(preds[i][c]));
      out += buf;
    }
    out += "," + std::to_string(class_index(labels[i])) + "\n";
  }
  io::write_text(path, out);
}

}  // namespace jelly
