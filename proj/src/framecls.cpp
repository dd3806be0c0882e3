#include "jelly/framecls.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>

#include "jelly/binio.hpp"
#include "jelly/parallel.hpp"

namespace jelly {

namespace {

struct LabeledFrame {
  const Frame* frame;
  int label;
};

// Evenly strided subsample so long events do not dominate the frame pool and
// every pulsation phase is represented.
std::vector<LabeledFrame> collect_frames(const std::vector<Event>& events, int max_per_event) {
  std::vector<LabeledFrame> out;
  for (const auto& ev : events) {
    const auto n = static_cast<int>(ev.frames.size());
    int take = max_per_event > 0 ? std::min(n, max_per_event) : n;
    for (int i = 0; i < take; ++i) {
      int idx = take == 1 ? 0 : static_cast<int>((static_cast<std::int64_t>(i) * (n - 1)) / (take - 1));
      out.push_back({&ev.frames[static_cast<std::size_t>(idx)], class_index(ev.label)});
    }
  }
  return out;
}

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

double batched_accuracy(const nn::Sequential<float>& net, const std::vector<LabeledFrame>& frames) {
  if (frames.empty()) return 0.0;
  const std::size_t kChunk = 256;
  std::int64_t hits = 0;
  for (std::size_t at = 0; at < frames.size(); at += kChunk) {
    std::size_t take = std::min(kChunk, frames.size() - at);
    std::vector<const Frame*> chunk(take);
    for (std::size_t i = 0; i < take; ++i) chunk[i] = frames[at + i].frame;
    nn::Tensor logits = net.forward(frames_to_tensor(chunk));
    auto m = logits.mat(static_cast<Eigen::Index>(take), kNumClasses);
    for (std::size_t i = 0; i < take; ++i) {
      Eigen::Index best;
      m.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
      if (static_cast<int>(best) == frames[at + i].label) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(frames.size());
}

}  // namespace

nn::Tensor frames_to_tensor(const std::vector<const Frame*>& frames) {
  require(!frames.empty(), Errc::degenerate_input, "no frames to classify");
  int h = frames.front()->height, w = frames.front()->width;
  nn::Tensor x = nn::Tensor::zeros({static_cast<Eigen::Index>(frames.size()), 1, h, w});
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = *frames[i];
    require(f.width == w && f.height == h, Errc::shape_mismatch,
            "mixed frame sizes in one batch");
    float* dst = x.ptr() + static_cast<Eigen::Index>(i) * h * w;
    for (std::size_t p = 0; p < f.pixels.size(); ++p)
      dst[p] = static_cast<float>(f.pixels[p]) / 255.0f;
  }
  return x;
}

nn::ModelParams build_frame_model(std::uint64_t seed) {
  auto net = make_frame_net<float>();
  Rng rng(seed);
  auto params = net.params();
  // draw order: layer order, weights only; biases stay zero
  for (const char* name : {"conv1", "conv2", "dense1", "dense2"}) {
    nn::TensorT<float>& w = *params.at(std::string(name) + ".w");
    Eigen::Index fan_in = w.shape.size() == 4 ? w.dim(1) * w.dim(2) * w.dim(3) : w.dim(1);
    nn::fill_he_uniform(w, fan_in, rng);
  }
  return net.export_params();
}

FrameTrainResult train_frame_classifier(const std::vector<Event>& train,
                                        const std::vector<Event>& val,
                                        const FrameTrainConfig& cfg) {
  require(!train.empty(), Errc::degenerate_input, "empty training set");
  require(cfg.epochs > 0 && cfg.batch_size > 0, Errc::invalid_argument,
          "epochs and batch_size must be positive");
  std::set<int> classes;
  for (const auto& ev : train) classes.insert(class_index(ev.label));
  require(classes.size() >= 2, Errc::degenerate_input,
          "training set covers a single class; nothing to discriminate");

  auto train_frames = collect_frames(train, cfg.max_frames_per_event);
  auto val_frames = collect_frames(val, cfg.max_frames_per_event);

  auto net = make_frame_net<float>();
  net.import_params(build_frame_model(cfg.seed));
  auto params = net.params();
  nn::AdamState adam;
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  Rng rng = Rng(cfg.seed).split(1);  // shuffling stream, distinct from init

  FrameTrainResult result;
  nn::ModelParams best;
  double best_val = -1.0;
  int since_best = 0;
  nn::LossWeights unit_weights;

  std::vector<std::size_t> order(train_frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::int64_t hit = 0, seen = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t take = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
      std::vector<const Frame*> batch(take);
      std::vector<int> targets(take);
      for (std::size_t i = 0; i < take; ++i) {
        batch[i] = train_frames[order[at + i]].frame;
        targets[i] = train_frames[order[at + i]].label;
      }
      std::vector<nn::CacheT<float>> caches;
      nn::Tensor logits = net.forward(frames_to_tensor(batch), &caches);
      nn::Tensor dlogits;
      double loss = nn::weighted_softmax_ce(logits, targets, unit_weights, &dlogits);
      auto grads = net.zero_grads();
      net.backward(dlogits, caches, &grads);
      nn::adam_step(params, grads, adam, adam_cfg);

      loss_sum += loss * static_cast<double>(take);
      auto m = logits.mat(static_cast<Eigen::Index>(take), kNumClasses);
      for (std::size_t i = 0; i < take; ++i) {
        Eigen::Index bestc;
        m.row(static_cast<Eigen::Index>(i)).maxCoeff(&bestc);
        if (static_cast<int>(bestc) == targets[i]) ++hit;
      }
      seen += static_cast<std::int64_t>(take);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(seen);
    entry.train_acc = static_cast<double>(hit) / static_cast<double>(seen);
    entry.val_acc = batched_accuracy(net, val_frames);
    result.log.epochs.push_back(entry);

    if (entry.val_acc > best_val) {
      best_val = entry.val_acc;
      best = net.export_params();
      result.log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }

  if (val_frames.empty() || result.log.best_epoch < 0) {
    best = net.export_params();
    result.log.best_epoch = static_cast<int>(result.log.epochs.size()) - 1;
  }
  result.params = std::move(best);
  return result;
}

FrameClassifier::FrameClassifier(const nn::ModelParams& params) : net_(make_frame_net<float>()) {
  net_.import_params(params);
}

ConfidenceSequence FrameClassifier::classify(const Event& event) const {
  require(!event.frames.empty(), Errc::degenerate_input, "event has no frames");
  std::vector<const Frame*> frames(event.frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = &event.frames[i];
  nn::Tensor probs = nn::softmax(net_.forward(frames_to_tensor(frames)));
  ConfidenceSequence seq;
  seq.event_id = event.id;
  seq.probs.resize(static_cast<Eigen::Index>(frames.size()), kNumClasses);
  for (Eigen::Index i = 0; i < seq.probs.rows(); ++i)
    for (int c = 0; c < kNumClasses; ++c) seq.probs(i, c) = probs.data[i * kNumClasses + c];
  return seq;
}

double FrameClassifier::frame_accuracy(const std::vector<Event>& events) const {
  std::vector<LabeledFrame> frames = collect_frames(events, 0);
  require(!frames.empty(), Errc::degenerate_input, "no frames to evaluate");
  return batched_accuracy(net_, frames);
}

ConfidenceSequence classify_frames(const nn::ModelParams& params, const Event& event) {
  return FrameClassifier(params).classify(event);
}

std::vector<ConfidenceSequence> classify_dataset(const nn::ModelParams& params,
                                                 const std::vector<Event>& events) {
  FrameClassifier cls(params);
  std::vector<ConfidenceSequence> out(events.size());
  parallel_for(0, static_cast<std::int64_t>(events.size()),
               [&](std::int64_t i) { out[static_cast<std::size_t>(i)] = cls.classify(events[static_cast<std::size_t>(i)]); });
  return out;
}

void write_confidence_csv(const std::filesystem::path& path,
                          const std::vector<ConfidenceSequence>& seqs,
                          const std::vector<ClassLabel>& labels) {
  require(seqs.size() == labels.size(), Errc::shape_mismatch,
          "one label per sequence required");
  std::string out = "event_id,frame_idx,p0,p1,p2,p3,p4,p5,label\n";
  char buf[64];
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (Eigen::Index i = 0; i < seqs[s].length(); ++i) {
      out += std::to_string(seqs[s].event_id) + "," + std::to_string(i);
      for (int c = 0; c < kNumClasses; ++c) {
        std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(seqs[s].probs(i, c)));
        out += buf;
      }
      out += "," + std::to_string(class_index(labels[s])) + "\n";
    }
  }
  io::write_text(path, out);
}

}  // namespace jelly
