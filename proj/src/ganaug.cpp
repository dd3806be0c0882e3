#include "jelly/ganaug.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "jelly/binio.hpp"

namespace jelly {

namespace {

constexpr const char* kGanFormat = "jelly-gan";
constexpr int kGanVersion = 1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_prob(double p) { return std::clamp(p, 1e-12, 1.0 - 1e-12); }

struct GanFrame {
  const Frame* frame;
  int label;
};

std::vector<GanFrame> collect(const std::vector<Event>& events, int max_per_event) {
  std::vector<GanFrame> out;
  for (const auto& ev : events) {
    const auto n = static_cast<int>(ev.frames.size());
    int take = max_per_event > 0 ? std::min(n, max_per_event) : n;
    for (int i = 0; i < take; ++i) {
      int idx = take == 1 ? 0 : static_cast<int>((static_cast<std::int64_t>(i) * (n - 1)) / (take - 1));
      require(ev.frames[static_cast<std::size_t>(idx)].width == kGanFrameSide &&
                  ev.frames[static_cast<std::size_t>(idx)].height == kGanFrameSide,
              Errc::shape_mismatch, "GAN training expects 32x32 frames");
      out.push_back({&ev.frames[static_cast<std::size_t>(idx)], class_index(ev.label)});
    }
  }
  return out;
}

// (N, 1030): normalized frame in [-1,1] followed by the one-hot class
nn::Tensor d_input(const std::vector<const float*>& frames, const std::vector<int>& labels) {
  auto n = static_cast<Eigen::Index>(frames.size());
  nn::Tensor x = nn::Tensor::zeros({n, kGanFramePixels + kNumClasses});
  for (Eigen::Index i = 0; i < n; ++i) {
    float* row = x.ptr() + i * (kGanFramePixels + kNumClasses);
    std::copy_n(frames[static_cast<std::size_t>(i)], kGanFramePixels, row);
    row[kGanFramePixels + labels[static_cast<std::size_t>(i)]] = 1.0f;
  }
  return x;
}

// (N, 38): z then one-hot class
nn::Tensor g_input(Rng& rng, const std::vector<int>& labels) {
  auto n = static_cast<Eigen::Index>(labels.size());
  nn::Tensor z = nn::Tensor::zeros({n, kGanZDim + kNumClasses});
  for (Eigen::Index i = 0; i < n; ++i) {
    float* row = z.ptr() + i * (kGanZDim + kNumClasses);
    for (int j = 0; j < kGanZDim; ++j) row[j] = static_cast<float>(rng.gaussian());
    row[kGanZDim + labels[static_cast<std::size_t>(i)]] = 1.0f;
  }
  return z;
}

void scale_grads(nn::GradMap<float>& grads, float s) {
  for (auto& [name, g] : grads) g.data *= s;
}

}  // namespace

GanModels build_gan_models(std::uint64_t seed) {
  auto g = make_generator<float>();
  auto d = make_discriminator<float>();
  Rng rng(seed);
  auto gp = g.params();
  auto dp = d.params();
  // draw order: g1, g2, d1, d2, d3; He before ReLU-family, Xavier elsewhere
  nn::fill_he_uniform(*gp.at("g1.w"), gp.at("g1.w")->dim(1), rng);
  nn::fill_xavier_uniform(*gp.at("g2.w"), gp.at("g2.w")->dim(1), gp.at("g2.w")->dim(0), rng);
  nn::fill_he_uniform(*dp.at("d1.w"), dp.at("d1.w")->dim(1), rng);
  nn::fill_he_uniform(*dp.at("d2.w"), dp.at("d2.w")->dim(1), rng);
  nn::fill_xavier_uniform(*dp.at("d3.w"), dp.at("d3.w")->dim(1), dp.at("d3.w")->dim(0), rng);
  GanModels m;
  m.generator = g.export_params();
  m.discriminator = d.export_params();
  return m;
}

std::pair<double, double> gan_losses(double d_real, double d_fake) {
  d_real = clamp_prob(d_real);
  d_fake = clamp_prob(d_fake);
  return {std::log(d_real) + std::log(1.0 - d_fake), -std::log(d_fake)};
}

double discriminate(const nn::ModelParams& discriminator, const Frame& frame, ClassLabel cls) {
  require(frame.width == kGanFrameSide && frame.height == kGanFrameSide, Errc::shape_mismatch,
          "discriminate expects a 32x32 frame");
  auto net = make_discriminator<float>();
  net.import_params(discriminator);
  std::vector<float> px(kGanFramePixels);
  for (int i = 0; i < kGanFramePixels; ++i)
    px[static_cast<std::size_t>(i)] = static_cast<float>(frame.pixels[static_cast<std::size_t>(i)]) / 127.5f - 1.0f;
  nn::Tensor x = d_input({px.data()}, {class_index(cls)});
  nn::Tensor logit = net.forward(x);
  return sigmoid(static_cast<double>(logit.data[0]));
}

std::vector<Frame> generate_frames(const nn::ModelParams& generator, ClassLabel cls, int n,
                                   Rng& rng) {
  require(n >= 0, Errc::invalid_argument, "sample count must be non-negative");
  auto net = make_generator<float>();
  net.import_params(generator);
  std::vector<Frame> out;
  if (n == 0) return out;
  std::vector<int> labels(static_cast<std::size_t>(n), class_index(cls));
  nn::Tensor z = g_input(rng, labels);
  nn::Tensor img = net.forward(z);
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Frame f = make_frame(kGanFrameSide, kGanFrameSide);
    const float* row = img.ptr() + static_cast<Eigen::Index>(i) * kGanFramePixels;
    for (int p = 0; p < kGanFramePixels; ++p) {
      long q = std::lround((static_cast<double>(row[p]) + 1.0) * 127.5);
      f.pixels[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
    }
    out.push_back(std::move(f));
  }
  return out;
}

GanTrainResult train_gan(const std::vector<Event>& train, const GanTrainConfig& cfg) {
  require(!train.empty(), Errc::degenerate_input, "empty GAN training set");
  require(cfg.epochs > 0 && cfg.batch_size > 0, Errc::invalid_argument,
          "epochs and batch_size must be positive");

  auto all = collect(train, cfg.max_frames_per_event);
  require(!all.empty(), Errc::degenerate_input, "no frames in GAN training set");

  ClassCounts support{};
  for (const auto& f : all) support[static_cast<std::size_t>(f.label)] += 1;
  if (!cfg.conditioning_classes.empty()) {
    for (int c : cfg.conditioning_classes) {
      require(c >= 0 && c < kNumClasses, Errc::invalid_argument, "bad conditioning class index");
      require(support[static_cast<std::size_t>(c)] > 0, Errc::degenerate_input,
              std::string("conditioning requested for class with no training frames: ") +
                  kClassNames[static_cast<std::size_t>(c)]);
    }
  }

  // normalize every frame once
  std::vector<std::vector<float>> px(all.size(), std::vector<float>(kGanFramePixels));
  for (std::size_t i = 0; i < all.size(); ++i)
    for (int p = 0; p < kGanFramePixels; ++p)
      px[i][static_cast<std::size_t>(p)] =
          static_cast<float>(all[i].frame->pixels[static_cast<std::size_t>(p)]) / 127.5f - 1.0f;

  // probe = an evenly strided sample across the pool, excluded from training
  std::vector<std::size_t> probe_idx, pool;
  int probe_n = std::min<int>(cfg.probe_size, static_cast<int>(all.size()) / 4);
  if (probe_n > 0) {
    for (int i = 0; i < probe_n; ++i)
      probe_idx.push_back(static_cast<std::size_t>(i) * all.size() / static_cast<std::size_t>(probe_n));
  }
  std::vector<bool> is_probe(all.size(), false);
  for (auto i : probe_idx) is_probe[i] = true;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (!is_probe[i]) pool.push_back(i);
  require(!pool.empty(), Errc::degenerate_input, "probe consumed every training frame");

  auto gnet = make_generator<float>();
  auto dnet = make_discriminator<float>();
  {
    GanModels init = build_gan_models(cfg.seed);
    gnet.import_params(init.generator);
    dnet.import_params(init.discriminator);
  }
  auto gparams = gnet.params();
  auto dparams = dnet.params();
  nn::AdamState gadam, dadam;
  nn::AdamConfig opt;
  opt.lr = cfg.lr;
  opt.beta1 = cfg.beta1;

  Rng rng = Rng(cfg.seed).split(1);

  GanTrainResult result;
  result.models.class_support = support;

  auto forward_d_batch = [&](const std::vector<const float*>& frames,
                             const std::vector<int>& labels,
                             std::vector<nn::CacheT<float>>* caches) {
    return caches ? dnet.forward(d_input(frames, labels), caches)
                  : dnet.forward(d_input(frames, labels));
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates over the pool
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

    double ld_sum = 0.0, lg_sum = 0.0;
    std::int64_t n_batches = 0;

    for (std::size_t at = 0; at < pool.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t take = std::min(static_cast<std::size_t>(cfg.batch_size), pool.size() - at);
      auto n = static_cast<Eigen::Index>(take);
      std::vector<const float*> real(take);
      std::vector<int> labels(take);
      for (std::size_t i = 0; i < take; ++i) {
        real[i] = px[pool[at + i]].data();
        labels[i] = all[pool[at + i]].label;
      }

      // --- D step ---
      nn::Tensor fake_img = gnet.forward(g_input(rng, labels));
      std::vector<const float*> fake(take);
      for (std::size_t i = 0; i < take; ++i)
        fake[i] = fake_img.ptr() + static_cast<Eigen::Index>(i) * kGanFramePixels;

      std::vector<nn::CacheT<float>> dc_real, dc_fake;
      nn::Tensor lr = forward_d_batch(real, labels, &dc_real);
      nn::Tensor lf = forward_d_batch(fake, labels, &dc_fake);

      nn::Tensor dlr = nn::Tensor::zeros({n, 1});
      nn::Tensor dlf = nn::Tensor::zeros({n, 1});
      double ld_batch = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double sr = sigmoid(static_cast<double>(lr.data[i]));
        double sf = sigmoid(static_cast<double>(lf.data[i]));
        ld_batch += gan_losses(sr, sf).first;
        // gradient of -L_D wrt the logits
        dlr.data[i] = static_cast<float>((sr - 1.0) / static_cast<double>(n));
        dlf.data[i] = static_cast<float>(sf / static_cast<double>(n));
      }
      auto dgrads = dnet.zero_grads();
      dnet.backward(dlr, dc_real, &dgrads);
      dnet.backward(dlf, dc_fake, &dgrads);
      nn::adam_step(dparams, dgrads, dadam, opt);

      // --- G step ---
      std::vector<nn::CacheT<float>> gc, dc;
      nn::Tensor gen = gnet.forward(g_input(rng, labels), &gc);
      std::vector<const float*> gen_ptr(take);
      for (std::size_t i = 0; i < take; ++i)
        gen_ptr[i] = gen.ptr() + static_cast<Eigen::Index>(i) * kGanFramePixels;
      nn::Tensor lg = forward_d_batch(gen_ptr, labels, &dc);

      nn::Tensor dlg = nn::Tensor::zeros({n, 1});
      double lg_batch = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double sf = sigmoid(static_cast<double>(lg.data[i]));
        lg_batch += gan_losses(0.5, sf).second;
        dlg.data[i] = static_cast<float>((sf - 1.0) / static_cast<double>(n));
      }
      auto scratch = dnet.zero_grads();
      nn::Tensor dinput = dnet.backward(dlg, dc, &scratch);  // D stays fixed
      nn::Tensor dimg = nn::Tensor::zeros({n, kGanFramePixels});
      for (Eigen::Index i = 0; i < n; ++i)
        std::copy_n(dinput.ptr() + i * (kGanFramePixels + kNumClasses), kGanFramePixels,
                    dimg.ptr() + i * kGanFramePixels);
      auto ggrads = gnet.zero_grads();
      gnet.backward(dimg, gc, &ggrads);
      nn::adam_step(gparams, ggrads, gadam, opt);

      ld_sum += ld_batch / static_cast<double>(n);
      lg_sum += lg_batch / static_cast<double>(n);
      n_batches += 1;
    }

    // probe: held-out real vs fresh fakes
    GanLogEntry entry;
    entry.epoch = epoch;
    entry.loss_d = ld_sum / static_cast<double>(n_batches);
    entry.loss_g = lg_sum / static_cast<double>(n_batches);
    if (!probe_idx.empty()) {
      std::vector<const float*> preal(probe_idx.size());
      std::vector<int> plabels(probe_idx.size());
      for (std::size_t i = 0; i < probe_idx.size(); ++i) {
        preal[i] = px[probe_idx[i]].data();
        plabels[i] = all[probe_idx[i]].label;
      }
      nn::Tensor pfake_img = gnet.forward(g_input(rng, plabels));
      std::vector<const float*> pfake(probe_idx.size());
      for (std::size_t i = 0; i < probe_idx.size(); ++i)
        pfake[i] = pfake_img.ptr() + static_cast<Eigen::Index>(i) * kGanFramePixels;
      nn::Tensor plr = forward_d_batch(preal, plabels, nullptr);
      nn::Tensor plf = forward_d_batch(pfake, plabels, nullptr);
      std::int64_t hits = 0;
      for (Eigen::Index i = 0; i < plr.size(); ++i) {
        if (sigmoid(static_cast<double>(plr.data[i])) > 0.5) ++hits;
        if (sigmoid(static_cast<double>(plf.data[i])) <= 0.5) ++hits;
      }
      entry.probe_acc = static_cast<double>(hits) / (2.0 * static_cast<double>(plr.size()));
    }
    result.log.push_back(entry);
  }

  result.models.generator = gnet.export_params();
  result.models.discriminator = dnet.export_params();
  return result;
}

EnhancementPlan plan_enhancement(const ClassCounts& real, EnhancementStrategy strategy,
                                 double p) {
  std::int64_t n_total = total(real);
  require(n_total > 0, Errc::degenerate_input, "plan_enhancement: empty real counts");
  require(p > 0.0 && p <= 1.0, Errc::invalid_argument,
          "enhancement fraction must be in (0, 1]");
  for (auto c : real) require(c >= 0, Errc::invalid_argument, "negative class count");

  auto budget = static_cast<std::int64_t>(
      std::floor(p * static_cast<double>(n_total) + 0.5));  // round half up

  std::vector<double> weights(kNumClasses, 0.0);
  EnhancementStrategy effective = strategy;
  if (strategy == EnhancementStrategy::ProportionalMissing) {
    std::int64_t top = *std::max_element(real.begin(), real.end());
    std::int64_t gap_sum = 0;
    for (auto c : real) gap_sum += top - c;
    if (gap_sum == 0) {
      effective = EnhancementStrategy::Equal;  // all counts equal: b) is undefined
    } else {
      for (int c = 0; c < kNumClasses; ++c)
        weights[static_cast<std::size_t>(c)] =
            static_cast<double>(top - real[static_cast<std::size_t>(c)]) /
            static_cast<double>(gap_sum);
    }
  }
  if (effective == EnhancementStrategy::ProportionalReal) {
    for (int c = 0; c < kNumClasses; ++c)
      weights[static_cast<std::size_t>(c)] =
          static_cast<double>(real[static_cast<std::size_t>(c)]) / static_cast<double>(n_total);
  } else if (effective == EnhancementStrategy::Equal) {
    for (auto& w : weights) w = 1.0 / kNumClasses;
  }

  auto quotas = largest_remainder(budget, weights);
  EnhancementPlan plan;
  plan.strategy = strategy;
  plan.fraction = p;
  for (int c = 0; c < kNumClasses; ++c)
    plan.added[static_cast<std::size_t>(c)] = quotas[static_cast<std::size_t>(c)];
  return plan;
}

std::vector<Event> synthesize(const GanModels& gan, const EnhancementPlan& plan,
                              std::uint64_t seed, std::int64_t id_base) {
  for (int c = 0; c < kNumClasses; ++c)
    require(plan.added[static_cast<std::size_t>(c)] == 0 ||
                gan.class_support[static_cast<std::size_t>(c)] > 0,
            Errc::degenerate_input,
            std::string("plan requests samples for a class the generator never saw: ") +
                kClassNames[static_cast<std::size_t>(c)]);

  auto net = make_generator<float>();
  net.import_params(gan.generator);
  Rng base(seed);
  std::vector<Event> out;
  std::int64_t idx = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::int64_t j = 0; j < plan.added[static_cast<std::size_t>(c)]; ++j, ++idx) {
      Rng child = base.split(static_cast<std::uint64_t>(idx));
      std::vector<int> label{c};
      nn::Tensor img = net.forward(g_input(child, label));
      Frame f = make_frame(kGanFrameSide, kGanFrameSide);
      for (int p = 0; p < kGanFramePixels; ++p) {
        long q = std::lround((static_cast<double>(img.data[p]) + 1.0) * 127.5);
        f.pixels[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
      }
      Event ev;
      ev.id = id_base + idx;
      ev.label = class_from_index(c);
      ev.environment_id = -1;
      ev.synthetic = true;
      ev.frames.push_back(std::move(f));
      out.push_back(std::move(ev));
    }
  }
  return out;
}

void save_gan(const GanModels& gan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["format"] = kGanFormat;
  j["format_version"] = kGanVersion;
  j["z_dim"] = kGanZDim;
  j["width"] = kGanFrameSide;
  j["height"] = kGanFrameSide;
  j["class_support"] = gan.class_support;
  io::write_json(dir / "gan.json", j);
  nn::save_model(gan.generator, dir / "generator");
  nn::save_model(gan.discriminator, dir / "discriminator");
}

GanModels load_gan(const std::filesystem::path& dir) {
  nlohmann::json j = io::read_json(dir / "gan.json");
  require(j.is_object() && j.value("format", "") == kGanFormat, Errc::version_mismatch,
          "gan.json: not a GAN manifest");
  require(j.value("format_version", -1) == kGanVersion, Errc::version_mismatch,
          "gan.json: unsupported format_version");
  require(j.value("z_dim", -1) == kGanZDim && j.value("width", -1) == kGanFrameSide &&
              j.value("height", -1) == kGanFrameSide,
          Errc::shape_mismatch, "gan.json: incompatible dimensions");
  require(j.contains("class_support") && j["class_support"].is_array() &&
              j["class_support"].size() == kNumClasses,
          Errc::parse_error, "gan.json: bad class_support");
  GanModels gan;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& v = j["class_support"][static_cast<std::size_t>(c)];
    require(v.is_number_integer() && v.get<std::int64_t>() >= 0, Errc::parse_error,
            "gan.json: bad class_support entry");
    gan.class_support[static_cast<std::size_t>(c)] = v.get<std::int64_t>();
  }
  gan.generator = nn::load_model(dir / "generator");
  gan.discriminator = nn::load_model(dir / "discriminator");

  // shape-check against the fixed architectures
  make_generator<float>().import_params(gan.generator);
  make_discriminator<float>().import_params(gan.discriminator);
  return gan;
}

}  // namespace jelly
