#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "gradcheck.hpp"
#include "jelly/binio.hpp"
#include "jelly/error.hpp"
#include "jelly/nnkit.hpp"
#include "jelly/rng.hpp"
#include "test_util.hpp"

using namespace jelly;
namespace nn = jelly::nn;

TEST_CASE("tensor views, reshape, and cast") {
  auto t = nn::Tensor::zeros({2, 3});
  t.mat(2, 3)(1, 2) = 5.0f;
  CHECK(t.data[5] == 5.0f);
  auto r = t.reshaped({3, 2});
  CHECK(r.shape == std::vector<Eigen::Index>{3, 2});
  CHECK(r.data[5] == 5.0f);
  CHECK_THROWS_AS((void)t.reshaped({4, 2}), Error);

  auto d = t.cast<double>();
  CHECK(d.data[5] == 5.0);
  CHECK(d.shape == t.shape);
}

TEST_CASE("every layer's gradient matches finite differences") {
  Rng rng(1);
  auto check = [&](std::unique_ptr<nn::Layer<double>> layer, std::vector<Eigen::Index> shape) {
    layer->visit_params([&](const std::string&, gradcheck::DTensor* t) {
      for (Eigen::Index i = 0; i < t->size(); ++i) t->data[i] = rng.uniform(-1.0, 1.0);
    });
    auto x = gradcheck::spread_tensor(std::move(shape), rng);
    double err = gradcheck::max_rel_err(*layer, x, rng);
    CHECK(err < 1e-4);
  };

  check(std::make_unique<nn::Dense<double>>(5, 3), {2, 5});
  check(std::make_unique<nn::Conv2D<double>>(2, 3, 3, 1), {2, 2, 5, 5});
  check(std::make_unique<nn::Conv2D<double>>(1, 2, 3, 0), {1, 1, 4, 4});
  check(std::make_unique<nn::Conv1D<double>>(3, 2, 3), {2, 3, 7});
  check(std::make_unique<nn::MaxPool2<double>>(), {2, 2, 4, 4});
  check(std::make_unique<nn::GlobalMeanMax1D<double>>(), {2, 3, 5});
  check(std::make_unique<nn::ReLU<double>>(), {3, 7});
  check(std::make_unique<nn::LeakyReLU<double>>(0.2), {3, 7});
  check(std::make_unique<nn::Tanh<double>>(), {3, 7});
  check(std::make_unique<nn::Flatten<double>>(), {2, 3, 4, 4});
}

TEST_CASE("softmax hand values") {
  auto t = nn::Tensor::zeros({1, 6});
  t.data[0] = float(std::log(2.0));
  auto s = nn::softmax(t);
  CHECK(s.data[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-6));
  for (int i = 1; i < 6; ++i) CHECK(s.data[i] == doctest::Approx(1.0 / 7.0).epsilon(1e-6));

  // shift invariance
  auto u = nn::Tensor::zeros({1, 6});
  for (int i = 0; i < 6; ++i) u.data[i] = float(i) * 0.3f + 100.0f;
  auto su = nn::softmax(u);
  double sum = 0.0;
  for (int i = 0; i < 6; ++i) sum += double(su.data[i]);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("weighted cross-entropy hand values") {
  ConfidenceVector p;
  p << 0.5f, 0.5f, 0.0f, 0.0f, 0.0f, 0.0f;
  CHECK(nn::weighted_cross_entropy(p, ClassLabel::Background, nn::LossWeights{}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-7));
  auto w = nn::LossWeights::jellyfish_seaweed(2.0, 1.0);
  CHECK(nn::weighted_cross_entropy(p, ClassLabel::Jellyfish, w) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-7));

  // zero probability hits the 1e-12 clamp instead of inf
  CHECK(nn::weighted_cross_entropy(p, ClassLabel::Fish, nn::LossWeights{}) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-7));
}

TEST_CASE("weighted_softmax_ce agrees with the two-step computation") {
  Rng rng(3);
  auto logits = nn::Tensor::zeros({4, 6});
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data[i] = float(rng.uniform(-2.0, 2.0));
  std::vector<int> targets = {1, 4, 0, 1};
  auto w = nn::LossWeights::jellyfish_seaweed(2.0, 1.0);

  double fused = nn::weighted_softmax_ce(logits, targets, w, static_cast<nn::Tensor*>(nullptr));
  auto probs = nn::softmax(logits);
  double manual = 0.0;
  for (int i = 0; i < 4; ++i) {
    ConfidenceVector row;
    for (int c = 0; c < 6; ++c) row[c] = probs.mat(4, 6)(i, c);
    manual += nn::weighted_cross_entropy(row, class_from_index(targets[std::size_t(i)]), w);
  }
  CHECK(fused == doctest::Approx(manual / 4.0).epsilon(1e-5));
}

TEST_CASE("adam's first step moves each weight by roughly lr*sign(grad)") {
  auto p = nn::Tensor::zeros({3});
  p.data << 1.0f, -2.0f, 0.5f;
  auto g = nn::Tensor::zeros({3});
  g.data << 0.3f, -0.7f, 1e-3f;

  std::map<std::string, nn::Tensor*> params{{"w", &p}};
  std::map<std::string, nn::Tensor> grads;
  grads.emplace("w", g);
  nn::AdamState state;
  nn::AdamConfig cfg;
  nn::adam_step(params, grads, state, cfg);

  CHECK(p.data[0] == doctest::Approx(1.0 - cfg.lr).epsilon(1e-3));
  CHECK(p.data[1] == doctest::Approx(-2.0 + cfg.lr).epsilon(1e-3));
  CHECK(p.data[2] < 0.5f);  // small grads still step, damped by eps only

  auto g2 = nn::Tensor::zeros({4});
  std::map<std::string, nn::Tensor> bad;
  bad.emplace("w", g2);
  CHECK_THROWS_AS(nn::adam_step(params, bad, state, cfg), Error);
}

TEST_CASE("sequential rejects duplicate layer names and bad imports") {
  nn::Sequential<float> net;
  net.add("a", std::make_unique<nn::Dense<float>>(4, 3));
  CHECK_THROWS_AS(net.add("a", std::make_unique<nn::ReLU<float>>()), Error);

  auto params = net.export_params();
  CHECK(params.count("a.w") == 1);
  CHECK(params.count("a.b") == 1);

  auto missing = params;
  missing.erase("a.b");
  CHECK_THROWS_AS(net.import_params(missing), Error);

  auto extra = params;
  extra["zz"] = nn::Tensor::zeros({1});
  CHECK_THROWS_AS(net.import_params(extra), Error);

  auto wrong = params;
  wrong["a.w"] = nn::Tensor::zeros({3, 5});
  CHECK_THROWS_AS(net.import_params(wrong), Error);
}

TEST_CASE("a small dense net memorizes 20 random samples") {
  Rng rng(7);
  const int n = 20;
  auto x = nn::Tensor::zeros({n, 8});
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data[i] = float(rng.uniform(-1.0, 1.0));
  std::vector<int> targets;
  for (int i = 0; i < n; ++i) targets.push_back(rng.uniform_int(0, 5));

  nn::Sequential<float> net;
  net.add("d1", std::make_unique<nn::Dense<float>>(8, 32));
  net.add("r1", std::make_unique<nn::ReLU<float>>());
  net.add("d2", std::make_unique<nn::Dense<float>>(32, 6));
  auto params = net.params();
  Rng init(8);
  nn::fill_he_uniform(*params.at("d1.w"), 8, init);
  nn::fill_he_uniform(*params.at("d2.w"), 32, init);

  nn::AdamState state;
  nn::AdamConfig opt;
  double loss = 0.0;
  for (int step = 0; step < 2000; ++step) {
    std::vector<nn::CacheT<float>> caches;
    auto logits = net.forward(x, &caches);
    nn::Tensor dlogits;
    loss = nn::weighted_softmax_ce(logits, targets, nn::LossWeights{}, &dlogits);
    if (loss < 0.005) break;
    auto grads = net.zero_grads();
    net.backward(dlogits, caches, &grads);
    nn::adam_step(params, grads, state, opt);
  }
  CHECK(loss < 0.01);
}

TEST_CASE("model save/load round-trips bytes and values") {
  testutil::TempDir tmp("nnkit-io");
  nn::Sequential<float> net;
  net.add("d", std::make_unique<nn::Dense<float>>(3, 2));
  auto p = net.params();
  Rng rng(9);
  nn::fill_uniform(*p.at("d.w"), -1.0, 1.0, rng);
  nn::fill_uniform(*p.at("d.b"), -1.0, 1.0, rng);
  auto exported = net.export_params();

  nn::save_model(exported, tmp.path / "m1");
  auto loaded = nn::load_model(tmp.path / "m1");
  CHECK(loaded.size() == exported.size());
  for (const auto& [name, t] : exported) {
    REQUIRE(loaded.count(name) == 1);
    CHECK(loaded.at(name).shape == t.shape);
    for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(loaded.at(name).data[i] == t.data[i]);
  }

  nn::save_model(loaded, tmp.path / "m2");
  CHECK(io::read_bytes(tmp.path / "m1" / "weights.bin") ==
        io::read_bytes(tmp.path / "m2" / "weights.bin"));
  CHECK(io::read_bytes(tmp.path / "m1" / "model.json") ==
        io::read_bytes(tmp.path / "m2" / "model.json"));
}

TEST_CASE("model loading reports specific failures") {
  testutil::TempDir tmp("nnkit-err");
  nn::ModelParams params;
  params["w"] = nn::Tensor::zeros({2, 2});
  params["b"] = nn::Tensor::zeros({2});
  nn::save_model(params, tmp.path / "m");

  CHECK_THROWS_WITH_AS((void)nn::load_model(tmp.path / "gone"),
                       doctest::Contains("missing_file"), Error);

  auto j = io::read_json(tmp.path / "m" / "model.json");
  j["format_version"] = 9;
  io::write_json(tmp.path / "m" / "model.json", j);
  try {
    (void)nn::load_model(tmp.path / "m");
    FAIL("expected version_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::version_mismatch);
  }
}
