#include <cmath>
#include <random>

#include "adaptmt/error.hpp"
#include "adaptmt/optim.hpp"
#include "adaptmt/system.hpp"
#include "doctest.h"

using namespace adaptmt;

namespace {

ModelConfig tiny(int vocab, int hidden) {
  ModelConfig c;
  c.source_vocab = vocab;
  c.target_vocab = vocab;
  c.embed_size = hidden;
  c.hidden_size = hidden;
  return c;
}

Gradient filled(const ModelParameters& p, double value) {
  auto g = zeros_like(p);
  g.for_each([&](std::string_view, auto& t) { t.setConstant(value); });
  return g;
}

double max_abs_difference(Tensors a, const Tensors& b) {
  double worst = 0.0;
  a.zip(b, [&](std::string_view, auto& x, const auto& y) {
    if (x.size()) worst = std::max(worst, (x - y).cwiseAbs().maxCoeff());
  });
  return worst;
}

std::vector<EncodedPair> copy_pairs(std::mt19937_64& rng, int vocab, std::size_t count) {
  std::uniform_int_distribution<int> id(kNumReserved, vocab - 1), len(2, 5);
  std::vector<EncodedPair> pairs;
  for (std::size_t i = 0; i < count; ++i) {
    EncodedPair p;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) p.x.push_back(id(rng));
    p.y = p.x;
    p.x.push_back(kEosId);
    p.y.insert(p.y.begin(), kBosId);
    p.y.push_back(kEosId);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

const EncodedPair kPair{{4, 6, 5, kEosId}, {kBosId, 7, 4, kEosId}};

}  // namespace

TEST_CASE("adam first step moves every weight by about the learning rate") {
  auto p = init_parameters(tiny(8, 3), 1);
  const auto before = p.weights;
  auto state = AdamState::fresh(p, 0.0002);
  adam_step(p, filled(p, 0.7), state);
  CHECK(state.step == 1);
  auto diff = p.weights;
  diff.zip(before, [](std::string_view, auto& d, const auto& b) { d -= b; });
  diff.for_each([](std::string_view name, const auto& t) {
    if (t.size() == 0) return;
    INFO(name);
    CHECK(t.maxCoeff() == doctest::Approx(-0.0002).epsilon(1e-6));
    CHECK(t.minCoeff() == doctest::Approx(-0.0002).epsilon(1e-6));
  });

  const auto after_one = p.weights;
  adam_step(p, zeros_like(p), state);
  // Momentum keeps moving the weights after a zero gradient.
  CHECK(max_abs_difference(p.weights, after_one) > 0.0);
}

TEST_CASE("adam with zero gradient from a fresh state is a no-op") {
  auto p = init_parameters(tiny(8, 3), 2);
  const auto before = p.weights;
  auto state = AdamState::fresh(p, 0.01);
  adam_step(p, zeros_like(p), state);
  CHECK(p.weights == before);
}

TEST_CASE("non-finite gradients are refused without side effects") {
  auto p = init_parameters(tiny(8, 3), 3);
  const auto before = p.weights;
  auto bad = filled(p, 0.1);
  bad.output_b(2) = std::nan("");
  auto state = AdamState::fresh(p, 0.01);
  CHECK_THROWS_AS(adam_step(p, bad, state), NumericError);
  CHECK(state.step == 0);
  CHECK_THROWS_AS(sgd_step(p, bad, 0.1), NumericError);
  CHECK(p.weights == before);
}

TEST_CASE("sgd step") {
  auto p = init_parameters(tiny(8, 3), 4);
  p.weights.output_b.setOnes();
  const auto g = filled(p, 1.0);
  const auto gen = p.generation;
  sgd_step(p, g, 0.1);
  CHECK(p.generation > gen);
  CHECK(p.weights.output_b(0) == doctest::Approx(0.9));
  CHECK_THROWS_AS(sgd_step(p, g, 0.0), ValidationError);
  CHECK_THROWS_AS(sgd_step(p, g, -1.0), ValidationError);

  // Two steps of lr equal one step of 2 lr on a fixed gradient.
  auto a = init_parameters(tiny(8, 3), 5), b = a;
  const auto h = filled(a, 0.25);
  sgd_step(a, h, 0.05);
  sgd_step(a, h, 0.05);
  sgd_step(b, h, 0.1);
  CHECK(max_abs_difference(a.weights, b.weights) < 1e-15);
}

TEST_CASE("clipping rescales to the maximum norm") {
  auto p = init_parameters(tiny(5, 2), 1);
  auto g = filled(p, 1.0);
  std::size_t n = 0;
  g.for_each([&](std::string_view, const auto& t) { n += t.size(); });
  clip_gradient(g, 2.0);
  double sq = 0.0;
  g.for_each([&](std::string_view, const auto& t) { sq += t.squaredNorm(); });
  CHECK(std::sqrt(sq) == doctest::Approx(2.0));
  auto small = filled(p, 1e-6);
  const auto copy = small;
  clip_gradient(small, 2.0);
  CHECK(small == copy);
}

TEST_CASE("online update") {
  OnlineUpdatePolicy single;
  single.updates_per_sample = 1;
  single.learning_rate = 0.05;

  auto a = init_parameters(tiny(9, 4), 6), b = a;
  CHECK(online_update(a, kPair, single) == 1);
  sgd_step(b, loss_and_gradient(b, kPair.x, kPair.y, 0.0).second, 0.05);
  CHECK(a.weights == b.weights);

  OnlineUpdatePolicy policy;
  auto c = init_parameters(tiny(9, 4), 6);
  const double before = loss(c, kPair.x, kPair.y, 0.0).loss;
  CHECK(online_update(c, kPair, policy) == 2);
  CHECK(loss(c, kPair.x, kPair.y, 0.0).loss < before);

  // Reusing the first gradient differs from recomputing it.
  auto d = init_parameters(tiny(9, 4), 6);
  policy.recompute_gradient = false;
  online_update(d, kPair, policy);
  CHECK_FALSE(c.weights == d.weights);

  OnlineUpdatePolicy invalid;
  invalid.updates_per_sample = 0;
  CHECK_THROWS_AS(invalid.validate(), ValidationError);
  invalid = {};
  invalid.learning_rate = 0.0;
  CHECK_THROWS_AS(online_update(d, kPair, invalid), ValidationError);
}

TEST_CASE("failed online update rolls back bit for bit") {
  auto p = init_parameters(tiny(9, 4), 7);
  p.weights *= 3.0;
  const auto before = p;
  OnlineUpdatePolicy policy;
  policy.learning_rate = 1e300;
  CHECK_THROWS_AS(online_update(p, kPair, policy), NumericError);
  CHECK(p.weights == before.weights);
}

TEST_CASE("training bookkeeping") {
  std::mt19937_64 rng(1);
  const auto corpus = copy_pairs(rng, 10, 12);
  const auto dev = copy_pairs(rng, 10, 4);
  const auto init = init_parameters(tiny(10, 4), 1);

  TrainOptions none;
  none.epochs = 0;
  const auto idle = train(init, corpus, dev, none);
  CHECK(idle.best.weights == init.weights);
  CHECK(idle.dev_loss.empty());
  CHECK(idle.best_epoch == 0);

  TrainOptions full;
  full.epochs = 3;
  full.batch_size = 100;
  full.threads = 1;
  std::vector<std::size_t> seen;
  full.on_epoch = [&](std::size_t e, double, double) { seen.push_back(e); };
  const auto r = train(init, corpus, dev, full);
  CHECK(r.updates == 3);
  CHECK(r.dev_loss.size() == 3);
  CHECK(seen == std::vector<std::size_t>{1, 2, 3});
  CHECK(mean_token_loss(r.best, dev) == doctest::Approx(r.dev_loss[r.best_epoch - 1]));

  TrainOptions batches = full;
  batches.batch_size = 5;
  batches.on_epoch = {};
  CHECK(train(init, corpus, dev, batches).updates == 9);

  TrainOptions threaded = batches;
  threaded.threads = 3;
  CHECK(train(init, corpus, dev, threaded).best.weights == train(init, corpus, dev, batches).best.weights);

  TrainOptions zero_batch = batches;
  zero_batch.batch_size = 0;
  CHECK_THROWS_AS(train(init, corpus, dev, zero_batch), ValidationError);
}

TEST_CASE("training learns a copy task") {
  std::mt19937_64 rng(3);
  const auto corpus = copy_pairs(rng, 10, 50);
  const auto dev = copy_pairs(rng, 10, 10);
  const auto init = init_parameters(tiny(10, 32), 2);
  TrainOptions o;
  o.epochs = 30;
  o.batch_size = 10;
  o.learning_rate = 0.01;
  const double start = mean_token_loss(init, dev);
  const auto r = train(init, corpus, dev, o);
  MESSAGE("copy task dev loss " << start << " -> " << r.dev_loss[r.best_epoch - 1]);
  CHECK(r.dev_loss[r.best_epoch - 1] <= 0.2 * start);
}

TEST_CASE("key-value config") {
  auto c = KeyValueConfig::parse("# comment\nhidden = 64\nname=toy run\n\nlr=0.005\n");
  CHECK(c.get_int("hidden", 0) == 64);
  CHECK(c.get("name", "") == "toy run");
  CHECK(c.get_double("lr", 0) == doctest::Approx(0.005));
  CHECK(c.get_int("missing", 7) == 7);
  CHECK(KeyValueConfig::parse(c.serialize()).values() == c.values());
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), ValidationError);
  CHECK_THROWS_AS(c.get_int("name", 0), ValidationError);
}

TEST_CASE("checkpoint round trip") {
  const std::vector<Tokens> text{{"low", "lower", "newest"}, {"wider", "new"}};
  const auto bpe = bpe_learn(text, 6);
  const auto vocab = Vocabulary::from_bpe(bpe);
  TranslationSystem s{init_parameters(tiny(static_cast<int>(vocab.size()), 3), 9), vocab, bpe, {}};
  s.params.weights.output_b(0) = 1.0 / 3.0;

  const auto bytes = serialize_checkpoint(s.params, s.vocab, s.bpe);
  const auto loaded = parse_checkpoint(bytes, bpe);
  CHECK(loaded.vocab == vocab);
  CHECK(loaded.params.config == s.params.config);
  CHECK(loaded.params.weights.output_b(0) == static_cast<double>(static_cast<float>(1.0 / 3.0)));
  CHECK(max_abs_difference(loaded.params.weights, s.params.weights) < 1e-7);
  CHECK(serialize_checkpoint(loaded.params, loaded.vocab, loaded.bpe) == bytes);
  CHECK_FALSE(loaded.checkpoint_hash.empty());

  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 3), bpe), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("garbage", bpe), CheckpointError);
  const auto other_bpe = bpe_learn(text, 2);
  CHECK_THROWS_AS(parse_checkpoint(bytes, other_bpe), CheckpointError);
}
