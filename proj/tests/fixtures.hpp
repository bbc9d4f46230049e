#pragma once

// A small trained system shared by the tests of one binary. Trained once per
// process; cheap enough for unit tests, good enough to translate its toy
// language reasonably.

#include <memory>

#include "adaptmt/synthetic.hpp"
#include "adaptmt/system.hpp"

namespace adaptmt::testing {

inline ToyTaskOptions small_task_options() {
  ToyTaskOptions o;
  o.general_pairs = 300;
  o.dev_pairs = 30;
  o.test_sentences = 20;
  o.nouns = 12;
  o.adjectives = 5;
  o.verbs = 6;
  o.terms = 3;
  o.seed = 7;
  return o;
}

inline const ToyTask& small_task() {
  static const ToyTask task = make_toy_task(small_task_options());
  return task;
}

inline std::shared_ptr<const TranslationSystem> small_system() {
  static const std::shared_ptr<const TranslationSystem> system = [] {
    SystemTrainingOptions o;
    o.merges = 80;
    o.embed_size = 16;
    o.hidden_size = 16;
    o.train.epochs = 40;
    o.train.learning_rate = 0.02;
    o.train.batch_size = 20;
    auto trained = train_system(small_task().general, small_task().dev, o);
    trained.system.checkpoint_hash = "small-fixture";
    return std::make_shared<const TranslationSystem>(std::move(trained.system));
  }();
  return system;
}

}  // namespace adaptmt::testing
