#include <doctest.h>

#include "alref/config_json.hpp"
#include "alref/error.hpp"

using namespace alref;
using nlohmann::json;

TEST_CASE("experiment config round-trips through JSON") {
  auto cfg = ExperimentConfig::desk();
  cfg.strategy = StrategyKind::kCS;
  cfg.master_seed = 123456789012345ULL;
  cfg.max_acquisition_rate = 0.4;
  cfg.predictor.learning_rate = 0.003;
  cfg.predictor.augmentations = kAugFlipV;
  cfg.predictor.class_weight_mode = ClassWeightMode::kUniform;
  cfg.predictor.warm_start = true;
  cfg.coarse.class_order_policy = ClassOrderPolicy::kFixedList;
  cfg.coarse.fixed_order = {2, 0, 1, 3};
  cfg.oracle.keep_coarse_probability = 0.1;
  const json j = cfg;
  ExperimentConfig back;
  from_json(json::parse(j.dump()), back);
  CHECK(json(back) == j);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.max_acquisition_rate == cfg.max_acquisition_rate);
  CHECK(back.coarse.fixed_order == cfg.coarse.fixed_order);
}

TEST_CASE("absent keys keep the current values") {
  auto cfg = ExperimentConfig::desk();
  from_json(json{{"cycles", 3}}, cfg);
  CHECK(cfg.cycles == 3);
  CHECK(cfg.n_candidates == ExperimentConfig::desk().n_candidates);
  CHECK(cfg.predictor.chip_size == 64);
}

TEST_CASE("unknown enum spellings are format errors") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(from_json(json{{"strategy", "best"}}, cfg), FormatError);
  PredictorConfig pc;
  CHECK_THROWS_AS(from_json(json{{"class_weight_mode", "odd"}}, pc), FormatError);
}

TEST_CASE("full and desk protocols") {
  const auto p = ExperimentConfig::full();
  CHECK(p.n_candidates == 128);
  CHECK(p.k_select == 16);
  CHECK(p.cycles == 30);
  CHECK(p.repeats == 20);
  CHECK(p.candidate_size == 128);
  CHECK(p.predictor.chip_size == 128);
  CHECK(p.predictor.epochs == 15);
  const auto d = ExperimentConfig::desk();
  CHECK(d.n_candidates == 32);
  CHECK(d.k_select == 4);
  CHECK(d.cycles == 15);
  CHECK(d.repeats == 5);
  CHECK(d.candidate_size == 64);
  CHECK_NOTHROW(p.validate());
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("scene spec JSON") {
  SceneSpec s;
  s.noise_sigma = 0.07;
  s.seed = 9;
  SceneSpec back;
  from_json(json(s), back);
  CHECK(back.noise_sigma == 0.07);
  CHECK(back.seed == 9);
}
