#include "alref/config_json.hpp"

#include <string>

#include "alref/error.hpp"

namespace alref {

namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

nlohmann::json augmentations_to_json(unsigned a) {
  auto arr = nlohmann::json::array();
  if (a & kAugRotate90) arr.push_back("rotate90");
  if (a & kAugFlipH) arr.push_back("flip_h");
  if (a & kAugFlipV) arr.push_back("flip_v");
  return arr;
}

unsigned augmentations_from_json(const nlohmann::json& arr) {
  unsigned a = 0;
  for (const auto& v : arr) {
    const auto s = v.get<std::string>();
    if (s == "rotate90") a |= kAugRotate90;
    else if (s == "flip_h") a |= kAugFlipH;
    else if (s == "flip_v") a |= kAugFlipV;
    else throw FormatError("unknown augmentation '" + s + "'");
  }
  return a;
}

}  // namespace

void to_json(nlohmann::json& j, const PredictorConfig& c) {
  j = {{"window", c.window},
       {"learning_rate", c.learning_rate},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"epochs", c.epochs},
       {"chips_per_epoch", c.chips_per_epoch},
       {"chip_size", c.chip_size},
       {"augmentations", augmentations_to_json(c.augmentations)},
       {"class_weight_mode",
        c.class_weight_mode == ClassWeightMode::kUniform ? "uniform" : "inverse_frequency"},
       {"seed", c.seed},
       {"warm_start", c.warm_start}};
}

void from_json(const nlohmann::json& j, PredictorConfig& c) {
  read_opt(j, "window", c.window);
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "adam_beta1", c.adam_beta1);
  read_opt(j, "adam_beta2", c.adam_beta2);
  read_opt(j, "adam_eps", c.adam_eps);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "chips_per_epoch", c.chips_per_epoch);
  read_opt(j, "chip_size", c.chip_size);
  if (auto it = j.find("augmentations"); it != j.end()) {
    c.augmentations = augmentations_from_json(*it);
  }
  if (auto it = j.find("class_weight_mode"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "uniform") c.class_weight_mode = ClassWeightMode::kUniform;
    else if (s == "inverse_frequency") c.class_weight_mode = ClassWeightMode::kInverseFrequency;
    else throw FormatError("unknown class_weight_mode '" + s + "'");
  }
  read_opt(j, "seed", c.seed);
  read_opt(j, "warm_start", c.warm_start);
}

void to_json(nlohmann::json& j, const CoarseSimConfig& c) {
  j = {{"min_filter", c.min_filter},
       {"max_filter", c.max_filter},
       {"seed", c.seed},
       {"class_order_policy",
        c.class_order_policy == ClassOrderPolicy::kFixedList ? "fixed_list" : "random_permutation"},
       {"fixed_order", c.fixed_order},
       {"rounds", c.rounds}};
}

void from_json(const nlohmann::json& j, CoarseSimConfig& c) {
  read_opt(j, "min_filter", c.min_filter);
  read_opt(j, "max_filter", c.max_filter);
  read_opt(j, "seed", c.seed);
  if (auto it = j.find("class_order_policy"); it != j.end()) {
    const auto s = it->get<std::string>();
    if (s == "fixed_list") c.class_order_policy = ClassOrderPolicy::kFixedList;
    else if (s == "random_permutation") c.class_order_policy = ClassOrderPolicy::kRandomPermutation;
    else throw FormatError("unknown class_order_policy '" + s + "'");
  }
  read_opt(j, "fixed_order", c.fixed_order);
  read_opt(j, "rounds", c.rounds);
}

void to_json(nlohmann::json& j, const SceneSpec& s) {
  j = {{"seed", s.seed},
       {"width", s.width},
       {"height", s.height},
       {"bands", s.bands},
       {"num_classes", s.num_classes},
       {"blob_count", s.blob_count},
       {"noise_sigma", s.noise_sigma},
       {"small_object_rate", s.small_object_rate}};
}

void from_json(const nlohmann::json& j, SceneSpec& s) {
  read_opt(j, "seed", s.seed);
  read_opt(j, "width", s.width);
  read_opt(j, "height", s.height);
  read_opt(j, "bands", s.bands);
  read_opt(j, "num_classes", s.num_classes);
  read_opt(j, "blob_count", s.blob_count);
  read_opt(j, "noise_sigma", s.noise_sigma);
  read_opt(j, "small_object_rate", s.small_object_rate);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"n_candidates", c.n_candidates},
       {"k_select", c.k_select},
       {"cycles", c.cycles},
       {"strategy", std::string(to_string(c.strategy))},
       {"repeats", c.repeats},
       {"candidate_size", c.candidate_size},
       {"predictor", c.predictor},
       {"coarse", c.coarse},
       {"oracle_keep_coarse_probability", c.oracle.keep_coarse_probability},
       {"master_seed", c.master_seed},
       {"jobs", c.jobs}};
  j["max_acquisition_rate"] =
      c.max_acquisition_rate ? nlohmann::json(*c.max_acquisition_rate) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  read_opt(j, "n_candidates", c.n_candidates);
  read_opt(j, "k_select", c.k_select);
  read_opt(j, "cycles", c.cycles);
  if (auto it = j.find("strategy"); it != j.end()) {
    const auto s = parse_strategy(it->get<std::string>());
    if (!s) throw FormatError("unknown strategy '" + it->get<std::string>() + "'");
    c.strategy = *s;
  }
  read_opt(j, "repeats", c.repeats);
  read_opt(j, "candidate_size", c.candidate_size);
  if (auto it = j.find("predictor"); it != j.end()) from_json(*it, c.predictor);
  if (auto it = j.find("coarse"); it != j.end()) from_json(*it, c.coarse);
  read_opt(j, "oracle_keep_coarse_probability", c.oracle.keep_coarse_probability);
  read_opt(j, "master_seed", c.master_seed);
  read_opt(j, "jobs", c.jobs);
  if (auto it = j.find("max_acquisition_rate"); it != j.end()) {
    if (it->is_null()) c.max_acquisition_rate.reset();
    else c.max_acquisition_rate = it->get<double>();
  }
}

}  // namespace alref
