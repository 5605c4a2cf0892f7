#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "alref/coarse.hpp"
#include "alref/config_json.hpp"
#include "alref/error.hpp"
#include "alref/loop.hpp"
#include "alref/predictor.hpp"
#include "alref/report.hpp"
#include "alref/strategies.hpp"
#include "alref/synthdata.hpp"

namespace py = pybind11;
using namespace alref;

namespace {

// NumPy arrays use the natural C-order shapes: images (C, H, W), label and
// mask maps (H, W), probabilities (K, H, W).
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

void require_ndim(const py::array& a, int ndim, const char* what) {
  if (a.ndim() != ndim) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(ndim) +
                         "-d array, got " + std::to_string(a.ndim()) + "-d");
  }
}

MultiBandRaster to_image(const F32Array& a) {
  require_ndim(a, 3, "image");
  const auto c = static_cast<int>(a.shape(0));
  const auto h = static_cast<int>(a.shape(1));
  const auto w = static_cast<int>(a.shape(2));
  return MultiBandRaster(c, w, h, std::vector<float>(a.data(), a.data() + a.size()));
}

LabelRaster to_labels(const U8Array& a, int num_classes) {
  require_ndim(a, 2, "labels");
  return LabelRaster(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), num_classes,
                     std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

AcquisitionMask to_mask(const U8Array& a) {
  require_ndim(a, 2, "mask");
  return AcquisitionMask(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                         std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

F32Array from_image(const MultiBandRaster& r) {
  F32Array out({r.bands(), r.height(), r.width()});
  std::copy(r.values().begin(), r.values().end(), out.mutable_data());
  return out;
}

U8Array from_labels(const LabelRaster& r) {
  U8Array out({r.height(), r.width()});
  std::copy(r.data().begin(), r.data().end(), out.mutable_data());
  return out;
}

nlohmann::json to_json_value(const py::object& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text);
}

py::dict record_dict(const CycleRecord& r) {
  py::dict d;
  d["repeat"] = r.repeat;
  d["fold"] = r.fold;
  d["cycle"] = r.cycle;
  d["strategy"] = to_string(r.strategy);
  d["accuracy"] = r.accuracy;
  d["acquisition_rate"] = r.acquisition_rate;
  d["newly_refined"] = r.newly_refined;
  d["seconds"] = r.seconds;
  return d;
}

Pool to_pool(const std::vector<F32Array>& images, const std::vector<U8Array>& labels,
             int num_classes) {
  Pool pool;
  for (const auto& a : images) pool.images.push_back(to_image(a));
  for (const auto& a : labels) pool.fine.push_back(to_labels(a, num_classes));
  return pool;
}

}  // namespace

PYBIND11_MODULE(_alref, m) {
  m.doc() = "Active label refinement for semantic segmentation";
  m.attr("__version__") = ALREF_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());

  m.def(
      "generate_pool",
      [](std::uint64_t seed, int n_images, int width, int height, int bands, int num_classes,
         int blob_count, double noise_sigma, double small_object_rate) {
        SceneSpec spec;
        spec.width = width;
        spec.height = height;
        spec.bands = bands;
        spec.num_classes = num_classes;
        spec.blob_count = blob_count;
        spec.noise_sigma = noise_sigma;
        spec.small_object_rate = small_object_rate;
        py::list out;
        for (const auto& s : generate_pool(seed, n_images, spec)) {
          out.append(py::make_tuple(from_image(s.image), from_labels(s.labels)));
        }
        return out;
      },
      "Synthetic (image, labels) pairs; image is (C, H, W) float32, labels (H, W) uint8.",
      py::arg("seed"), py::arg("n_images"), py::arg("width") = 256, py::arg("height") = 256,
      py::arg("bands") = kDefaultBands, py::arg("num_classes") = kDefaultClasses,
      py::arg("blob_count") = 6, py::arg("noise_sigma") = 0.10,
      py::arg("small_object_rate") = 0.03);

  m.def(
      "simulate_coarse",
      [](const U8Array& labels, int num_classes, std::uint64_t seed, int min_filter,
         int max_filter, int rounds) {
        CoarseSimConfig cfg;
        cfg.seed = seed;
        cfg.min_filter = min_filter;
        cfg.max_filter = max_filter;
        cfg.rounds = rounds;
        const auto result = simulate_coarse(to_labels(labels, num_classes), cfg);
        std::vector<std::tuple<int, int, int>> steps;
        for (const auto& s : result.steps) steps.emplace_back(s.cls, s.fw, s.fh);
        return py::make_tuple(from_labels(result.labels), steps);
      },
      "Coarse labels and the (class, fw, fh) enlargement log.", py::arg("labels"),
      py::arg("num_classes") = kDefaultClasses, py::arg("seed") = 0, py::arg("min_filter") = 2,
      py::arg("max_filter") = 32, py::arg("rounds") = 1);

  m.def(
      "noise_rate",
      [](const U8Array& coarse, const U8Array& fine, int num_classes) {
        return noise_rate(to_labels(coarse, num_classes), to_labels(fine, num_classes));
      },
      py::arg("coarse"), py::arg("fine"), py::arg("num_classes") = kDefaultClasses);

  m.def(
      "entropy",
      [](const F32Array& probs) {
        require_ndim(probs, 3, "probs");
        ProbabilityMap p(static_cast<int>(probs.shape(0)), static_cast<int>(probs.shape(2)),
                         static_cast<int>(probs.shape(1)));
        std::copy(probs.data(), probs.data() + probs.size(), p.probs.begin());
        const auto h = entropy_map(p);
        F64Array out({h.height, h.width});
        std::copy(h.values.begin(), h.values.end(), out.mutable_data());
        return out;
      },
      "Per-pixel entropy in nats of a (K, H, W) probability array.", py::arg("probs"));

  m.def(
      "utility_cs", [](const U8Array& mask) { return utility_cs(to_mask(mask)); },
      "Number of unrefined pixels in a (H, W) 0/1 mask.", py::arg("mask"));

  m.def(
      "utility_us",
      [](const U8Array& mask, const F64Array& entropy) {
        require_ndim(entropy, 2, "entropy");
        EntropyMap h{static_cast<int>(entropy.shape(1)), static_cast<int>(entropy.shape(0)),
                     std::vector<double>(entropy.data(), entropy.data() + entropy.size())};
        return utility_us(to_mask(mask), h);
      },
      "Entropy summed over unrefined pixels.", py::arg("mask"), py::arg("entropy"));

  m.def(
      "select_top_k",
      [](const std::vector<double>& utilities, int k) { return select_top_k(utilities, k); },
      "Indices (ascending) of the k largest utilities; ties go to the lower index.",
      py::arg("utilities"), py::arg("k"));

  m.def(
      "fit_predict",
      [](const std::vector<F32Array>& images, const std::vector<U8Array>& labels,
         const F32Array& test_image, int num_classes, const py::object& config) {
        const auto pool = to_pool(images, labels, num_classes);
        PredictorConfig cfg;
        from_json(to_json_value(config), cfg);
        const auto test = to_image(test_image);
        ProbabilityMap p;
        {
          py::gil_scoped_release release;
          BaselinePredictor predictor;
          predictor.fit(pool.images, pool.fine, cfg);
          p = predictor.predict_proba(test);
        }
        F32Array out({p.num_classes, p.height, p.width});
        std::copy(p.probs.begin(), p.probs.end(), out.mutable_data());
        return out;
      },
      "Trains the baseline predictor and returns (K, H, W) probabilities for test_image.",
      py::arg("images"), py::arg("labels"), py::arg("test_image"),
      py::arg("num_classes") = kDefaultClasses, py::arg("config") = py::none());

  m.def(
      "run_experiment",
      [](const std::vector<F32Array>& images, const std::vector<U8Array>& labels,
         const py::object& config, int num_classes) {
        const auto pool = to_pool(images, labels, num_classes);
        auto cfg = ExperimentConfig::desk();
        from_json(to_json_value(config), cfg);
        std::vector<CycleRecord> records;
        {
          py::gil_scoped_release release;
          records = run_experiment(cfg, pool);
        }
        py::list out;
        for (const auto& r : records) out.append(record_dict(r));
        return out;
      },
      "Repeated leave-one-out refinement experiment; config keys override the desk defaults.",
      py::arg("images"), py::arg("labels"), py::arg("config") = py::none(),
      py::arg("num_classes") = kDefaultClasses);
}
