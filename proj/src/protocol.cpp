#include "alref/protocol.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <string>

#include "alref/base64.hpp"
#include "alref/config_json.hpp"
#include "alref/error.hpp"

namespace alref {

namespace {

std::vector<std::uint8_t> f32_bytes(std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (float v : values) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
  }
  return out;
}

std::vector<float> f32_values(const std::vector<std::uint8_t>& bytes) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

void expect(const Tensor& t, DType dtype, const char* what) {
  if (t.dtype != dtype) throw ProtocolError(std::string(what) + ": wrong dtype");
  if (t.shape.size() != 3 || t.shape[0] < 1 || t.shape[1] < 1 || t.shape[2] < 1) {
    throw ProtocolError(std::string(what) + ": shape must be [C, W, H] with positive entries");
  }
}

nlohmann::json error_response(std::int64_t id, const std::string& message) {
  return {{"op", "error"}, {"id", id}, {"message", message}};
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

nlohmann::json encode_tensor(const Tensor& t) {
  return {{"shape", t.shape},
          {"dtype", t.dtype == DType::kF32 ? "f32" : "u8"},
          {"data", base64_encode(t.data)}};
}

Tensor decode_tensor(const nlohmann::json& j) {
  try {
    Tensor t;
    t.shape = j.at("shape").get<std::vector<std::int64_t>>();
    for (auto d : t.shape) {
      if (d < 0) throw ProtocolError("tensor: negative dimension");
    }
    const auto dtype = j.at("dtype").get<std::string>();
    if (dtype == "f32") t.dtype = DType::kF32;
    else if (dtype == "u8") t.dtype = DType::kU8;
    else throw ProtocolError("tensor: unknown dtype '" + dtype + "'");
    t.data = base64_decode(j.at("data").get<std::string>());
    if (t.data.size() != t.element_count() * t.element_size()) {
      throw ProtocolError("tensor: payload of " + std::to_string(t.data.size()) +
                          " bytes does not match shape x dtype");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("tensor: ") + e.what());
  } catch (const FormatError& e) {
    throw ProtocolError(std::string("tensor: ") + e.what());
  }
}

Tensor to_tensor(const MultiBandRaster& image) {
  return {{image.bands(), image.width(), image.height()}, DType::kF32, f32_bytes(image.values())};
}

Tensor to_tensor(const LabelRaster& labels) {
  return {{1, labels.width(), labels.height()},
          DType::kU8,
          std::vector<std::uint8_t>(labels.data().begin(), labels.data().end())};
}

Tensor to_tensor(const ProbabilityMap& probs) {
  return {{probs.num_classes, probs.width, probs.height}, DType::kF32, f32_bytes(probs.probs)};
}

MultiBandRaster image_from_tensor(const Tensor& t) {
  expect(t, DType::kF32, "image");
  try {
    return MultiBandRaster(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                           static_cast<int>(t.shape[2]), f32_values(t.data));
  } catch (const Error& e) {
    throw ProtocolError(std::string("image: ") + e.what());
  }
}

LabelRaster labels_from_tensor(const Tensor& t, int num_classes) {
  expect(t, DType::kU8, "labels");
  if (t.shape[0] != 1) throw ProtocolError("labels: channel count must be 1");
  try {
    return LabelRaster(static_cast<int>(t.shape[1]), static_cast<int>(t.shape[2]), num_classes,
                       t.data);
  } catch (const Error& e) {
    throw ProtocolError(std::string("labels: ") + e.what());
  }
}

ProbabilityMap probabilities_from_tensor(const Tensor& t) {
  expect(t, DType::kF32, "probs");
  ProbabilityMap p;
  p.num_classes = static_cast<int>(t.shape[0]);
  p.width = static_cast<int>(t.shape[1]);
  p.height = static_cast<int>(t.shape[2]);
  p.probs = f32_values(t.data);
  return p;
}

nlohmann::json handle_request(const nlohmann::json& request, Predictor& backend, bool& shutdown) {
  std::int64_t id = -1;
  try {
    if (!request.is_object()) return error_response(-1, "request is not a JSON object");
    auto id_it = request.find("id");
    if (id_it == request.end() || !id_it->is_number_integer()) {
      return error_response(-1, "request lacks an integer id");
    }
    id = id_it->get<std::int64_t>();
    const auto op = request.at("op").get<std::string>();
    if (op == "hello") {
      return {{"op", "ok"}, {"id", id}, {"version", kProtocolVersion}};
    }
    if (op == "shutdown") {
      shutdown = true;
      return {{"op", "ok"}, {"id", id}};
    }
    if (op == "train") {
      const auto& config = request.at("config");
      const int num_classes = config.value("num_classes", kDefaultClasses);
      PredictorConfig pc;
      if (auto it = config.find("predictor"); it != config.end()) from_json(*it, pc);
      std::vector<MultiBandRaster> images;
      std::vector<LabelRaster> labels;
      for (const auto& t : request.at("images")) images.push_back(image_from_tensor(decode_tensor(t)));
      for (const auto& t : request.at("labels")) {
        labels.push_back(labels_from_tensor(decode_tensor(t), num_classes));
      }
      backend.fit(images, labels, pc);
      return {{"op", "ok"}, {"id", id}};
    }
    if (op == "predict") {
      const auto image = image_from_tensor(decode_tensor(request.at("image")));
      return {{"op", "ok"}, {"id", id}, {"probs", encode_tensor(to_tensor(backend.predict_proba(image)))}};
    }
    return error_response(id, "unknown op '" + op + "'");
  } catch (const std::exception& e) {
    return error_response(id, e.what());
  }
}

void serve(std::istream& in, std::ostream& out, Predictor& backend) {
  std::string line;
  bool shutdown = false;
  while (!shutdown && std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json response;
    try {
      response = handle_request(nlohmann::json::parse(line), backend, shutdown);
    } catch (const nlohmann::json::parse_error& e) {
      response = error_response(-1, std::string("malformed JSON: ") + e.what());
    }
    out << response.dump() << '\n';
    out.flush();
  }
}

void UniformPredictor::fit(std::span<const MultiBandRaster>, std::span<const LabelRaster> labels,
                           const PredictorConfig&) {
  if (labels.empty()) throw ConfigError("train: need at least one training image");
  num_classes_ = labels.front().num_classes();
}

ProbabilityMap UniformPredictor::predict_proba(const MultiBandRaster& image) {
  if (num_classes_ == 0) throw ConfigError("predict_proba called before fit");
  ProbabilityMap p(num_classes_, image.width(), image.height());
  std::fill(p.probs.begin(), p.probs.end(), 1.0f / static_cast<float>(num_classes_));
  return p;
}

void remote_train(SidecarClient& client, std::span<const MultiBandRaster> images,
                  std::span<const LabelRaster> labels, const nlohmann::json& config) {
  client.train(images, labels, config);
}

ProbabilityMap remote_predict_proba(SidecarClient& client, const MultiBandRaster& image) {
  return client.predict(image);
}

void RemotePredictor::fit(std::span<const MultiBandRaster> images,
                          std::span<const LabelRaster> labels, const PredictorConfig& cfg) {
  if (labels.empty()) throw ConfigError("train: need at least one training image");
  client_.train(images, labels,
                {{"num_classes", labels.front().num_classes()}, {"predictor", cfg}});
}

ProbabilityMap RemotePredictor::predict_proba(const MultiBandRaster& image) {
  return client_.predict(image);
}

PredictorFactory sidecar_predictor_factory(SidecarOptions options) {
  return [options] { return std::make_unique<RemotePredictor>(options); };
}

}  // namespace alref
