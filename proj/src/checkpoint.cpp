#include <bit>
#include <string>

#include <json.hpp>

#include "alref/base64.hpp"
#include "alref/error.hpp"
#include "alref/predictor.hpp"

namespace alref {

namespace {

std::string encode_f32(const std::vector<float>& values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 4);
  for (float v : values) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_f32(const std::string& text, std::size_t expected, const char* field) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expected * 4) {
    throw FormatError(std::string("checkpoint: field '") + field + "' has wrong length");
  }
  std::vector<float> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

}  // namespace

std::string save_checkpoint(const BaselineModel& model) {
  nlohmann::json j;
  j["format"] = "alref-baseline";
  j["C"] = model.bands;
  j["K_cls"] = model.num_classes;
  j["D"] = model.dims;
  j["window"] = model.window;
  j["step"] = model.step;
  j["weights"] = encode_f32(model.weights);
  j["adam_m"] = encode_f32(model.adam_m);
  j["adam_v"] = encode_f32(model.adam_v);
  return j.dump();
}

BaselineModel load_checkpoint(std::string_view json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (j.at("format").get<std::string>() != "alref-baseline") {
      throw FormatError("checkpoint: unknown format tag");
    }
    BaselineModel m = BaselineModel::zeros(j.at("C").get<int>(), j.at("K_cls").get<int>(),
                                           j.at("window").get<int>());
    if (j.at("D").get<int>() != m.dims) throw FormatError("checkpoint: D does not equal 3*C");
    m.step = j.at("step").get<std::int64_t>();
    const auto n = m.weights.size();
    m.weights = decode_f32(j.at("weights").get<std::string>(), n, "weights");
    m.adam_m = decode_f32(j.at("adam_m").get<std::string>(), n, "adam_m");
    m.adam_v = decode_f32(j.at("adam_v").get<std::string>(), n, "adam_v");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace alref
