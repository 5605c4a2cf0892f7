#pragma once

// Predictor protocol v1: one JSON object per line over a child process's
// stdin/stdout. Requests carry "op" in {hello, train, predict, shutdown} and an
// integer "id"; every request gets exactly one response with the same id and
// "op" "ok" or "error" (with "message").
//
//   hello    -> ok {version: 1}
//   train    {images: [T], labels: [T], config: {num_classes, predictor}} -> ok
//   predict  {image: T} -> ok {probs: T}
//   shutdown -> ok, then the server exits
//
// A tensor T is {shape: [C, W, H], dtype: "f32" | "u8", data: base64} with
// band-sequential, row-major (x fastest) little-endian payload, the same byte
// layout as a BRAS body.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alref/loop.hpp"
#include "alref/predictor.hpp"
#include "alref/raster.hpp"

namespace alref {

inline constexpr int kProtocolVersion = 1;

enum class DType { kF32, kU8 };

struct Tensor {
  std::vector<std::int64_t> shape;
  DType dtype = DType::kF32;
  std::vector<std::uint8_t> data;  // little-endian elements

  std::size_t element_count() const;
  std::size_t element_size() const { return dtype == DType::kF32 ? 4 : 1; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

nlohmann::json encode_tensor(const Tensor& t);
/// Throws ProtocolError on unknown dtype, bad base64 or a payload length that
/// does not match shape x dtype size.
Tensor decode_tensor(const nlohmann::json& j);

Tensor to_tensor(const MultiBandRaster& image);
Tensor to_tensor(const LabelRaster& labels);
Tensor to_tensor(const ProbabilityMap& probs);
MultiBandRaster image_from_tensor(const Tensor& t);
LabelRaster labels_from_tensor(const Tensor& t, int num_classes);
ProbabilityMap probabilities_from_tensor(const Tensor& t);

/// Server side: answers one request using backend. Sets shutdown on "shutdown".
/// Backend exceptions become "error" responses; nothing escapes.
nlohmann::json handle_request(const nlohmann::json& request, Predictor& backend, bool& shutdown);

/// Reads requests line by line until shutdown or EOF. Malformed lines get an
/// "error" response with id -1.
void serve(std::istream& in, std::ostream& out, Predictor& backend);

/// Reference backend that always predicts uniform probabilities. Errors on
/// predict before train, like a real server.
class UniformPredictor final : public Predictor {
 public:
  void fit(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
           const PredictorConfig& cfg) override;
  ProbabilityMap predict_proba(const MultiBandRaster& image) override;

 private:
  int num_classes_ = 0;
};

struct SidecarOptions {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds timeout{600'000};
  double simplex_tolerance = 1e-4;
};

/// Owns the sidecar process. hello is exchanged on construction; shutdown is
/// sent on destruction. Any protocol violation kills the child and throws
/// ProtocolError; the client is unusable afterwards.
class SidecarClient {
 public:
  explicit SidecarClient(SidecarOptions options);
  ~SidecarClient();
  SidecarClient(const SidecarClient&) = delete;
  SidecarClient& operator=(const SidecarClient&) = delete;

  int server_version() const { return server_version_; }
  bool alive() const { return pid_ > 0; }

  void train(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
             const nlohmann::json& config);
  /// Validates shape (K, W, H) against the trained class count and the simplex
  /// constraint; pixels off the simplex by more than 1e-6 (and within
  /// tolerance) are renormalized.
  ProbabilityMap predict(const MultiBandRaster& image);
  void shutdown();

  /// Sends one raw request and returns the validated "ok" response.
  nlohmann::json request(nlohmann::json req);

 private:
  void send_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void fail(const std::string& message);
  void kill_child();

  SidecarOptions options_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 1;
  int server_version_ = 0;
  int num_classes_ = 0;
};

void remote_train(SidecarClient& client, std::span<const MultiBandRaster> images,
                  std::span<const LabelRaster> labels, const nlohmann::json& config);
ProbabilityMap remote_predict_proba(SidecarClient& client, const MultiBandRaster& image);

/// Predictor backed by a sidecar process, for use in the active-learning loop.
class RemotePredictor final : public Predictor {
 public:
  explicit RemotePredictor(SidecarOptions options) : client_(std::move(options)) {}
  void fit(std::span<const MultiBandRaster> images, std::span<const LabelRaster> labels,
           const PredictorConfig& cfg) override;
  ProbabilityMap predict_proba(const MultiBandRaster& image) override;

 private:
  SidecarClient client_;
};

/// Each call spawns a fresh sidecar (one per worker).
PredictorFactory sidecar_predictor_factory(SidecarOptions options);

}  // namespace alref
