#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>

#include "alref/error.hpp"
#include "alref/protocol.hpp"

namespace alref {

namespace {

constexpr std::chrono::milliseconds kShutdownGrace{2000};
constexpr double kRenormalizeThreshold = 1e-6;

}  // namespace

SidecarClient::SidecarClient(SidecarOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw ConfigError("--sidecar-cmd must not be empty");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw TransportError(std::string("socketpair: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw TransportError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Child: the socket end becomes stdin and stdout. dup2 clears CLOEXEC.
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", options_.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  fd_ = fds[0];

  const auto resp = request({{"op", "hello"}, {"version", kProtocolVersion}});
  server_version_ = resp.value("version", 0);
  if (server_version_ != kProtocolVersion) {
    fail("server speaks protocol version " + std::to_string(server_version_) + ", expected " +
         std::to_string(kProtocolVersion));
  }
}

SidecarClient::~SidecarClient() {
  if (pid_ <= 0) return;
  try {
    options_.timeout = kShutdownGrace;
    shutdown();
  } catch (...) {
  }
  kill_child();
}

void SidecarClient::shutdown() {
  if (pid_ <= 0) return;
  request({{"op", "shutdown"}});
  ::close(fd_);
  fd_ = -1;
  const auto deadline = std::chrono::steady_clock::now() + kShutdownGrace;
  while (std::chrono::steady_clock::now() < deadline) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  kill_child();
}

void SidecarClient::kill_child() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

void SidecarClient::fail(const std::string& message) {
  kill_child();
  throw ProtocolError("sidecar: " + message);
}

void SidecarClient::send_line(const std::string& line) {
  std::size_t sent = 0;
  while (sent < line.size()) {
    const auto n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string err = std::strerror(errno);
      kill_child();
      throw TransportError("sidecar: write failed: " + err);
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string SidecarClient::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  char chunk[65536];
  while (true) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill_child();
      throw TransportError("sidecar: timed out waiting for a response");
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw TransportError("sidecar: poll failed");
    }
    if (ready == 0) continue;
    const auto n = ::read(fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw TransportError("sidecar: read failed");
    }
    if (n == 0) {
      kill_child();
      throw TransportError("sidecar: process closed its output");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

nlohmann::json SidecarClient::request(nlohmann::json req) {
  if (pid_ <= 0) throw TransportError("sidecar: process is not running");
  const auto id = next_id_++;
  req["id"] = id;
  send_line(req.dump() + "\n");
  const auto line = read_line();
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    fail("malformed JSON response");
  }
  if (!resp.is_object()) fail("response is not a JSON object");
  const auto id_it = resp.find("id");
  if (id_it == resp.end() || !id_it->is_number_integer() || id_it->get<std::int64_t>() != id) {
    fail("response id does not match request id " + std::to_string(id));
  }
  const auto op = resp.value("op", std::string{});
  if (op == "error") {
    throw ProtocolError("sidecar error: " + resp.value("message", std::string("(no message)")));
  }
  if (op != "ok") fail("unexpected response op '" + op + "'");
  return resp;
}

void SidecarClient::train(std::span<const MultiBandRaster> images,
                          std::span<const LabelRaster> labels, const nlohmann::json& config) {
  if (images.size() != labels.size() || images.empty()) {
    throw DimensionError("remote_train: need matching, non-empty image and label lists");
  }
  nlohmann::json req{{"op", "train"}, {"config", config}};
  auto& imgs = req["images"] = nlohmann::json::array();
  auto& labs = req["labels"] = nlohmann::json::array();
  for (const auto& img : images) imgs.push_back(encode_tensor(to_tensor(img)));
  for (const auto& l : labels) labs.push_back(encode_tensor(to_tensor(l)));
  request(std::move(req));
  num_classes_ = config.value("num_classes", labels.front().num_classes());
}

ProbabilityMap SidecarClient::predict(const MultiBandRaster& image) {
  const auto resp = request({{"op", "predict"}, {"image", encode_tensor(to_tensor(image))}});
  ProbabilityMap p;
  try {
    p = probabilities_from_tensor(decode_tensor(resp.at("probs")));
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("predict response: ") + e.what());
  } catch (const ProtocolError& e) {
    fail(e.what());
  }
  if (p.width != image.width() || p.height != image.height() ||
      (num_classes_ > 0 && p.num_classes != num_classes_)) {
    fail("predict response shape [" + std::to_string(p.num_classes) + ", " +
         std::to_string(p.width) + ", " + std::to_string(p.height) + "] does not match [" +
         std::to_string(num_classes_) + ", " + std::to_string(image.width()) + ", " +
         std::to_string(image.height()) + "]");
  }
  const std::size_t n = p.pixel_count();
  for (std::size_t px = 0; px < n; ++px) {
    double sum = 0.0;
    for (int k = 0; k < p.num_classes; ++k) {
      const float v = p.probs[static_cast<std::size_t>(k) * n + px];
      if (!(v >= 0.0f)) fail("negative or NaN probability");
      sum += v;
    }
    const double off = std::abs(sum - 1.0);
    if (off > options_.simplex_tolerance) {
      fail("pixel " + std::to_string(px) + " probabilities sum to " + std::to_string(sum));
    }
    if (off > kRenormalizeThreshold) {
      for (int k = 0; k < p.num_classes; ++k) {
        auto& v = p.probs[static_cast<std::size_t>(k) * n + px];
        v = static_cast<float>(v / sum);
      }
    }
  }
  return p;
}

}  // namespace alref
