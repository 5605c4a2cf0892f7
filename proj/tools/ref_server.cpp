// Reference predictor server speaking protocol v1 on stdin/stdout.
//
//   alref-ref-server [--mode baseline|uniform] [--fault none|malformed|wrong-id|bad-simplex|bad-shape]
//
// Fault modes corrupt every predict response (malformed corrupts every
// response after hello) so clients can be tested against misbehaving servers.

#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "alref/protocol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"alref protocol v1 reference server"};
  std::string mode = "baseline";
  std::string fault = "none";
  app.add_option("--mode", mode, "Backend")->check(CLI::IsMember({"baseline", "uniform"}));
  app.add_option("--fault", fault, "Injected fault")
      ->check(CLI::IsMember({"none", "malformed", "wrong-id", "bad-simplex", "bad-shape"}));
  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<alref::Predictor> backend;
  if (mode == "uniform") backend = std::make_unique<alref::UniformPredictor>();
  else backend = std::make_unique<alref::BaselinePredictor>();

  std::ios::sync_with_stdio(false);
  std::string line;
  bool shutdown = false;
  while (!shutdown && std::getline(std::cin, line)) {
    if (line.empty()) continue;
    nlohmann::json resp;
    try {
      resp = alref::handle_request(nlohmann::json::parse(line), *backend, shutdown);
    } catch (const nlohmann::json::parse_error& e) {
      resp = {{"op", "error"}, {"id", -1}, {"message", std::string("malformed JSON: ") + e.what()}};
    }
    const bool is_predict = resp.contains("probs");
    const bool is_hello = resp.contains("version");
    if (fault == "malformed" && !is_hello) {
      std::cout << "{not json\n" << std::flush;
      continue;
    }
    if (is_predict && fault == "wrong-id") resp["id"] = resp["id"].get<long long>() + 1000;
    if (is_predict && fault == "bad-simplex") {
      auto t = alref::decode_tensor(resp["probs"]);
      // Doubling every probability puts each pixel's sum at 2.
      auto p = alref::probabilities_from_tensor(t);
      for (auto& v : p.probs) v *= 2.0f;
      resp["probs"] = alref::encode_tensor(alref::to_tensor(p));
    }
    if (is_predict && fault == "bad-shape") {
      auto p = alref::probabilities_from_tensor(alref::decode_tensor(resp["probs"]));
      alref::ProbabilityMap smaller(p.num_classes, p.width, 1);
      std::fill(smaller.probs.begin(), smaller.probs.end(), 1.0f / p.num_classes);
      resp["probs"] = alref::encode_tensor(alref::to_tensor(smaller));
    }
    std::cout << resp.dump() << '\n' << std::flush;
  }
  return 0;
}
