#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "alref/base64.hpp"
#include "alref/error.hpp"
#include "alref/loop.hpp"
#include "alref/protocol.hpp"
#include "alref/rng.hpp"
#include "alref/synthdata.hpp"

using namespace alref;
using nlohmann::json;

namespace {

const std::string kServer = ALREF_REF_SERVER_PATH;

SidecarOptions server(const std::string& args, int timeout_ms = 60000) {
  SidecarOptions o;
  o.command = "'" + kServer + "' " + args;
  o.timeout = std::chrono::milliseconds(timeout_ms);
  return o;
}

MultiBandRaster random_image(Rng& rng, int c, int w, int h) {
  std::vector<float> v(static_cast<std::size_t>(c) * w * h);
  for (auto& x : v) x = static_cast<float>(rng.uniform01());
  return MultiBandRaster(c, w, h, std::move(v));
}

LabelRaster random_labels(Rng& rng, int w, int h) {
  LabelRaster l(w, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) l.set(i, j, static_cast<int>(rng.below(4)));
  return l;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::string f32_base64(std::initializer_list<float> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  std::memcpy(bytes.data(), std::data(values), bytes.size());
  return base64_encode(bytes);
}

}  // namespace

TEST_CASE("tensor encode/decode is bit-exact") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    Tensor x;
    x.dtype = t % 2 ? DType::kU8 : DType::kF32;
    x.shape = {rng.uniform_int(1, 4), rng.uniform_int(1, 5), rng.uniform_int(1, 5)};
    x.data.resize(x.element_count() * x.element_size());
    for (auto& b : x.data) b = static_cast<std::uint8_t>(rng.below(256));
    CHECK(decode_tensor(json::parse(encode_tensor(x).dump())) == x);
  }
  const auto img = random_image(rng, 5, 7, 3);
  CHECK(image_from_tensor(to_tensor(img)) == img);
  const auto lab = random_labels(rng, 7, 3);
  CHECK(labels_from_tensor(to_tensor(lab), 4) == lab);
  const auto t = to_tensor(img);
  CHECK(t.shape == std::vector<std::int64_t>{5, 7, 3});
}

TEST_CASE("tensor decoding rejects inconsistent payloads") {
  CHECK_THROWS_AS(decode_tensor(json{{"shape", {1, 2, 2}}, {"dtype", "f32"}, {"data", "AAAA"}}),
                  ProtocolError);
  CHECK_THROWS_AS(decode_tensor(json{{"shape", {1, 1, 1}}, {"dtype", "f64"}, {"data", "AAAAAA=="}}),
                  ProtocolError);
  CHECK_THROWS_AS(decode_tensor(json{{"shape", {1, -1, 1}}, {"dtype", "u8"}, {"data", ""}}),
                  ProtocolError);
  CHECK_THROWS_AS(decode_tensor(json{{"shape", {1, 1, 1}}, {"dtype", "u8"}, {"data", "*"}}),
                  ProtocolError);
  CHECK_THROWS_AS(decode_tensor(json{{"dtype", "u8"}, {"data", ""}}), ProtocolError);
  CHECK_THROWS_AS(labels_from_tensor(to_tensor(MultiBandRaster(1, 2, 2)), 4), ProtocolError);
}

TEST_CASE("handle_request in process") {
  UniformPredictor backend;
  bool shutdown = false;
  CHECK(handle_request(json{{"op", "hello"}, {"id", 3}}, backend, shutdown) ==
        json{{"op", "ok"}, {"id", 3}, {"version", 1}});
  const auto err = handle_request(json{{"op", "hello"}}, backend, shutdown);
  CHECK(err["op"] == "error");
  CHECK(err["id"] == -1);
  CHECK(handle_request(json{{"op", "nope"}, {"id", 4}}, backend, shutdown)["op"] == "error");
  CHECK_FALSE(shutdown);
  CHECK(handle_request(json{{"op", "shutdown"}, {"id", 5}}, backend, shutdown)["op"] == "ok");
  CHECK(shutdown);
}

TEST_CASE("serve answers every request with a matching id") {
  BaselinePredictor backend;
  Rng rng(2);
  const auto img = random_image(rng, 5, 16, 16);
  json train{{"op", "train"},
             {"id", 2},
             {"images", {encode_tensor(to_tensor(img))}},
             {"labels", {encode_tensor(to_tensor(random_labels(rng, 16, 16)))}},
             {"config", {{"num_classes", 4}, {"predictor", {{"chip_size", 8}, {"epochs", 2}}}}}};
  std::stringstream in;
  in << json{{"op", "hello"}, {"id", 1}}.dump() << "\n"
     << "garbage\n"
     << train.dump() << "\n"
     << json{{"op", "predict"}, {"id", 3}, {"image", encode_tensor(to_tensor(img))}}.dump() << "\n"
     << json{{"op", "shutdown"}, {"id", 4}}.dump() << "\n"
     << json{{"op", "hello"}, {"id", 5}}.dump() << "\n";
  std::stringstream out;
  serve(in, out, backend);
  std::vector<json> resp;
  for (std::string l; std::getline(out, l);) resp.push_back(json::parse(l));
  REQUIRE(resp.size() == 5);
  CHECK(resp[0]["id"] == 1);
  CHECK(resp[1]["op"] == "error");
  CHECK(resp[1]["id"] == -1);
  CHECK(resp[2] == json{{"op", "ok"}, {"id", 2}});
  const auto p = probabilities_from_tensor(decode_tensor(resp[3]["probs"]));
  CHECK(p.num_classes == 4);
  CHECK(p.width == 16);
  CHECK(p.max_simplex_violation() <= 1e-6);
  CHECK(resp[4]["id"] == 4);
}

TEST_CASE("golden transcript against the reference server") {
  const std::filesystem::path dir = ALREF_GOLDEN_DIR;
  const auto out = std::filesystem::temp_directory_path() / "alref_golden_out.ndjson";
  const auto cmd = "'" + kServer + "' --mode uniform < '" + (dir / "uniform_requests.ndjson").string() +
                   "' > '" + out.string() + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto got = read_lines(out);
  const auto want = read_lines(dir / "uniform_responses.ndjson");
  const auto req = read_lines(dir / "uniform_requests.ndjson");
  REQUIRE(got.size() == want.size());
  REQUIRE(got.size() == req.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    const auto g = json::parse(got[k]);
    const auto w = json::parse(want[k]);
    CHECK(g["id"] == json::parse(req[k])["id"]);
    CHECK(g["op"] == w["op"]);
    if (w["op"] == "ok") {
      CHECK(g == w);
    } else {
      CHECK_FALSE(g["message"].get<std::string>().empty());
    }
  }
  std::filesystem::remove(out);
}

TEST_CASE("client: handshake, train and predict") {
  Rng rng(3);
  const std::vector<MultiBandRaster> imgs = {random_image(rng, 5, 20, 12)};
  const std::vector<LabelRaster> labs = {random_labels(rng, 20, 12)};
  SidecarClient client(server("--mode uniform"));
  CHECK(client.server_version() == 1);
  CHECK(client.alive());
  remote_train(client, imgs, labs, json{{"num_classes", 4}});
  const auto p = remote_predict_proba(client, imgs[0]);
  CHECK(p.num_classes == 4);
  CHECK(p.width == 20);
  CHECK(p.height == 12);
  for (double h : entropy_map(p).values) CHECK(std::abs(h - std::log(4.0)) < 1e-12);
  client.shutdown();
  CHECK_FALSE(client.alive());
}

TEST_CASE("client: server errors are surfaced and the session continues") {
  Rng rng(4);
  const auto img = random_image(rng, 5, 8, 8);
  SidecarClient client(server("--mode uniform"));
  try {
    client.predict(img);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("before fit") != std::string::npos);
  }
  CHECK(client.alive());
  client.train(std::vector<MultiBandRaster>{img}, std::vector<LabelRaster>{random_labels(rng, 8, 8)},
               json{{"num_classes", 4}});
  CHECK(client.predict(img).num_classes == 4);
}

TEST_CASE("client: misbehaving servers raise protocol errors and are killed") {
  Rng rng(5);
  const auto img = random_image(rng, 5, 8, 8);
  const std::vector<MultiBandRaster> imgs = {img};
  const std::vector<LabelRaster> labs = {random_labels(rng, 8, 8)};
  for (const char* fault : {"malformed", "wrong-id", "bad-simplex", "bad-shape"}) {
    CAPTURE(fault);
    SidecarClient client(server(std::string("--mode uniform --fault ") + fault));
    try {
      client.train(imgs, labs, json{{"num_classes", 4}});
      client.predict(img);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError&) {
      CHECK_FALSE(client.alive());
    }
    CHECK_THROWS_AS(client.predict(img), TransportError);
  }
}

TEST_CASE("client: timeouts and dead servers are transport errors") {
  CHECK_THROWS_AS(SidecarClient(SidecarOptions{"sleep 5", std::chrono::milliseconds(200), 1e-4}),
                  TransportError);
  CHECK_THROWS_AS(SidecarClient(SidecarOptions{"true", std::chrono::milliseconds(5000), 1e-4}),
                  TransportError);
  CHECK_THROWS_AS(
      SidecarClient(SidecarOptions{"echo '{\"id\":1,\"op\":\"ok\",\"version\":2}'; sleep 5",
                                   std::chrono::milliseconds(5000), 1e-4}),
      ProtocolError);
}

TEST_CASE("client: small simplex deviations are renormalized, large ones rejected") {
  auto scripted = [](float a, float b) {
    const json probs{{"shape", {2, 1, 1}}, {"dtype", "f32"}, {"data", f32_base64({a, b})}};
    const std::string predict = json{{"op", "ok"}, {"id", 3}, {"probs", probs}}.dump();
    return "read l; echo '{\"id\":1,\"op\":\"ok\",\"version\":1}'; read l; "
           "echo '{\"id\":2,\"op\":\"ok\"}'; read l; echo '" +
           predict + "'; read l; echo '{\"id\":4,\"op\":\"ok\"}'";
  };
  const MultiBandRaster img(1, 1, 1);
  const std::vector<MultiBandRaster> imgs = {img};
  const std::vector<LabelRaster> labs = {LabelRaster(1, 1, 2)};
  {
    SidecarClient client({scripted(0.50005f, 0.5f), std::chrono::milliseconds(5000), 1e-4});
    client.train(imgs, labs, json{{"num_classes", 2}});
    const auto p = client.predict(img);
    CHECK(std::abs(p.probs[0] + p.probs[1] - 1.0) <= 1e-6);
    CHECK(p.probs[0] > p.probs[1]);
  }
  {
    SidecarClient client({scripted(0.6f, 0.5f), std::chrono::milliseconds(5000), 1e-4});
    client.train(imgs, labs, json{{"num_classes", 2}});
    CHECK_THROWS_AS(client.predict(img), ProtocolError);
  }
}

TEST_CASE("the loop gives identical records with the in-process or remote baseline") {
  SceneSpec spec;
  spec.width = spec.height = 32;
  Pool pool;
  for (auto& s : generate_pool(8, 3, spec)) {
    pool.images.push_back(s.image);
    pool.fine.push_back(s.labels);
  }
  auto cfg = ExperimentConfig::desk();
  cfg.repeats = 1;
  cfg.cycles = 3;
  cfg.n_candidates = 8;
  cfg.k_select = 2;
  cfg.candidate_size = 8;
  cfg.predictor.chip_size = 16;
  cfg.predictor.chips_per_epoch = 3;
  cfg.predictor.epochs = 2;
  for (auto s : kAllStrategies) {
    cfg.strategy = s;
    const auto local = run_experiment(cfg, pool);
    const auto remote = run_experiment(cfg, pool, sidecar_predictor_factory(server("--mode baseline")));
    REQUIRE(local.size() == remote.size());
    for (std::size_t k = 0; k < local.size(); ++k) CHECK(local[k].same_outcome(remote[k]));
  }
}
