#include <doctest.h>

#include <algorithm>
#include <set>

#include "alref/coarse.hpp"
#include "alref/error.hpp"
#include "alref/rng.hpp"
#include "alref/synthdata.hpp"

using namespace alref;

namespace {

// Literal reading of the dilation rule, one output pixel at a time.
LabelRaster brute_enlarge(const LabelRaster& in, int c, int fw, int fh) {
  const int ax = (fw - 1) / 2;
  const int ay = (fh - 1) / 2;
  LabelRaster out = in;
  for (int j = 0; j < in.height(); ++j)
    for (int i = 0; i < in.width(); ++i) {
      bool hit = false;
      for (int v = j - ay; v <= j + fh - 1 - ay && !hit; ++v)
        for (int u = i - ax; u <= i + fw - 1 - ax && !hit; ++u)
          if (u >= 0 && v >= 0 && u < in.width() && v < in.height() && in(u, v) == c) hit = true;
      if (hit) out.set(i, j, c);
    }
  return out;
}

LabelRaster random_labels(Rng& rng, int w, int h, int k, double sparsity) {
  LabelRaster l(w, h, k);
  const int bg = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      l.set(i, j, rng.uniform01() < sparsity ? static_cast<int>(rng.below(k)) : bg);
  return l;
}

}  // namespace

TEST_CASE("enlarge_class: 3x3 filter grows a centre pixel to the centred block") {
  LabelRaster l(5, 5);
  l.set(2, 2, 1);
  const auto out = enlarge_class(l, 1, 3, 3);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) {
      const bool inside = i >= 1 && i <= 3 && j >= 1 && j <= 3;
      CHECK(out(i, j) == (inside ? 1 : 0));
    }
}

TEST_CASE("enlarge_class: 2x2 filter anchored at the origin") {
  LabelRaster l(5, 5);
  l.set(2, 2, 1);
  const auto out = enlarge_class(l, 1, 2, 2);
  std::set<std::pair<int, int>> ones;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i)
      if (out(i, j) == 1) ones.insert({i, j});
  CHECK(ones == std::set<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  CHECK(out == brute_enlarge(l, 1, 2, 2));
}

TEST_CASE("enlarge_class: absent class leaves the raster unchanged") {
  LabelRaster l(6, 4, 4, std::uint8_t{2});
  l.set(0, 0, 1);
  CHECK(enlarge_class(l, 3, 5, 7) == l);
}

TEST_CASE("enlarge_class: 1x1 filter is the identity") {
  Rng rng(1);
  const auto l = random_labels(rng, 9, 7, 4, 0.5);
  for (int c = 0; c < 4; ++c) CHECK(enlarge_class(l, c, 1, 1) == l);
}

TEST_CASE("enlarge_class matches the brute-force rule on random maps") {
  Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    const int w = rng.uniform_int(1, 20);
    const int h = rng.uniform_int(1, 20);
    const auto l = random_labels(rng, w, h, 4, rng.uniform01());
    const int c = rng.uniform_int(0, 3);
    const int fw = rng.uniform_int(1, 24);
    const int fh = rng.uniform_int(1, 24);
    REQUIRE(enlarge_class(l, c, fw, fh) == brute_enlarge(l, c, fw, fh));
  }
}

TEST_CASE("enlarge_class argument checks") {
  LabelRaster l(4, 4);
  CHECK_THROWS_AS(enlarge_class(l, 4, 2, 2), DomainError);
  CHECK_THROWS_AS(enlarge_class(l, -1, 2, 2), DomainError);
  CHECK_THROWS_AS(enlarge_class(l, 0, 0, 2), DomainError);
}

TEST_CASE("simulate_coarse: single-class raster is unchanged for every seed") {
  LabelRaster l(16, 16, 4, std::uint8_t{3});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CoarseSimConfig cfg;
    cfg.seed = seed;
    CHECK(simulate_coarse(l, cfg).labels == l);
  }
}

TEST_CASE("simulate_coarse: deterministic, one step per class per round") {
  Rng rng(5);
  const auto l = random_labels(rng, 32, 32, 4, 0.3);
  CoarseSimConfig cfg;
  cfg.seed = 9;
  const auto a = simulate_coarse(l, cfg);
  const auto b = simulate_coarse(l, cfg);
  CHECK(a.labels == b.labels);
  CHECK(a.steps == b.steps);
  REQUIRE(a.steps.size() == 4);
  std::set<int> classes;
  for (const auto& s : a.steps) {
    classes.insert(s.cls);
    CHECK(s.fw >= 2);
    CHECK(s.fw <= 32);
    CHECK(s.fh >= 2);
    CHECK(s.fh <= 32);
  }
  CHECK(classes.size() == 4);

  cfg.rounds = 3;
  CHECK(simulate_coarse(l, cfg).steps.size() == 12);
}

TEST_CASE("simulate_coarse: replaying the log with the brute-force rule reproduces it") {
  Rng rng(123);
  for (int t = 0; t < 100; ++t) {
    const int w = rng.uniform_int(1, 16);
    const int h = rng.uniform_int(1, 16);
    const auto l = random_labels(rng, w, h, 4, rng.uniform01());
    CoarseSimConfig cfg;
    cfg.seed = rng.next();
    cfg.max_filter = rng.uniform_int(2, 12);
    const auto result = simulate_coarse(l, cfg);
    auto replay = l;
    for (const auto& s : result.steps) replay = brute_enlarge(replay, s.cls, s.fw, s.fh);
    REQUIRE(replay == result.labels);
  }
}

TEST_CASE("simulate_coarse: fixed filters and fixed class order") {
  Rng rng(8);
  const auto l = random_labels(rng, 20, 20, 4, 0.4);
  CoarseSimConfig cfg;
  cfg.min_filter = cfg.max_filter = 2;
  cfg.class_order_policy = ClassOrderPolicy::kFixedList;
  cfg.fixed_order = {3, 1, 0, 2};
  const auto r = simulate_coarse(l, cfg);
  REQUIRE(r.steps.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(r.steps[k].cls == cfg.fixed_order[k]);
    CHECK(r.steps[k].fw == 2);
    CHECK(r.steps[k].fh == 2);
  }
}

TEST_CASE("CoarseSimConfig validation") {
  LabelRaster l(4, 4);
  CoarseSimConfig cfg;
  cfg.min_filter = 0;
  CHECK_THROWS_AS(simulate_coarse(l, cfg), ConfigError);
  cfg = {};
  cfg.min_filter = 5;
  cfg.max_filter = 4;
  CHECK_THROWS_AS(simulate_coarse(l, cfg), ConfigError);
  cfg = {};
  cfg.rounds = 0;
  CHECK_THROWS_AS(simulate_coarse(l, cfg), ConfigError);
  cfg = {};
  cfg.class_order_policy = ClassOrderPolicy::kFixedList;
  cfg.fixed_order = {0, 7};
  CHECK_THROWS_AS(simulate_coarse(l, cfg), ConfigError);
}

TEST_CASE("noise_rate") {
  LabelRaster a(4, 4);
  CHECK(noise_rate(a, a) == 0.0);
  LabelRaster b(4, 4, 4, std::uint8_t{1});
  CHECK(noise_rate(a, b) == 1.0);
  auto c = a;
  c.set(3, 1, 2);
  CHECK(noise_rate(c, a) == 0.0625);
  CHECK_THROWS_AS(noise_rate(a, LabelRaster(4, 3)), DimensionError);
}

TEST_CASE("coarse labels differ from fine labels on default synthetic scenes") {
  double lo = 1.0;
  double hi = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SceneSpec spec;
    spec.seed = s;
    const auto fine = generate_scene(spec).labels;
    CoarseSimConfig cfg;
    cfg.seed = derive_seed(s, {1});
    const double r = noise_rate(simulate_coarse(fine, cfg).labels, fine);
    CHECK(r > 0.0);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  MESSAGE("noise_rate range over 20 seeds: [" << lo << ", " << hi << "]");
}
