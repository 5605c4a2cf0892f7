// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// if any criterion fails. Tolerances are fixed here and never adjusted.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "alref/coarse.hpp"
#include "alref/loop.hpp"
#include "alref/predictor.hpp"
#include "alref/report.hpp"
#include "alref/rng.hpp"
#include "alref/strategies.hpp"
#include "alref/synthdata.hpp"

using namespace alref;

namespace {

// Corpus used for the desk-scale experiments.
constexpr int kPoolImages = 6;
constexpr int kPoolSize = 256;
constexpr double kNoiseSigma = 0.10;
constexpr double kSmallObjectRate = 0.03;
constexpr int kSeeds = 5;
constexpr int kOrderingRepeats = 1;

constexpr double kUsTolerance = 1e-9;
constexpr double kEntropyTolerance = 1e-12;
constexpr double kGradientTolerance = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kCsSlack = 0.005;
constexpr double kLoopRuntimeLimitSeconds = 600.0;
constexpr double kSelectionTimeLimitSeconds = 1.0;

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Pool desk_pool(std::uint64_t seed) {
  SceneSpec spec;
  spec.width = spec.height = kPoolSize;
  spec.noise_sigma = kNoiseSigma;
  spec.small_object_rate = kSmallObjectRate;
  Pool pool;
  for (auto& s : generate_pool(seed, kPoolImages, spec)) {
    pool.images.push_back(std::move(s.image));
    pool.fine.push_back(std::move(s.labels));
  }
  return pool;
}

AcquisitionMask random_mask(Rng& rng, int w, int h) {
  const double p = rng.uniform01();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h);
  for (auto& b : bits) b = rng.uniform01() < p ? 0 : 1;
  return AcquisitionMask(w, h, std::move(bits));
}

// ------------------------------------------------------------------------

void selection_oracle() {
  const int N = 10, K = 3, trials = 200;
  Rng rng(101);
  int mismatches = 0;
  const auto t0 = Clock::now();
  for (int t = 0; t < trials; ++t) {
    const int side = rng.uniform_int(2, 8);
    std::vector<double> u;
    for (int n = 0; n < N; ++n) u.push_back(utility_cs(random_mask(rng, side, side)));
    const auto sel = select_top_k(u, K);
    double got = 0;
    for (auto i : sel) got += u[i];
    double best = -1;
    std::vector<std::size_t> best_set;
    int best_count = 0;
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b)
        for (int c = b + 1; c < N; ++c) {
          const double s = u[a] + u[b] + u[c];
          if (s > best) {
            best = s;
            best_set = {static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                        static_cast<std::size_t>(c)};
            best_count = 1;
          } else if (s == best) {
            ++best_count;
          }
        }
    const bool ok = got == best && sel.size() == 3 && (best_count > 1 || sel == best_set);
    mismatches += !ok;
  }
  const double secs = seconds_since(t0);
  report(mismatches == 0 && secs < kSelectionTimeLimitSeconds, "selection-oracle",
         fmt("%d/%d exhaustive matches (N=%d, K=%d) in %.3f s", trials - mismatches, trials, N, K,
             secs));
}

void masked_entropy_utility() {
  Rng rng(202);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto mask = random_mask(rng, 64, 64);
    EntropyMap h{64, 64, std::vector<double>(64 * 64)};
    for (auto& v : h.values) v = std::log(4.0) * rng.uniform01();
    double naive = 0;
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) naive += mask(i, j) * h(i, j);
    const double got = utility_us(mask, h);
    const double rel = naive == 0 ? std::abs(got) : std::abs(got - naive) / std::abs(naive);
    worst = std::max(worst, rel);
  }
  report(worst <= kUsTolerance, "masked-entropy-utility",
         fmt("max relative error %.3g over 1000 random 64x64 trials", worst));
}

LabelRaster brute_enlarge(const LabelRaster& in, int c, int fw, int fh) {
  const int ax = (fw - 1) / 2, ay = (fh - 1) / 2;
  LabelRaster out = in;
  for (int j = 0; j < in.height(); ++j)
    for (int i = 0; i < in.width(); ++i)
      for (int v = std::max(0, j - ay); v <= std::min(in.height() - 1, j + fh - 1 - ay); ++v)
        for (int u = std::max(0, i - ax); u <= std::min(in.width() - 1, i + fw - 1 - ax); ++u)
          if (in(u, v) == c) out.set(i, j, c);
  return out;
}

void coarse_oracle() {
  Rng rng(303);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const int w = rng.uniform_int(1, 16), h = rng.uniform_int(1, 16);
    LabelRaster l(w, h);
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) l.set(i, j, static_cast<int>(rng.below(4)));
    CoarseSimConfig cfg;
    cfg.seed = rng.next();
    const auto r = simulate_coarse(l, cfg);
    auto replay = l;
    for (const auto& s : r.steps) replay = brute_enlarge(replay, s.cls, s.fw, s.fh);
    mismatches += !(replay == r.labels);
  }
  report(mismatches == 0, "coarse-simulation-oracle",
         fmt("%d/100 random label maps reproduced by brute-force replay", 100 - mismatches));
}

void entropy_checks() {
  ProbabilityMap p(4, 2, 1);
  p.at(1, 0, 0) = 1.0f;
  for (int k = 0; k < 4; ++k) p.at(k, 1, 0) = 0.25f;
  const auto h = entropy_map(p);
  const double onehot = h(0, 0);
  const double uniform_err = std::abs(h(1, 0) - std::log(4.0));

  Rng rng(404);
  double max_h = 0;
  for (int t = 0; t < 200; ++t) {
    ProbabilityMap q(4, 16, 16);
    for (std::size_t px = 0; px < q.pixel_count(); ++px) {
      std::vector<double> raw(4);
      double s = 0;
      for (auto& r : raw) s += r = rng.uniform01() < 0.25 ? 0.0 : rng.uniform01();
      if (s == 0) raw[0] = s = 1;
      for (int k = 0; k < 4; ++k) q.probs[k * q.pixel_count() + px] = static_cast<float>(raw[k] / s);
    }
    for (double v : entropy_map(q).values) max_h = std::max(max_h, v);
  }
  const bool ok = onehot == 0.0 && uniform_err <= kEntropyTolerance &&
                  max_h <= std::log(4.0) + kEntropyTolerance;
  report(ok, "entropy-checks",
         fmt("one-hot %.3g, |uniform - ln 4| %.3g, max over random maps %.15f (ln 4 = %.15f)",
             onehot, uniform_err, max_h, std::log(4.0)));
}

std::vector<double> softmax_d(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0;
  for (std::size_t k = 0; k < z.size(); ++k) s += p[k] = std::exp(z[k] - m);
  for (auto& v : p) v /= s;
  return p;
}

void gradient_check() {
  Rng rng(505);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    const int K = rng.uniform_int(2, 5), W = rng.uniform_int(1, 4), H = rng.uniform_int(1, 4);
    const std::size_t n = static_cast<std::size_t>(W) * H;
    LabelRaster y(W, H, K);
    for (int j = 0; j < H; ++j)
      for (int i = 0; i < W; ++i) y.set(i, j, static_cast<int>(rng.below(K)));
    std::vector<double> w(static_cast<std::size_t>(K));
    for (auto& v : w) v = 0.5 + rng.uniform01();
    std::vector<double> z(K * n);
    for (auto& v : z) v = 4.0 * rng.uniform01() - 2.0;

    auto loss = [&](const std::vector<double>& logits) {
      double l = 0;
      for (std::size_t px = 0; px < n; ++px) {
        std::vector<double> zz(K);
        for (int k = 0; k < K; ++k) zz[k] = logits[k * n + px];
        const int c = y.data()[px];
        l -= w[c] * std::log(softmax_d(zz)[c]);
      }
      return l / static_cast<double>(n);
    };
    ProbabilityMap p(K, W, H);
    for (std::size_t px = 0; px < n; ++px) {
      std::vector<double> zz(K);
      for (int k = 0; k < K; ++k) zz[k] = z[k * n + px];
      const auto s = softmax_d(zz);
      for (int k = 0; k < K; ++k) p.probs[k * n + px] = static_cast<float>(s[k]);
    }
    const auto analytic = weighted_cross_entropy(p, y, w);
    for (std::size_t q = 0; q < z.size(); ++q) {
      auto up = z, down = z;
      up[q] += kFiniteDifferenceStep;
      down[q] -= kFiniteDifferenceStep;
      const double fd = (loss(up) - loss(down)) / (2 * kFiniteDifferenceStep);
      const double a = analytic.grad_logits[q];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-12}));
    }
  }
  report(worst < kGradientTolerance, "gradient-check",
         fmt("max relative error %.3g over 20 instances (step %.0e)", worst, kFiniteDifferenceStep));
}

// ------------------------------------------------------------------------

ExperimentConfig desk_config(StrategyKind s, std::uint64_t seed, int repeats) {
  auto cfg = ExperimentConfig::desk();
  cfg.strategy = s;
  cfg.master_seed = seed;
  cfg.repeats = repeats;
  return cfg;
}

void loop_invariants(const Pool& pool) {
  const auto cfg = desk_config(StrategyKind::kUS, 1, 5);
  const auto t0 = Clock::now();
  const auto first = run_experiment(cfg, pool);
  const double secs = seconds_since(t0);
  const auto replay = run_experiment(cfg, pool);

  const std::size_t expected = 5u * kPoolImages * 16u;
  const std::size_t cap = static_cast<std::size_t>(cfg.k_select) * cfg.candidate_size * cfg.candidate_size;
  bool monotone = true, capped = true;
  for (std::size_t k = 0; k < first.size(); ++k) {
    if (first[k].cycle > 0 && first[k].acquisition_rate < first[k - 1].acquisition_rate) monotone = false;
    if (first[k].newly_refined > cap) capped = false;
  }
  bool same = first.size() == replay.size();
  for (std::size_t k = 0; same && k < first.size(); ++k) same = first[k].same_outcome(replay[k]);
  const bool ok = first.size() == expected && monotone && capped && same &&
                  secs < kLoopRuntimeLimitSeconds;
  report(ok, "loop-invariants",
         fmt("%zu records (expect %zu), non-decreasing %s, newly <= %zu %s, replay identical %s, "
             "%.1f s",
             first.size(), expected, monotone ? "yes" : "no", cap, capped ? "yes" : "no",
             same ? "yes" : "no", secs));
}

struct SeedOutcome {
  double legend[3] = {0, 0, 0};
  double final_acq[3] = {0, 0, 0};
  bool acquisition_svg_ok = false;
};

std::vector<SeedOutcome> run_ordering() {
  std::vector<SeedOutcome> out;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto pool = desk_pool(static_cast<std::uint64_t>(1000 + s));
    std::vector<CycleRecord> all;
    for (auto st : kAllStrategies) {
      const auto recs = run_experiment(desk_config(st, static_cast<std::uint64_t>(s), kOrderingRepeats), pool);
      all.insert(all.end(), recs.begin(), recs.end());
    }
    SeedOutcome o;
    for (const auto& row : summarize(all)) {
      o.legend[static_cast<int>(row.strategy)] = row.legend_mean_accuracy;
      o.final_acq[static_cast<int>(row.strategy)] = row.final_acquisition_rate;
    }
    const auto acq = aggregate(all, Metric::kAcquisitionRate);
    const auto svg = render_svg(acq, "acquisition rate");
    std::size_t curves = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++curves;
    o.acquisition_svg_ok = acq.size() == 3 && curves == 3;
    std::printf("  seed %d: legend mean RS %.4f CS %.4f US %.4f; final acquisition RS %.4f CS %.4f US %.4f\n",
                s, o.legend[0], o.legend[1], o.legend[2], o.final_acq[0], o.final_acq[1],
                o.final_acq[2]);
    std::fflush(stdout);
    out.push_back(o);
  }
  return out;
}

void strategy_ordering(const std::vector<SeedOutcome>& seeds) {
  double rs = 0, cs = 0, us = 0;
  int wins = 0;
  for (const auto& o : seeds) {
    rs += o.legend[0];
    cs += o.legend[1];
    us += o.legend[2];
    wins += o.legend[2] > o.legend[0];
  }
  const double n = static_cast<double>(seeds.size());
  rs /= n;
  cs /= n;
  us /= n;
  const bool ok = us >= rs && cs >= rs - kCsSlack && wins >= 4;
  report(ok, "strategy-ordering",
         fmt("mean legend accuracy RS %.4f CS %.4f US %.4f over %d seeds; US > RS in %d/%d", rs, cs,
             us, static_cast<int>(seeds.size()), wins, static_cast<int>(seeds.size())));
}

void acquisition_curves(const std::vector<SeedOutcome>& seeds) {
  int fewer = 0;
  bool curves = true;
  for (const auto& o : seeds) {
    fewer += o.final_acq[2] <= o.final_acq[1];
    curves = curves && o.acquisition_svg_ok;
  }
  report(curves && fewer >= 4, "acquisition-curves",
         fmt("three curves per plot %s; US final acquisition <= CS in %d/%d seeds",
             curves ? "yes" : "no", fewer, static_cast<int>(seeds.size())));
}

void convergence(const Pool& pool) {
  auto cfg = desk_config(StrategyKind::kCS, 7, 1);
  cfg.candidate_size = kPoolSize;
  cfg.n_candidates = 32;
  cfg.k_select = kPoolImages - 1;
  cfg.cycles = 3;
  bool all_fine = true, improved = true, full = true;
  double worst_noise = 0;
  for (int fold = 0; fold < kPoolImages; ++fold) {
    const auto out = run_fold_detailed(cfg, pool, 0, fold);
    std::size_t t = 0;
    for (int g = 0; g < kPoolImages; ++g) {
      if (g == fold) continue;
      const double nr = noise_rate(out.final_labels[t++], pool.fine[static_cast<std::size_t>(g)]);
      worst_noise = std::max(worst_noise, nr);
      all_fine = all_fine && nr == 0.0;
    }
    full = full && out.records.back().acquisition_rate == 1.0;
    improved = improved && out.records.back().accuracy >= out.records.front().accuracy;
  }
  report(all_fine && improved && full, "convergence",
         fmt("all pixels refined %s, max final noise rate %.3g, final >= cycle-0 accuracy on all "
             "folds %s",
             full ? "yes" : "no", worst_noise, improved ? "yes" : "no"));
}

}  // namespace

int main() {
  selection_oracle();
  masked_entropy_utility();
  coarse_oracle();
  entropy_checks();
  gradient_check();
  const auto pool = desk_pool(1001);
  loop_invariants(pool);
  convergence(pool);
  const auto seeds = run_ordering();
  strategy_ordering(seeds);
  acquisition_curves(seeds);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
