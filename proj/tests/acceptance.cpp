// Copyright 2026 The DynView Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "dynview/controltext.hpp"
#include "dynview/geometry.hpp"
#include "dynview/losses.hpp"
#include "dynview/phash.hpp"
#include "dynview/pipeline.hpp"
#include "dynview/roiops.hpp"
#include "dynview/selection.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

using namespace dynview;

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

using Clock = std::chrono::steady_clock;

// --- geometry -------------------------------------------------------------

Check geometry() {
  Check c;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(8, 2000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const Box image = image_box(w, h);
    const Box region = normalize_region(fixtures::random_region(w, h, rng), image);
    c.expect(interpolate_box(region, image, 0.0) == region, "t=0 is not the region");
    c.expect(interpolate_box(region, image, 1.0) == image, "t=1 is not the image");

    // random ascending grid of 1..10 coefficients, sometimes including 1
    std::vector<double> grid;
    const int count = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < count; ++i) grid.push_back(unit(rng));
    if (trial % 3 == 0) grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    grid.erase(std::remove(grid.begin(), grid.end(), 0.0), grid.end());

    const ViewSet set = build_candidate_views(region, image, grid, 32);
    c.expect(set.views.front().t == 0.0 && set.views.front().crop == region, "first view is not t=0");
    for (std::size_t i = 0; i < set.views.size(); ++i) {
      const Box& crop = set.views[i].crop;
      c.expect(image.contains(crop), fmt::format("trial {}: view {} leaves the image", trial, i));
      c.expect(crop.contains(region), fmt::format("trial {}: view {} does not contain the region", trial, i));
      if (i > 0) {
        c.expect(crop.contains(set.views[i - 1].crop),
                 fmt::format("trial {}: view {} does not contain view {}", trial, i, i - 1));
      }
    }
  }
  return c;
}

// --- phash ----------------------------------------------------------------

Check phash() {
  Check c;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto img = fixtures::noise_image(32, 32, seed % 2 ? 3 : 1, 9000 + seed);
    const auto luma = to_luma(img);
    std::vector<double> f(luma.data().begin(), luma.data().end());
    const std::uint64_t expected = oracle::hash_bits(oracle::naive_dct(f, 32), 32, phash_params::kTieTolerance);
    c.expect(phash64(img).bits == expected, fmt::format("image {} differs from the naive DCT", seed));
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto img = fixtures::texture_image(40 + seed % 30, 30 + seed % 20, 3, 7000 + seed, 0.0f, 0.9f);
    ImageRaster shifted = img;
    for (auto& v : shifted.data()) v += 0.1f;
    c.expect(hamming(phash64(img), phash64(shifted)) == 0, fmt::format("brightness case {} changed the hash", seed));
  }
  return c;
}

// --- selection ------------------------------------------------------------

// Best (n-1)-subset by total score; ties go to the lexicographically smallest index set.
std::vector<double> exhaustive_topk(const std::vector<double>& scores, const std::vector<double>& ts,
                                    std::size_t picks) {
  std::vector<std::size_t> best_set;
  double best = -1.0;
  const std::size_t m = ts.size();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != picks) continue;
    double total = 0.0;
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) {
        total += scores[i];
        set.push_back(i);
      }
    }
    if (total > best + 1e-9 || (std::abs(total - best) <= 1e-9 && set < best_set)) {
      best = total;
      best_set = set;
    }
  }
  std::vector<double> out{0.0};
  for (auto i : best_set) out.push_back(ts[i]);
  return out;
}

Check selection() {
  Check c;
  const auto grid = default_grid();
  for (int image = 0; image < 200; ++image) {
    std::mt19937_64 rng(300 + image);
    const int w = 64 + static_cast<int>(rng() % 96), h = 64 + static_cast<int>(rng() % 96);
    const Box region = normalize_region(fixtures::random_region(w, h, rng), image_box(w, h));
    const auto img = fixtures::white_region_image(w, h, region, 500 + image);
    for (std::size_t n : {2u, 3u, 4u}) {
      ImagePrior topk{GreedyMode::topk, grid, kDefaultViewSize};
      const auto t = select_image_prior(img, region, n, topk);
      // scores must be recomputable from the hashes
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = static_cast<double>(oracle::count_bits(t.candidate_hashes[0].bits ^
                                                                t.candidate_hashes[i + 1].bits)) / grid[i];
        c.expect(s == t.scores[i], fmt::format("image {}: score {} not recomputable", image, i));
      }
      c.expect(t.chosen_ts == exhaustive_topk(t.scores, grid, n - 1),
               fmt::format("image {} n={}: topk differs from the exhaustive oracle", image, n));

      const auto m = select_image_prior(img, region, n, ImagePrior{GreedyMode::marginal, grid, kDefaultViewSize});
      std::vector<std::uint64_t> raw;
      for (const auto& hsh : m.candidate_hashes) raw.push_back(hsh.bits);
      std::vector<double> trace{0.0};
      for (auto i : oracle::best_greedy_trace(raw, grid, n - 1)) trace.push_back(grid[i]);
      std::sort(trace.begin(), trace.end());
      c.expect(m.chosen_ts == trace, fmt::format("image {} n={}: marginal differs from the greedy-trace oracle", image, n));
      c.expect(m.alternate_ts == t.chosen_ts, fmt::format("image {} n={}: alternate pick not recorded", image, n));
    }
  }

  // t = 0 view present for every policy over randomized runs
  std::mt19937_64 rng(77);
  const std::vector<Task> tasks{Task::attribute_detection, Task::region_recognition, Task::region_caption,
                                Task::dense_caption};
  const auto table = default_task_prior_table();
  for (int run = 0; run < 10000; ++run) {
    const int w = 24 + static_cast<int>(rng() % 40), h = 24 + static_cast<int>(rng() % 40);
    const Box region = normalize_region(fixtures::random_region(w, h, rng), image_box(w, h));
    SelectionResult r;
    std::size_t n = 1;
    switch (run % 3) {
      case 0: {
        n = 1 + rng() % 11;
        r = select_no_prior(n, rng(), grid);
        break;
      }
      case 1: {
        n = 1 + rng() % 3;
        r = select_task_prior(tasks[rng() % 4], n, table);
        break;
      }
      default: {
        n = 1 + rng() % 5;
        const auto img = fixtures::noise_image(w, h, 1, rng());
        r = select_image_prior(img, region, n, ImagePrior{rng() % 2 ? GreedyMode::topk : GreedyMode::marginal, grid, 16});
      }
    }
    c.expect(r.chosen_ts.size() == n && r.chosen_ts.front() == 0.0,
             fmt::format("run {}: t=0 view missing", run));
  }
  return c;
}

// --- task prior -----------------------------------------------------------

Check task_prior() {
  Check c;
  const auto table = default_task_prior_table();
  const auto second = [&](Task t) { return select_task_prior(t, 2, table).chosen_ts.at(1); };
  c.expect(second(Task::attribute_detection) == 0.1, "attribute default is not 0.1");
  const double cap = second(Task::region_caption);
  const double dense = second(Task::dense_caption);
  c.expect(cap == 0.4 || cap == 0.5, "region caption default outside {0.4, 0.5}");
  c.expect(dense == 0.4 || dense == 0.5, "dense caption default outside {0.4, 0.5}");
  return c;
}

// --- roi kernels ----------------------------------------------------------

FeatureGrid random_grid(int h, int w, int ch, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  FeatureGrid g(h, w, ch);
  for (auto& v : g.data()) v = u(rng);
  return g;
}

double tent(const FeatureGrid& g, double x, double y, int ch) {
  return oracle::tent_sample(g.width(), g.height(), x, y, [&](int col, int row) { return g.at(row, col, ch); });
}

Check roi() {
  Check c;
  std::mt19937_64 rng(404);
  double worst_roi = 0.0, worst_off = 0.0, worst_zero = 0.0, worst_lin = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto g = random_grid(4 + static_cast<int>(rng() % 9), 4 + static_cast<int>(rng() % 9),
                               1 + static_cast<int>(rng() % 3), rng);
    std::uniform_real_distribution<double> ux(-1.0, g.width() + 1.0), uy(-1.0, g.height() + 1.0);
    double x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const Box box{x0, y0, x1 + 0.05, y1 + 0.05};
    const int oh = 1 + static_cast<int>(rng() % 5), ow = 1 + static_cast<int>(rng() % 5);
    const int sr = 1 + static_cast<int>(rng() % 3);
    const auto out = roi_align(g, box, oh, ow, sr);
    for (int py = 0; py < oh; ++py) {
      for (int px = 0; px < ow; ++px) {
        for (int ch = 0; ch < g.channels(); ++ch) {
          double acc = 0.0;
          for (int iy = 0; iy < sr; ++iy)
            for (int ix = 0; ix < sr; ++ix)
              acc += tent(g, box.x0 + (px + (ix + 0.5) / sr) * box.width() / ow,
                          box.y0 + (py + (iy + 0.5) / sr) * box.height() / oh, ch);
          worst_roi = std::max(worst_roi, std::abs(out.at(py, px, ch) - acc / (sr * sr)));
        }
      }
    }

    auto off = OffsetMap::zeros(g.height(), g.width());
    std::uniform_real_distribution<float> uo(-1.5f, 1.5f);
    for (auto& v : off.dx) v = uo(rng);
    for (auto& v : off.dy) v = uo(rng);
    const auto res = offset_resample(g, off);
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        const auto cell = static_cast<std::size_t>(y * g.width() + x);
        for (int ch = 0; ch < g.channels(); ++ch) {
          const double ref = tent(g, x + 0.5 + off.dx[cell], y + 0.5 + off.dy[cell], ch);
          worst_off = std::max(worst_off, std::abs(res.at(y, x, ch) - ref));
        }
      }
    }

    const auto same = offset_resample(g, OffsetMap::zeros(g.height(), g.width()));
    for (std::size_t i = 0; i < g.data().size(); ++i) worst_zero = std::max(worst_zero, std::abs(static_cast<double>(same.data()[i]) - g.data()[i]));

    // linearity
    const auto b = random_grid(g.height(), g.width(), g.channels(), rng);
    std::uniform_real_distribution<double> ucoef(-1.0, 1.0);
    const double alpha = ucoef(rng), beta = ucoef(rng);
    FeatureGrid mix(g.height(), g.width(), g.channels());
    for (std::size_t i = 0; i < mix.data().size(); ++i) {
      mix.data()[i] = static_cast<float>(alpha * g.data()[i] + beta * b.data()[i]);
    }
    const auto ra = roi_align(g, box, oh, ow, sr);
    const auto rb = roi_align(b, box, oh, ow, sr);
    const auto rm = roi_align(mix, box, oh, ow, sr);
    for (std::size_t i = 0; i < rm.data().size(); ++i) {
      worst_lin = std::max(worst_lin, std::abs(rm.data()[i] - (alpha * ra.data()[i] + beta * rb.data()[i])));
    }
  }
  const double worst = std::max({worst_roi, worst_off, worst_zero, worst_lin});
  c.expect(worst <= 1e-6, "");
  c.detail = fmt::format("max deviation roi {:.2g}, offsets {:.2g}, zero offsets {:.2g}, linearity {:.2g}",
                         worst_roi, worst_off, worst_zero, worst_lin);
  return c;
}

// --- losses ---------------------------------------------------------------

Check losses_check() {
  Check c;
  using namespace dynview::losses;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> up(0.02, 0.98), us(-1.0, 1.0), ul(-3.0, 3.0);
  double worst_bce = 0.0, worst_grad = 0.0, worst_ce = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 1 + rng() % 16;
    std::vector<double> p(len), y(len);
    for (auto& v : p) v = up(rng);
    for (auto& v : y) v = static_cast<double>(rng() % 2);
    double bce = 0.0;
    for (std::size_t i = 0; i < len; ++i) bce -= y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]);
    bce /= static_cast<double>(len);
    worst_bce = std::max(worst_bce, std::abs(asl_loss(p, y, {0.0, 0.0, 0.0}).loss - bce));

    // keep negatives away from the clip kink
    for (std::size_t i = 0; i < len; ++i)
      if (y[i] == 0.0 && std::abs(p[i] - 0.05) < 0.01) p[i] += 0.02;
    const AslParams params{1.0, 4.0, 0.05};
    const auto asl = asl_loss(p, y, params);
    worst_grad = std::max(worst_grad, oracle::relative_error(asl.grad,
        oracle::finite_difference([&](const std::vector<double>& x) { return asl_loss(x, y, params).loss; }, p)));

    const std::size_t n = 1 + rng() % 5;
    std::vector<double> s(n * n);
    for (auto& v : s) v = us(rng);
    const SiglipParams sp{1.0 + static_cast<double>(rng() % 10), -static_cast<double>(rng() % 10)};
    const auto sig = pairwise_sigmoid_loss({s, n, n}, sp);
    worst_grad = std::max(worst_grad, oracle::relative_error(sig.grad,
        oracle::finite_difference([&](const std::vector<double>& x) { return pairwise_sigmoid_loss({x, n, n}, sp).loss; }, s)));

    const std::size_t rows = 1 + rng() % 6, vocab = 2 + rng() % 9;
    std::vector<double> logits(rows * vocab);
    for (auto& v : logits) v = ul(rng);
    std::vector<std::int64_t> ids(rows);
    for (auto& id : ids) id = static_cast<std::int64_t>(rng() % vocab);
    if (rows > 1) ids[rng() % rows] = kIgnoreIndex;
    const auto ce = token_cross_entropy({logits, rows, vocab}, ids);
    worst_grad = std::max(worst_grad, oracle::relative_error(ce.grad,
        oracle::finite_difference([&](const std::vector<double>& x) { return token_cross_entropy({x, rows, vocab}, ids).loss; }, logits)));

    std::vector<double> uniform(rows * vocab, ul(rng));
    worst_ce = std::max(worst_ce, std::abs(token_cross_entropy({uniform, rows, vocab}, ids).loss -
                                           std::log(static_cast<double>(vocab))));
  }
  c.expect(worst_bce <= 1e-9, fmt::format("ASL vs BCE deviation {:.3g}", worst_bce));
  c.expect(worst_grad <= 1e-4, fmt::format("gradient relative error {:.3g}", worst_grad));
  c.expect(worst_ce <= 1e-9, fmt::format("uniform cross-entropy deviation {:.3g}", worst_ce));
  if (c.ok) {
    c.detail = fmt::format("bce {:.2g}, grad rel {:.2g}, uniform ce {:.2g}", worst_bce, worst_grad, worst_ce);
  }
  return c;
}

// --- control text ---------------------------------------------------------

Check controltext() {
  Check c;
  const auto vocab = TagVocab::load(DYNVIEW_DEMO_VOCAB);
  const auto sentence = build_control_sentence(parse_tags("A white dog lying on a sofa", vocab));
  c.expect(sentence == "white dog, sofa[SEP]", "got '" + sentence + "'");
  const std::vector<std::string> tag{"dog"};
  for (double keep : {0.1, 0.5, 0.9}) {
    int kept = 0;
    constexpr int kTrials = 10000;
    for (int seed = 0; seed < kTrials; ++seed) {
      kept += static_cast<int>(drop_tags(tag, keep, static_cast<std::uint64_t>(seed)).size());
    }
    const double rate = kept / static_cast<double>(kTrials);
    c.expect(std::abs(rate - keep) <= 0.02, fmt::format("keep_prob {} gave rate {}", keep, rate));
  }
  return c;
}

// --- pipeline -------------------------------------------------------------

std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[entry.path().lexically_relative(root).generic_string()] = ss.str();
  }
  return files;
}

Check pipeline() {
  Check c;
  fixtures::ScratchDir dir("acceptance");
  const auto ds = fixtures::make_dataset(dir.path() / "data", 50, 6, true, 2026);
  const auto out_dir = dir.path() / "out";
  std::filesystem::create_directories(out_dir);

  BatchOptions opt;
  opt.annotations = ds.annotations;
  opt.images_dir = ds.images_dir;
  opt.output = out_dir / "manifest.jsonl";
  opt.config.views_dir = out_dir / "views";
  opt.config.vocab = std::make_shared<TagVocab>(TagVocab::load(DYNVIEW_DEMO_VOCAB));
  opt.jobs = 4;

  const auto s1 = run_batch(opt);
  c.expect(s1.ingested == 50, fmt::format("ingested {}", s1.ingested));
  c.expect(s1.ingested == s1.emitted + s1.skipped + s1.errored, "counters do not conserve");
  c.expect(s1.skipped == ds.missing && s1.errored == ds.corrupt, "skip/error counts do not match the fixture");
  const auto first = snapshot(out_dir);

  opt.jobs = 1;
  const auto s2 = run_batch(opt);
  c.expect(s2.emitted == s1.emitted, "rerun emitted a different count");
  c.expect(snapshot(out_dir) == first, "rerun is not byte-identical");

  const auto ms = read_manifests(opt.output);
  c.expect(ms.size() == s1.emitted, "manifest line count differs from emitted");
  write_manifests(out_dir / "copy.jsonl", ms);
  c.expect(read_manifests(out_dir / "copy.jsonl") == ms, "manifest round trip is not exact");
  for (const auto& m : ms) c.expect(manifest_from_json(manifest_to_json(m)) == m, "manifest JSON round trip is not exact");
  c.detail = fmt::format("{} ingested, {} emitted, {} skipped, {} errored", s1.ingested, s1.emitted, s1.skipped,
                         s1.errored) + (c.ok ? "" : "; " + c.detail);
  return c;
}

struct Criterion {
  const char* name;
  double limit_s;  // 0 = no runtime limit
  std::function<Check()> run;
};

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<Criterion> criteria{
      {"geometry: endpoints exact, nesting over 10^4 random triples", 5.0, geometry},
      {"phash: naive DCT oracle bit-for-bit (100), brightness invariance (100)", 30.0, phash},
      {"selection: topk/marginal oracles on 200 images, t=0 in 10^4 runs", 0.0, selection},
      {"task prior: attribute 0.1, captioning 0.4 or 0.5", 0.0, task_prior},
      {"roi kernels: oracles, linearity, zero offsets within 1e-6 (500)", 0.0, roi},
      {"losses: ASL=BCE 1e-9, gradients 1e-4 (100 each), uniform CE log V", 0.0, losses_check},
      {"control text: demo sentence, keep rate within 0.02 (10^4)", 0.0, controltext},
      {"pipeline: 50-region rerun byte-identical, round trip, counters", 60.0, pipeline},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto start = Clock::now();
    Check result;
    try {
      result = cr.run();
    } catch (const std::exception& e) {
      result.ok = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (cr.limit_s > 0.0 && secs > cr.limit_s) {
      result.ok = false;
      result.detail = fmt::format("took {:.2f} s, limit {} s", secs, cr.limit_s);
    }
    if (!result.ok) ++failed;
    std::string line = fmt::format("{} {} [{:.2f} s", result.ok ? "PASS" : "FAIL", cr.name, secs);
    if (cr.limit_s > 0.0) line += fmt::format(" / {} s", cr.limit_s);
    line += "]";
    if (!result.detail.empty()) line += " " + result.detail;
    std::puts(line.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
