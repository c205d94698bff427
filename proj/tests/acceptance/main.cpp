// Acceptance gate for the inspection toolkit.  Runs ten end-to-end checks —
// batch inspection quality and speed, detection rates, reviewer-score
// aggregates, ROC shape, three classifier training protocols, optimizer and
// layer numerics, independent oracles, and byte-level determinism — printing
// one PASS/FAIL line per check.  Exits nonzero when any check fails.
#include <stdexcept>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "trackinspect/cases.hpp"
#include "trackinspect/cnn/adam.hpp"
#include "trackinspect/cnn/data.hpp"
#include "trackinspect/cnn/serialize.hpp"
#include "trackinspect/cnn/train.hpp"
#include "trackinspect/dataset.hpp"
#include "trackinspect/experiment.hpp"
#include "trackinspect/footage.hpp"
#include "trackinspect/pipeline.hpp"
#include "trackinspect/rng.hpp"
#include "trackinspect/scene.hpp"

namespace fs = std::filesystem;
namespace ti = trackinspect;
namespace cnn = trackinspect::cnn;

namespace {

std::string g_bin;
fs::path g_root;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_secs(double s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << s << "s";
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  static int counter = 0;
  const std::string log = (g_root / ("cli_" + std::to_string(counter++) + ".log")).string();
  const int status = std::system((g_bin + " " + args + " > " + log + " 2>&1").c_str());
  if (output) *output = slurp(log);
  if (!WIFEXITED(status)) throw std::runtime_error("CLI did not exit normally: " + args);
  return WEXITSTATUS(status);
}

std::map<std::string, double> read_stats(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::map<std::string, double> out;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    const size_t comma = line.find(',');
    if (comma == std::string::npos) continue;
    out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  return out;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

// ---- classifier protocol runners -------------------------------------------------

struct SeedResult {
  double train_acc = 0.0;
  double val_acc = 0.0;
  double train_secs = 0.0;
  int epochs_run = 0;
};

// One dataset + one training run, seeded end to end, with an early stop once
// the requested bars are met.
SeedResult run_protocol(const std::set<ti::ComponentKind>& kinds, int image_size, uint64_t seed,
                        double dropout, int max_epochs, double train_bar, double val_bar,
                        const fs::path& dir) {
  ti::SceneConfig scene;
  scene.master_seed = seed;
  ti::DatasetSpec spec;
  spec.defect_kinds = kinds;
  spec.image_size = image_size;
  spec.seed = seed;
  ti::build_cnn_dataset(dir.string(), spec, scene);
  const cnn::LoadedDataset train_set = cnn::load_split(dir.string(), "train");
  const cnn::LoadedDataset valid_set = cnn::load_split(dir.string(), "valid");

  cnn::Model<float> model = cnn::make_default_model<float>(image_size, seed, dropout);
  cnn::TrainConfig tc;
  tc.epochs = max_epochs;
  tc.batch_size = 20;
  tc.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  SeedResult r;
  const cnn::History h =
      cnn::train(model, train_set, valid_set, tc, nullptr, nullptr,
                 [&](int, const cnn::EpochStats& es) {
                   return !(es.train_acc >= train_bar && es.val_acc >= val_bar);
                 });
  r.train_secs = seconds_since(t0);
  r.epochs_run = static_cast<int>(h.epochs.size());
  r.train_acc = h.epochs.back().train_acc;
  r.val_acc = h.epochs.back().val_acc;
  return r;
}

// ---- numeric helpers for the gradient check ---------------------------------------

constexpr uint64_t kGradSeed = 99;
constexpr uint64_t kGradStep = 4;

double loss_at(const cnn::Model<double>& m, const cnn::Tensor<double>& x,
               const cnn::Tensor<double>& y) {
  return cnn::cross_entropy(cnn::forward(m, x, cnn::PassMode::Train, kGradSeed, kGradStep), y);
}

double max_grad_rel_error(cnn::Model<double>& m, const cnn::Tensor<double>& x,
                          const cnn::Tensor<double>& y) {
  cnn::ForwardTrace<double> trace;
  const auto p = cnn::forward(m, x, cnn::PassMode::Train, kGradSeed, kGradStep, &trace);
  (void)p;
  const auto grads = cnn::backward(m, trace, y);

  const double h = 1e-5;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = loss_at(m, x, y);
    param = keep - h;
    const double down = loss_at(m, x, y);
    param = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({1e-8, std::abs(analytic) + std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (size_t i = 0; i < m.params.size(); ++i) {
    for (size_t j = 0; j < m.params[i].weights.v.size(); ++j)
      probe(m.params[i].weights.v[j], grads[i].weights.v[j]);
    for (size_t j = 0; j < m.params[i].bias.size(); ++j)
      probe(m.params[i].bias[j], grads[i].bias[j]);
  }
  return worst;
}

// ---- independent flood-fill segmentation oracle ------------------------------------

struct OracleBlob {
  int area = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double cx = 0.0, cy = 0.0;
};

std::vector<OracleBlob> flood_fill_blobs(const ti::Image& mask, int min_area) {
  std::vector<uint8_t> seen(mask.data.size(), 0);
  std::vector<OracleBlob> out;
  for (int sy = 0; sy < mask.height; ++sy) {
    for (int sx = 0; sx < mask.width; ++sx) {
      const size_t si = static_cast<size_t>(sy) * mask.width + sx;
      if (!mask.data[si] || seen[si]) continue;
      OracleBlob b{0, sx, sy, sx, sy, 0.0, 0.0};
      std::queue<std::pair<int, int>> q;
      q.push({sx, sy});
      seen[si] = 1;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop();
        ++b.area;
        b.cx += x;
        b.cy += y;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
            const size_t ni = static_cast<size_t>(ny) * mask.width + nx;
            if (mask.data[ni] && !seen[ni]) {
              seen[ni] = 1;
              q.push({nx, ny});
            }
          }
      }
      b.cx /= b.area;
      b.cy /= b.area;
      if (b.area >= min_area) out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end(), [](const OracleBlob& a, const OracleBlob& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.y0 != b.y0) return a.y0 < b.y0;
    return a.x0 < b.x0;
  });
  return out;
}

using CheckResult = std::pair<bool, std::string>;

// ---- the ten checks ---------------------------------------------------------------

struct Shared {
  fs::path exp_dir;    // full 15x5 experiment
  fs::path batch_dir;  // same-trial batch results
  double batch_secs = 0.0;
};

CheckResult check_1_batch(Shared& sh) {
  sh.exp_dir = g_root / "exp";
  sh.batch_dir = g_root / "batch_same";
  const auto t0 = std::chrono::steady_clock::now();
  if (run_cli("--quiet generate --experiment --out " + sh.exp_dir.string()) != 0)
    return {false, "generate failed"};
  if (run_cli("--quiet inspect-batch --dir " + sh.exp_dir.string() + " --out " +
              sh.batch_dir.string()) != 0)
    return {false, "inspect-batch failed"};
  sh.batch_secs = seconds_since(t0);

  const auto stats = read_stats((sh.batch_dir / "stats.csv").string());
  const int runs = static_cast<int>(stats.at("runs"));
  const int verdicts = static_cast<int>(stats.at("verdicts_correct"));
  const int exact = static_cast<int>(stats.at("labels_exact"));
  const bool ok = sh.batch_secs < 60.0 && runs == 75 && verdicts == 75 && exact >= 72;
  std::ostringstream d;
  d << runs << " runs, " << verdicts << "/75 verdicts, " << exact << "/75 exact label sets, "
    << fmt_secs(sh.batch_secs);
  return {ok, d.str()};
}

CheckResult check_2_rates(const Shared& sh) {
  const auto stats = read_stats((sh.batch_dir / "stats.csv").string());
  const double tpr = stats.at("tpr");
  const double fpr = stats.at("fpr");
  std::ostringstream d;
  d << "tpr " << tpr << " (need >= 0.98), fpr " << fpr << " (need <= 0.08)";
  return {tpr >= 0.98 && fpr <= 0.08, d.str()};
}

CheckResult check_3_scores(const Shared& sh) {
  const auto stats = read_stats((sh.batch_dir / "stats.csv").string());
  const double acceptance = stats.at("acceptance_percent");
  const double stddev = stats.at("score_stddev");
  std::ostringstream d;
  d << "acceptance " << acceptance << "% (need >= 95), stddev " << stddev << " (need <= 0.5)";
  return {acceptance >= 95.0 && stddev <= 0.5, d.str()};
}

CheckResult check_4_roc(const Shared& sh) {
  const fs::path out = g_root / "roc";
  if (run_cli("--quiet roc --dir " + sh.exp_dir.string() + " --thresholds 1:60 --out " +
              out.string()) != 0)
    return {false, "roc sweep failed"};

  std::ifstream f((out / "roc.csv").string());
  if (!f) return {false, "roc.csv missing"};
  std::string line;
  std::getline(f, line);
  if (line != "threshold,tpr,fpr") return {false, "unexpected roc.csv header"};
  int expected_threshold = 1;
  double prev_tpr = 2.0, prev_fpr = 2.0, tpr_at_10 = -1.0;
  bool monotone = true;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const int t = std::stoi(cell);
    std::getline(ss, cell, ',');
    const double tpr = std::stod(cell);
    std::getline(ss, cell, ',');
    const double fpr = std::stod(cell);
    if (t != expected_threshold++) return {false, "thresholds are not 1..60"};
    if (tpr > prev_tpr || fpr > prev_fpr) monotone = false;
    prev_tpr = tpr;
    prev_fpr = fpr;
    if (t == 10) tpr_at_10 = tpr;
  }
  if (expected_threshold != 61) return {false, "expected 60 roc points"};
  std::ostringstream d;
  d << "monotone over 1..60, tpr@10 " << tpr_at_10 << " (need >= 0.95)";
  return {monotone && tpr_at_10 >= 0.95, d.str()};
}

CheckResult check_5_blocks() {
  std::vector<double> trains, vals;
  double worst_secs = 0.0;
  std::ostringstream d;
  for (uint64_t seed : {1, 2, 3}) {
    const SeedResult r = run_protocol({ti::ComponentKind::Block}, 64, seed, 0.5, 30, 0.94, 0.80,
                                      g_root / ("c5_seed" + std::to_string(seed)));
    trains.push_back(r.train_acc);
    vals.push_back(r.val_acc);
    worst_secs = std::max(worst_secs, r.train_secs);
    d << "seed " << seed << ": train " << r.train_acc << " val " << r.val_acc << " ("
      << r.epochs_run << " ep, " << fmt_secs(r.train_secs) << ")  ";
  }
  const double mt = median3(trains), mv = median3(vals);
  d << "| medians train " << mt << " val " << mv;
  return {mt >= 0.94 && mv >= 0.80 && worst_secs < 600.0, d.str()};
}

CheckResult check_6_screws() {
  std::vector<double> vals;
  double worst_secs = 0.0;
  std::ostringstream d;
  for (uint64_t seed : {1, 2, 3}) {
    const SeedResult r = run_protocol({ti::ComponentKind::Screw}, 96, seed, 0.5, 30, 0.0, 0.80,
                                      g_root / ("c6_seed" + std::to_string(seed)));
    vals.push_back(r.val_acc);
    worst_secs = std::max(worst_secs, r.train_secs);
    d << "seed " << seed << ": val " << r.val_acc << " (" << r.epochs_run << " ep, "
      << fmt_secs(r.train_secs) << ")  ";
  }
  const double mv = median3(vals);
  d << "| median val " << mv;
  return {mv >= 0.80 && worst_secs < 600.0, d.str()};
}

CheckResult check_7_dropout_gap() {
  // Small training split so the no-dropout model can actually overfit.
  const fs::path dir = g_root / "c7_data";
  ti::SceneConfig scene;
  scene.master_seed = 11;
  ti::DatasetSpec spec;
  spec.train_count = 100;
  spec.seed = 11;
  ti::build_cnn_dataset(dir.string(), spec, scene);
  const cnn::LoadedDataset train_set = cnn::load_split(dir.string(), "train");
  const cnn::LoadedDataset valid_set = cnn::load_split(dir.string(), "valid");

  auto gaps_for = [&](double dropout) {
    std::vector<double> gaps;
    for (uint64_t seed : {1, 2, 3}) {
      cnn::Model<float> model = cnn::make_default_model<float>(spec.image_size, seed, dropout);
      cnn::TrainConfig tc;
      tc.epochs = 100;
      tc.batch_size = 20;
      tc.seed = seed;
      const cnn::History h = cnn::train(model, train_set, valid_set, tc);
      gaps.push_back(h.epochs.back().train_acc - h.epochs.back().val_acc);
    }
    return gaps;
  };

  const double gap_without = median3(gaps_for(0.0));
  const double gap_with = median3(gaps_for(0.5));
  std::ostringstream d;
  d << "median train-val gap: dropout 0 -> " << gap_without << ", dropout 0.5 -> " << gap_with;
  return {gap_without > gap_with, d.str()};
}

CheckResult check_8_numerics() {
  std::ostringstream d;
  bool ok = true;

  // softmax rows sum to one
  ti::Rng rng(17);
  cnn::Tensor<double> logits(5, 1, 1, 7);
  for (auto& v : logits.v) v = (rng.uniform01() - 0.5) * 20.0;
  const auto probs = cnn::softmax(logits);
  double worst_row = 0.0;
  for (int n = 0; n < probs.n; ++n) {
    double sum = 0.0;
    for (int k = 0; k < probs.c; ++k) sum += probs.at(n, 0, 0, k);
    worst_row = std::max(worst_row, std::abs(sum - 1.0));
  }
  ok = ok && worst_row < 1e-9;
  d << "softmax row error " << worst_row;

  // perfectly confident correct predictions cost nothing
  cnn::Tensor<double> onehot(4, 1, 1, 3);
  for (int n = 0; n < 4; ++n) onehot.at(n, 0, 0, n % 3) = 1.0;
  const double perfect = cnn::cross_entropy(onehot, onehot);
  ok = ok && perfect < 1e-9;
  d << ", perfect-CE " << perfect;

  // first optimizer step equals -lr * g / (|g| + eps)
  cnn::Model<double> m = cnn::make_model<double>(
      2, 2, 1,
      {{.kind = cnn::LayerKind::Flatten}, {.kind = cnn::LayerKind::Dense, .units = 3},
       {.kind = cnn::LayerKind::Softmax}},
      21);
  const cnn::Model<double> before = m;
  std::vector<cnn::LayerParams<double>> grads(m.layers.size());
  grads[1].weights = m.params[1].weights;
  for (auto& gv : grads[1].weights.v) gv = (rng.uniform01() - 0.5) * 4.0;
  grads[1].bias.assign(m.params[1].bias.size(), 0.0);
  for (auto& gv : grads[1].bias) gv = (rng.uniform01() - 0.5) * 4.0;
  cnn::AdamConfig ac;
  cnn::AdamState<double> state(m);
  cnn::adam_step(m, grads, state, ac);
  double worst_step = 0.0;
  for (size_t j = 0; j < m.params[1].weights.v.size(); ++j) {
    const double g = grads[1].weights.v[j];
    const double want =
        before.params[1].weights.v[j] - ac.learning_rate * g / (std::abs(g) + ac.epsilon);
    worst_step = std::max(worst_step, std::abs(m.params[1].weights.v[j] - want));
  }
  for (size_t j = 0; j < m.params[1].bias.size(); ++j) {
    const double g = grads[1].bias[j];
    const double want =
        before.params[1].bias[j] - ac.learning_rate * g / (std::abs(g) + ac.epsilon);
    worst_step = std::max(worst_step, std::abs(m.params[1].bias[j] - want));
  }
  ok = ok && worst_step < 1e-6;
  d << ", adam step error " << worst_step;

  // analytic gradients of the full reduced stack vs central differences
  cnn::Model<double> gm = cnn::make_model<double>(
      8, 8, 1,
      {{.kind = cnn::LayerKind::Conv, .filters = 2, .kernel = 3},
       {.kind = cnn::LayerKind::Relu},
       {.kind = cnn::LayerKind::MaxPool},
       {.kind = cnn::LayerKind::Conv, .filters = 3, .kernel = 3},
       {.kind = cnn::LayerKind::Relu},
       {.kind = cnn::LayerKind::Flatten},
       {.kind = cnn::LayerKind::Dropout, .rate = 0.25},
       {.kind = cnn::LayerKind::Dense, .units = 2},
       {.kind = cnn::LayerKind::Softmax}},
      71);
  cnn::Tensor<double> x(3, 8, 8, 1);
  for (auto& v : x.v) v = rng.uniform01();
  cnn::Tensor<double> y(3, 1, 1, 2);
  for (int n = 0; n < 3; ++n) y.at(n, 0, 0, n % 2) = 1.0;
  const double grad_err = max_grad_rel_error(gm, x, y);
  ok = ok && grad_err < 1e-4;
  d << ", grad check " << grad_err << " (need < 1e-4)";

  return {ok, d.str()};
}

CheckResult check_9_oracles() {
  std::ostringstream d;

  // segmentation against an independent flood fill, 1000 random masks
  ti::Rng rng(314);
  for (int round = 0; round < 1000; ++round) {
    const int w = 1 + static_cast<int>(rng.next() % 16);
    const int h = 1 + static_cast<int>(rng.next() % 16);
    const int min_area = 1 + static_cast<int>(rng.next() % 4);
    const double density = 0.1 + 0.8 * rng.uniform01();
    ti::Image mask(w, h);
    for (auto& px : mask.data) px = rng.uniform01() < density ? 1 : 0;

    const auto got = ti::segment(mask, min_area, 0);
    const auto want = flood_fill_blobs(mask, min_area);
    if (got.size() != want.size())
      return {false, "segmentation disagrees with flood fill (count) in round " +
                         std::to_string(round)};
    for (size_t i = 0; i < got.size(); ++i) {
      const bool same = got[i].area == want[i].area && got[i].box.x == want[i].x0 &&
                        got[i].box.y == want[i].y0 &&
                        got[i].box.x + got[i].box.w - 1 == want[i].x1 &&
                        got[i].box.y + got[i].box.h - 1 == want[i].y1 &&
                        std::abs(got[i].centroid_x - want[i].cx) < 1e-12 &&
                        std::abs(got[i].centroid_y - want[i].cy) < 1e-12;
      if (!same)
        return {false, "segmentation disagrees with flood fill (blob) in round " +
                           std::to_string(round)};
    }
  }
  d << "segment == flood fill on 1000 masks";

  // conv / dense / pool against direct summation in double
  double worst = 0.0;
  for (int round = 0; round < 5; ++round) {
    cnn::Tensor<double> x(2, 7, 6, 3);
    for (auto& v : x.v) v = rng.uniform01() * 2.0 - 1.0;
    cnn::Tensor<double> w(4, 3, 3, 3);
    for (auto& v : w.v) v = rng.uniform01() * 2.0 - 1.0;
    std::vector<double> b(4);
    for (auto& v : b) v = rng.uniform01();
    const auto out = cnn::conv2d_forward(x, w, b);
    for (int n = 0; n < out.n; ++n)
      for (int oy = 0; oy < out.h; ++oy)
        for (int ox = 0; ox < out.w; ++ox)
          for (int f = 0; f < out.c; ++f) {
            double acc = b[static_cast<size_t>(f)];
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx)
                for (int c = 0; c < 3; ++c)
                  acc += x.at(n, oy + ky, ox + kx, c) * w.at(f, ky, kx, c);
            worst = std::max(worst, std::abs(acc - out.at(n, oy, ox, f)));
          }

    cnn::Tensor<double> fx(3, 1, 1, 10);
    for (auto& v : fx.v) v = rng.uniform01() * 2.0 - 1.0;
    cnn::Tensor<double> dw(5, 1, 1, 10);
    for (auto& v : dw.v) v = rng.uniform01() * 2.0 - 1.0;
    std::vector<double> db(5);
    for (auto& v : db) v = rng.uniform01();
    const auto dout = cnn::dense_forward(fx, dw, db);
    for (int n = 0; n < 3; ++n)
      for (int u = 0; u < 5; ++u) {
        double acc = db[static_cast<size_t>(u)];
        for (int i = 0; i < 10; ++i) acc += fx.at(n, 0, 0, i) * dw.at(u, 0, 0, i);
        worst = std::max(worst, std::abs(acc - dout.at(n, 0, 0, u)));
      }

    cnn::Tensor<double> px(2, 6, 8, 2);
    for (auto& v : px.v) v = rng.uniform01() * 2.0 - 1.0;
    const auto pooled = cnn::maxpool_forward(px);
    for (int n = 0; n < 2; ++n)
      for (int oy = 0; oy < pooled.out.h; ++oy)
        for (int ox = 0; ox < pooled.out.w; ++ox)
          for (int c = 0; c < 2; ++c) {
            const double m = std::max({px.at(n, 2 * oy, 2 * ox, c), px.at(n, 2 * oy, 2 * ox + 1, c),
                                       px.at(n, 2 * oy + 1, 2 * ox, c),
                                       px.at(n, 2 * oy + 1, 2 * ox + 1, c)});
            worst = std::max(worst, std::abs(m - pooled.out.at(n, oy, ox, c)));
          }
  }
  if (worst >= 1e-12)
    return {false, "layer outputs drift from direct summation by " + std::to_string(worst)};
  d << "; conv/dense/pool within 1e-12 of direct sums";

  // the 49 component labels and 150 footage names round-trip
  const auto& parts = ti::inventory();
  if (parts.size() != 49) return {false, "inventory is not 49 parts"};
  for (const ti::ComponentId& part : parts)
    if (!(ti::parse_component_label(ti::format_component_label(part)) == part))
      return {false, "label round trip failed for " + ti::format_component_label(part)};
  std::set<std::string> names;
  for (int c = 1; c <= 15; ++c)
    for (ti::Medium medium : {ti::Medium::Frame, ti::Medium::Video})
      for (int t = 1; t <= 5; ++t) {
        const ti::FootageId id{c, medium, t};
        const std::string name = ti::format_footage_name(id);
        if (!(ti::parse_footage_name(name) == id))
          return {false, "footage name round trip failed for " + name};
        names.insert(name);
      }
  if (names.size() != 150) return {false, "expected 150 distinct footage names"};
  d << "; 49 labels + 150 names round-trip";

  // model files reload bit-exactly in both precisions
  const auto check_roundtrip = [&](auto tag, const char* label) -> bool {
    using T = decltype(tag);
    const cnn::Model<T> m = cnn::make_default_model<T>(32, 5, 0.25);
    const std::string p1 = (g_root / (std::string("rt_") + label + ".bin")).string();
    const std::string p2 = (g_root / (std::string("rt_") + label + "_2.bin")).string();
    cnn::save_model(p1, m);
    const cnn::LoadedModel loaded = cnn::load_model(p1);
    if (!std::holds_alternative<cnn::Model<T>>(loaded)) return false;
    cnn::save_model(p2, std::get<cnn::Model<T>>(loaded));
    return slurp(p1) == slurp(p2);
  };
  if (!check_roundtrip(float{}, "float") || !check_roundtrip(double{}, "double"))
    return {false, "model serialization round trip is not bit-exact"};
  d << "; save/load bit-exact";

  return {true, d.str()};
}

CheckResult check_10_determinism(const Shared& sh) {
  // the generator again, fresh directory, same defaults
  const fs::path exp2 = g_root / "exp_repeat";
  if (run_cli("--quiet generate --experiment --out " + exp2.string()) != 0)
    return {false, "repeat generate failed"};
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(sh.exp_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (slurp(entry.path().string()) != slurp((exp2 / name).string()))
      return {false, "generate output differs: " + name};
    ++compared;
  }
  if (compared < 77) return {false, "expected 75 frames + ground truth + config"};

  // the batch inspector again on the same frames
  const fs::path batch2 = g_root / "batch_repeat";
  if (run_cli("--quiet inspect-batch --dir " + sh.exp_dir.string() + " --out " + batch2.string() +
              " --no-overlays") != 0)
    return {false, "repeat inspect-batch failed"};
  for (const char* name : {"confusion.csv", "likert.csv", "stats.csv", "histogram.csv"}) {
    if (slurp((sh.batch_dir / name).string()) != slurp((batch2 / name).string()))
      return {false, std::string("inspect-batch output differs: ") + name};
  }
  if (slurp((sh.batch_dir / "runs" / "15_F_T1.json").string()) !=
      slurp((batch2 / "runs" / "15_F_T1.json").string()))
    return {false, "per-run report differs between identical batches"};

  // training, twice, through the CLI
  const std::string ini = (g_root / "tiny.ini").string();
  spit(ini,
       "dataset.train_count = 24\n"
       "dataset.valid_count = 12\n"
       "dataset.test_count = 12\n"
       "dataset.image_size = 32\n"
       "train.epochs = 2\n"
       "train.batch_size = 8\n");
  const fs::path data = g_root / "det_data";
  if (run_cli("--quiet --seed 3 --config " + ini + " generate --dataset --kinds block --out " +
              data.string()) != 0)
    return {false, "dataset generate failed"};
  const fs::path t1 = g_root / "det_train1", t2 = g_root / "det_train2";
  for (const fs::path& t : {t1, t2})
    if (run_cli("--quiet --seed 3 --config " + ini + " train --data " + data.string() + " --out " +
                t.string()) != 0)
      return {false, "training run failed"};
  if (slurp((t1 / "model.bin").string()) != slurp((t2 / "model.bin").string()))
    return {false, "model bytes differ between identical training runs"};
  if (slurp((t1 / "history.csv").string()) != slurp((t2 / "history.csv").string()))
    return {false, "history differs between identical training runs"};

  return {true, "generate, inspect-batch and train all byte-identical on reruns"};
}

}  // namespace

int main() {
  const char* bin = std::getenv("TRACKINSPECT_BIN");
  if (!bin) {
    std::cerr << "TRACKINSPECT_BIN is not set\n";
    return 1;
  }
  g_bin = bin;
  g_root = fs::temp_directory_path() /
           ("ti_acceptance_" +
            std::to_string(
                std::chrono::steady_clock::now().time_since_epoch().count()));
  fs::create_directories(g_root);

  Shared sh;
  int failures = 0;
  const auto run_check = [&](int id, const std::string& label,
                             const std::function<CheckResult()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      const CheckResult r = fn();
      ok = r.first;
      detail = r.second;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << label << " ["
              << detail << "] (" << fmt_secs(seconds_since(t0)) << ")" << std::endl;
  };

  run_check(1, "batch inspection: 75 runs, all verdicts, >=72 exact label sets, under 60s",
            [&] { return check_1_batch(sh); });
  run_check(2, "component detection rates", [&] { return check_2_rates(sh); });
  run_check(3, "review-score aggregates", [&] { return check_3_scores(sh); });
  run_check(4, "roc sweep shape", [&] { return check_4_roc(sh); });
  run_check(5, "block classifier protocol", [] { return check_5_blocks(); });
  run_check(6, "screw classifier protocol at 96 px", [] { return check_6_screws(); });
  run_check(7, "dropout narrows the generalization gap", [] { return check_7_dropout_gap(); });
  run_check(8, "optimizer and gradient numerics", [] { return check_8_numerics(); });
  run_check(9, "independent oracles", [] { return check_9_oracles(); });
  run_check(10, "byte-level determinism", [&] { return check_10_determinism(sh); });

  if (failures == 0) {
    std::cout << "ACCEPTANCE: 10/10 checks passed" << std::endl;
    std::error_code ec;
    fs::remove_all(g_root, ec);
    return 0;
  }
  std::cout << "ACCEPTANCE: " << (10 - failures) << "/10 checks passed; artifacts kept in "
            << g_root << std::endl;
  return 1;
}
