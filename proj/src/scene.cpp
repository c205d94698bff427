#include "trackinspect/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "trackinspect/cases.hpp"
#include "trackinspect/rng.hpp"

namespace trackinspect {

namespace {

// Flat-shaded intensity levels.  Every component sits at least 80 levels
// above whatever its removal exposes (tie wood or gravel), so a missing part
// is unmistakable in a difference image, and every level survives a +-10
// brightness shift plus pepper noise without clipping.  The tie strips and
// the screw heads double as contrast anchors: large uniform plateaus at the
// extreme dark/bright levels keep the observed min/max of a median-filtered
// frame independent of the per-trial noise.
constexpr int kTieLevel = 35;
constexpr int kBackgroundLevel = 60;
constexpr int kRailLevel = 200;
constexpr int kBlockLevel = 140;
constexpr int kScrewLevel = 230;
constexpr int kWasherLevel = 180;
constexpr int kConnectorLevel = 210;

constexpr uint64_t kGravelTag = 0x67726176ull;   // static texture stream
constexpr uint64_t kTrialTag = 0x747269616cull;  // per-trial jitter stream

int washer_hole_radius(int outer) { return std::max(1, outer - 3); }

}  // namespace

const Rect& TrackGeometry::footprint(const ComponentId& id) const {
  auto it = footprints.find(id);
  if (it == footprints.end())
    throw std::invalid_argument("no footprint for component " + format_component_label(id));
  return it->second;
}

TrackGeometry standard_geometry(const SceneConfig& config) {
  const int W = config.width, H = config.height;
  const int J = config.jitter_translation_max;
  const int rt = config.rail_thickness;

  TrackGeometry g;
  g.width = W;
  g.height = H;

  const int rail_x0 = static_cast<int>(std::lround(0.075 * W));
  const int rail_x1 = W - 1 - rail_x0;
  const int rail1_cy = static_cast<int>(std::lround(7.0 * H / 24.0));
  const int rail2_cy = H - rail1_cy;
  g.rail1 = {rail_x0, rail1_cy - rt / 2, rail_x1 - rail_x0 + 1, rt};
  g.rail2 = {rail_x0, rail2_cy - rt / 2, rail_x1 - rail_x0 + 1, rt};

  const int spacing = static_cast<int>(std::lround(3.0 * W / 32.0));
  const int sr = config.screw_radius;
  const int wr = config.washer_outer_radius;

  auto mirror_x = [&](const Rect& r) { return Rect{W - 1 - (r.x + r.w - 1), r.y, r.w, r.h}; };
  auto mirror_y = [&](const Rect& r) { return Rect{r.x, H - 1 - (r.y + r.h - 1), r.w, r.h}; };

  // Blocks sit on the tie between the rails with a 2 px tie margin on each
  // side; the fasteners line up with each tie just outside the rails.  Every
  // on-tie component is strictly inside its tie strip, so removing it
  // exposes tie wood, never another part.
  const int tie_y0 = g.rail1.y + g.rail1.h + 2;
  const int tie_y1 = g.rail2.y - 1 - 2;
  const int screw1_cy = g.rail1.y - 3 - sr;
  const int washer1_cy = screw1_cy - sr - 3 - wr;

  for (int i = 0; i < 9; ++i) {
    const int cx = W / 2 + (i - 4) * spacing;
    const int tie = i + 1;
    g.ties.push_back({cx - config.tie_width / 2 - 2, J, config.tie_width + 4, H - 2 * J});
    g.footprints[{ComponentKind::Block, 0, tie}] =
        {cx - config.tie_width / 2, tie_y0, config.tie_width, tie_y1 - tie_y0 + 1};
    Rect screw1{cx - sr, screw1_cy - sr, 2 * sr + 1, 2 * sr + 1};
    Rect washer1{cx - wr, washer1_cy - wr, 2 * wr + 1, 2 * wr + 1};
    g.footprints[{ComponentKind::Screw, 1, tie}] = screw1;
    g.footprints[{ComponentKind::Washer, 1, tie}] = washer1;
    g.footprints[{ComponentKind::Screw, 2, tie}] = mirror_y(screw1);
    g.footprints[{ComponentKind::Washer, 2, tie}] = mirror_y(washer1);
  }

  const int cs = config.connector_size;
  Rect conn_left1{rail_x0 - 2 - cs, rail1_cy - cs / 2, cs, cs};
  g.footprints[{ComponentKind::Connector, 1, 1}] = conn_left1;
  g.footprints[{ComponentKind::Connector, 1, 9}] = mirror_x(conn_left1);
  g.footprints[{ComponentKind::Connector, 2, 1}] = mirror_y(conn_left1);
  g.footprints[{ComponentKind::Connector, 2, 9}] = mirror_x(mirror_y(conn_left1));

  // Layout sanity: everything stays inside the frame for every jitter draw,
  // footprints never touch each other or the rails, each on-tie part lies
  // strictly inside its tie strip, and connectors sit on open gravel.
  auto in_bounds = [&](const Rect& r) {
    return r.w > 0 && r.h > 0 && r.x >= J && r.y >= J && r.x + r.w <= W - J && r.y + r.h <= H - J;
  };
  auto contains_rect = [](const Rect& outer, const Rect& inner) {
    return inner.x >= outer.x && inner.y >= outer.y && inner.x + inner.w <= outer.x + outer.w &&
           inner.y + inner.h <= outer.y + outer.h;
  };
  if (!in_bounds(g.rail1) || !in_bounds(g.rail2))
    throw std::invalid_argument("scene too small for the rail layout");
  for (const Rect& t : g.ties)
    if (!in_bounds(t)) throw std::invalid_argument("scene too small for the tie strips");
  std::vector<const Rect*> rects{&g.rail1, &g.rail2};
  for (const auto& [id, r] : g.footprints) {
    if (!in_bounds(r))
      throw std::invalid_argument("scene too small: " + format_component_label(id) +
                                  " falls outside the jitter-safe area");
    if (id.kind == ComponentKind::Connector) {
      for (const Rect& t : g.ties)
        if (r.intersects(t))
          throw std::invalid_argument("scene too small: connector overlaps a tie strip");
    } else if (!contains_rect(g.ties[static_cast<size_t>(id.tie - 1)], r)) {
      throw std::invalid_argument("scene too small: " + format_component_label(id) +
                                  " does not fit on its tie");
    }
    rects.push_back(&r);
  }
  for (size_t a = 0; a < rects.size(); ++a)
    for (size_t b = a + 1; b < rects.size(); ++b)
      if (rects[a]->intersects(*rects[b]))
        throw std::invalid_argument("scene too small: component footprints overlap");
  return g;
}

namespace {

void fill_rect(Image& img, const Rect& r, int ox, int oy, uint8_t v) {
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) img.at(r.x + x + ox, r.y + y + oy) = v;
}

void fill_disc(Image& img, const Rect& box, int ox, int oy, int outer_r, int hole_r, uint8_t v) {
  const int cx = box.x + box.w / 2, cy = box.y + box.h / 2;
  for (int y = box.y; y < box.y + box.h; ++y)
    for (int x = box.x; x < box.x + box.w; ++x) {
      const int d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d2 <= outer_r * outer_r && (hole_r < 0 || d2 > hole_r * hole_r))
        img.at(x + ox, y + oy) = v;
    }
}

}  // namespace

uint64_t trial_seed_for(uint64_t master_seed, int case_number, int trial) {
  return derive_seed(master_seed, {kTrialTag, static_cast<uint64_t>(case_number),
                                   static_cast<uint64_t>(trial)});
}

RenderedScene render_track(const TrackGeometry& geometry, const DefectSet& defects,
                           uint64_t trial_seed, const SceneConfig& config) {
  for (const auto& d : defects)
    if (!geometry.footprints.contains(d))
      throw std::invalid_argument("defect not in inventory: " + format_component_label(d));

  const int W = geometry.width, H = geometry.height;
  const int J = config.jitter_translation_max;

  // The canonical scene lives on a canvas padded by the jitter range, so a
  // translated trial is a pure crop: gravel moves rigidly with the track and
  // cancels out again once the inspection stage re-registers two trials.
  Image canvas(W + 2 * J, H + 2 * J);
  Rng gravel(derive_seed(config.master_seed, {kGravelTag}));
  const int clip = static_cast<int>(std::lround(3.0 * config.background_noise_sigma));
  for (auto& px : canvas.data) {
    long n = std::lround(gravel.normal(0.0, config.background_noise_sigma));
    n = std::clamp(n, static_cast<long>(-clip), static_cast<long>(clip));
    px = static_cast<uint8_t>(kBackgroundLevel + n);
  }

  for (const Rect& tie : geometry.ties) fill_rect(canvas, tie, J, J, kTieLevel);
  fill_rect(canvas, geometry.rail1, J, J, kRailLevel);
  fill_rect(canvas, geometry.rail2, J, J, kRailLevel);
  const int hole = washer_hole_radius(config.washer_outer_radius);
  for (const auto& [id, r] : geometry.footprints) {
    if (defects.contains(id)) continue;
    switch (id.kind) {
      case ComponentKind::Block: fill_rect(canvas, r, J, J, kBlockLevel); break;
      case ComponentKind::Screw: fill_disc(canvas, r, J, J, config.screw_radius, -1, kScrewLevel); break;
      case ComponentKind::Washer:
        fill_disc(canvas, r, J, J, config.washer_outer_radius, hole, kWasherLevel);
        break;
      case ComponentKind::Connector: fill_rect(canvas, r, J, J, kConnectorLevel); break;
    }
  }

  Rng trial_rng(trial_seed);
  RenderedScene scene;
  scene.ground_truth = defects;
  scene.jitter_dx = trial_rng.uniform_int(-J, J);
  scene.jitter_dy = trial_rng.uniform_int(-J, J);
  scene.jitter_brightness =
      trial_rng.uniform_int(-config.jitter_brightness_max, config.jitter_brightness_max);

  scene.image = Image(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      int v = canvas.at(x - scene.jitter_dx + J, y - scene.jitter_dy + J);
      v += scene.jitter_brightness;
      const uint64_t u = trial_rng.next();
      if (static_cast<double>(u >> 11) * 0x1.0p-53 < config.sensor_speckle_fraction) v -= 1;
      scene.image.at(x, y) = static_cast<uint8_t>(std::clamp(v, 0, 255));
    }
  return scene;
}

ExperimentManifest generate_experiment(const std::string& out_dir,
                                       const std::vector<int>& cases,
                                       const std::vector<int>& trials,
                                       const SceneConfig& config) {
  const TrackGeometry geometry = standard_geometry(config);
  RunManifest runs = build_run_manifest(cases, trials, PairingPolicy::SameTrial);
  (void)runs;  // validates the case/trial ranges

  std::filesystem::create_directories(out_dir);
  ExperimentManifest manifest;
  for (int c : cases) {
    const TestCase& tc = test_case(c);
    for (int t : trials) {
      const uint64_t seed = trial_seed_for(config.master_seed, c, t);
      RenderedScene scene = render_track(geometry, tc.defects, seed, config);
      scene.trial = t;
      const std::string name = format_footage_name({c, Medium::Frame, t});
      save_png_gray(out_dir + "/" + name + ".png", scene.image);
      manifest.files.push_back(name + ".png");
      manifest.ground_truth[name] = tc.defects;
    }
  }
  std::sort(manifest.files.begin(), manifest.files.end());

  nlohmann::json gt;
  for (const auto& [name, defects] : manifest.ground_truth) {
    auto& arr = gt[name] = nlohmann::json::array();
    for (const auto& d : defects) arr.push_back(format_component_label(d));
  }
  std::ofstream out(out_dir + "/ground_truth.json");
  if (!out) throw std::runtime_error(out_dir + "/ground_truth.json: cannot write");
  out << gt.dump(2) << "\n";
  return manifest;
}

}  // namespace trackinspect
