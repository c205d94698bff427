#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trackinspect/footage.hpp"
#include "trackinspect/image.hpp"
#include "trackinspect/labels.hpp"

namespace trackinspect {

struct SceneConfig {
  int width = 320;
  int height = 240;
  int rail_thickness = 6;
  int tie_width = 16;
  int screw_radius = 3;
  int washer_outer_radius = 5;
  int connector_size = 10;
  double background_noise_sigma = 4.0;  // gravel texture amplitude, gray levels
  int jitter_translation_max = 3;       // px, per trial
  int jitter_brightness_max = 10;       // gray levels, per trial
  // Fraction of pixels dimmed by one level of fresh per-trial pepper noise.
  // One-sided and bounded on purpose: the bright screw plateau then keeps an
  // exact maximum and the dark tie plateau an all-but-exact minimum, so the
  // contrast stretch maps two trials of the same track identically and
  // re-registered pairs differ only at genuine defects (and at isolated
  // pepper pixels the median filter removes).
  double sensor_speckle_fraction = 0.10;
  uint64_t master_seed = 1;
};

// Axis-aligned pixel rectangle; x/y is the top-left corner, w/h the extent.
struct Rect {
  int x = 0, y = 0, w = 0, h = 0;

  double cx() const { return x + (w - 1) / 2.0; }
  double cy() const { return y + (h - 1) / 2.0; }
  bool contains(int px, int py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  bool intersects(const Rect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  bool operator==(const Rect&) const = default;
};

// Canonical placement of the 49 inventory components plus the scenery (two
// rails and nine tie strips), which is never removed.  Footprints are
// pairwise disjoint, so removing any component exposes only what lies
// beneath it: the tie for on-tie parts, gravel for connectors.
struct TrackGeometry {
  int width = 0;
  int height = 0;
  Rect rail1, rail2;       // scenery
  std::vector<Rect> ties;  // scenery, one vertical strip per tie
  std::map<ComponentId, Rect> footprints;

  const Rect& footprint(const ComponentId& id) const;
};

// Derives the layout from the config.  Throws std::invalid_argument when the
// requested dimensions cannot hold the 9-tie layout with the jitter margin.
TrackGeometry standard_geometry(const SceneConfig& config);

struct RenderedScene {
  Image image;
  DefectSet ground_truth;
  int trial = 0;
  int jitter_dx = 0;
  int jitter_dy = 0;
  int jitter_brightness = 0;
};

// Renders one trial frame: static gravel from the master seed, every
// inventory component except `defects`, then the per-trial jitter
// (translation, brightness, sensor speckle) drawn from `trial_seed`.
RenderedScene render_track(const TrackGeometry& geometry, const DefectSet& defects,
                           uint64_t trial_seed, const SceneConfig& config);

uint64_t trial_seed_for(uint64_t master_seed, int case_number, int trial);

struct ExperimentManifest {
  std::vector<std::string> files;                // relative PNG names, sorted
  std::map<std::string, DefectSet> ground_truth;  // footage name -> defects
};

// Writes <out_dir>/CC_F_Tt.png for every requested case/trial plus
// ground_truth.json.  Rendering is deterministic in config.master_seed.
ExperimentManifest generate_experiment(const std::string& out_dir,
                                       const std::vector<int>& cases,
                                       const std::vector<int>& trials,
                                       const SceneConfig& config);

}  // namespace trackinspect
