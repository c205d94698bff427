#include <stdexcept>
#include <doctest.h>

#include <cmath>
#include <tuple>

#include "trackinspect/cases.hpp"
#include "trackinspect/dataset.hpp"
#include "trackinspect/pipeline.hpp"
#include "trackinspect/rng.hpp"
#include "trackinspect/scene.hpp"
#include "helpers.hpp"

using namespace trackinspect;

TEST_CASE("median filter removes isolated outliers") {
  Image img(5, 5, 100);
  img.at(2, 2) = 255;
  PipelineConfig cfg;
  cfg.median_radius = 1;
  const Image out = preprocess(img, cfg);
  // The outlier is gone, so the whole frame is constant and the stretch is
  // the identity.
  for (auto px : out.data) CHECK(px == 100);
}

TEST_CASE("contrast stretch maps the observed range onto 0..255") {
  Image img(4, 1);
  img.at(0, 0) = 100;
  img.at(1, 0) = 100;
  img.at(2, 0) = 200;
  img.at(3, 0) = 150;
  PipelineConfig cfg;
  cfg.median_radius = 0;
  const Image out = preprocess(img, cfg);
  CHECK(out.at(0, 0) == 0);
  CHECK(out.at(1, 0) == 0);
  CHECK(out.at(2, 0) == 255);
  CHECK(out.at(3, 0) == 128);  // (150-100)/(200-100) * 255 = 127.5, rounds up
}

TEST_CASE("preprocess leaves full-range images without median alone") {
  Image img(3, 1);
  img.at(0, 0) = 0;
  img.at(1, 0) = 77;
  img.at(2, 0) = 255;
  PipelineConfig cfg;
  cfg.median_radius = 0;
  CHECK(preprocess(img, cfg) == img);
}

TEST_CASE("preprocess validation") {
  PipelineConfig cfg;
  CHECK_THROWS_AS(preprocess(Image{}, cfg), std::invalid_argument);
  cfg.median_radius = -1;
  CHECK_THROWS_AS(preprocess(Image(4, 4), cfg), std::invalid_argument);
}

TEST_CASE("registration recovers a synthetic translation exactly") {
  const SceneConfig config;
  const TrackGeometry g = standard_geometry(config);
  const RenderedScene s = render_track(g, {}, trial_seed_for(1, 1, 1), config);

  for (auto [tx, ty] : {std::pair{2, -1}, std::pair{-3, 3}, std::pair{0, 0}, std::pair{4, 2}}) {
    const Image shifted = translate_fill(s.image, tx, ty);
    const auto [dx, dy] = register_translation(s.image, shifted, 5);
    CHECK(dx == tx);
    CHECK(dy == ty);
  }
}

TEST_CASE("registration matches a brute-force search with its tie rules") {
  Rng rng(99);
  for (int round = 0; round < 40; ++round) {
    const int W = 12 + int(rng.next() % 8), H = 12 + int(rng.next() % 8);
    Image a(W, H), b(W, H);
    // Coarse quantization provokes plenty of score ties.
    for (auto& px : a.data) px = uint8_t((rng.next() % 3) * 100);
    for (auto& px : b.data) px = uint8_t((rng.next() % 3) * 100);
    const int window = 3;

    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> want{0, 0};
    auto rank = [](std::pair<int, int> o) {
      return std::tuple(std::abs(o.first) + std::abs(o.second), o.first, o.second);
    };
    for (int dy = -window; dy <= window; ++dy)
      for (int dx = -window; dx <= window; ++dx) {
        long long sad = 0;
        long long count = 0;
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const int tx = x + dx, ty = y + dy;
            if (tx < 0 || tx >= W || ty < 0 || ty >= H) continue;
            sad += std::abs(int(a.at(x, y)) - int(b.at(tx, ty)));
            ++count;
          }
        const double score = double(sad) / double(count);
        if (score < best || (score == best && rank({dx, dy}) < rank(want))) {
          best = score;
          want = {dx, dy};
        }
      }

    CHECK(register_translation(a, b, window) == want);
  }
}

TEST_CASE("registration validation") {
  CHECK_THROWS_AS(register_translation(Image(4, 4), Image(5, 4), 1), std::invalid_argument);
  CHECK_THROWS_AS(register_translation(Image(4, 4), Image(4, 4), -1), std::invalid_argument);
  CHECK_THROWS_AS(register_translation(Image(4, 4), Image(4, 4), 4), std::invalid_argument);
}

TEST_CASE("difference map separates darker and brighter changes") {
  Image ref(6, 1, 100), test(6, 1, 100);
  test.at(1, 0) = 50;   // darker in test -> missing
  test.at(2, 0) = 180;  // brighter in test -> extra
  test.at(3, 0) = 108;  // inside the threshold band
  const DifferenceMasks m = difference_map(ref, test, {0, 0}, 10);
  CHECK(m.missing.at(1, 0) == 1);
  CHECK(m.extra.at(1, 0) == 0);
  CHECK(m.extra.at(2, 0) == 1);
  CHECK(m.missing.at(2, 0) == 0);
  CHECK(m.missing.at(3, 0) == 0);
  CHECK(m.extra.at(3, 0) == 0);
  CHECK(m.missing.at(0, 0) == 0);
}

TEST_CASE("difference map honors the registration offset and overlap") {
  Image ref(5, 3, 100);
  ref.at(3, 1) = 200;
  // The same bright pixel, shifted one to the right in the test frame.
  Image test(5, 3, 100);
  test.at(4, 1) = 200;
  const DifferenceMasks aligned = difference_map(ref, test, {1, 0}, 10);
  for (auto px : aligned.missing.data) CHECK(px == 0);
  for (auto px : aligned.extra.data) CHECK(px == 0);

  // Without the offset the pixel shows up twice, once per direction.
  const DifferenceMasks raw = difference_map(ref, test, {0, 0}, 10);
  CHECK(raw.missing.at(3, 1) == 1);
  CHECK(raw.extra.at(4, 1) == 1);

  // Pixels whose counterpart falls outside the frame never fire: with a +2
  // shift only x = 0..1 overlap.
  Image bright(4, 4, 250), dark(4, 4, 10);
  const DifferenceMasks edge = difference_map(bright, dark, {2, 0}, 10);
  CHECK(edge.missing.at(0, 0) == 1);
  CHECK(edge.missing.at(1, 0) == 1);
  CHECK(edge.missing.at(2, 0) == 0);
  CHECK(edge.missing.at(3, 0) == 0);
}

TEST_CASE("difference map validation") {
  CHECK_THROWS_AS(difference_map(Image(4, 4), Image(4, 4), {0, 0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(difference_map(Image(4, 4), Image(4, 4), {0, 0}, 255), std::invalid_argument);
  CHECK_THROWS_AS(difference_map(Image(4, 4), Image(4, 4), {4, 0}, 10), std::invalid_argument);
  CHECK_THROWS_AS(difference_map(Image(4, 4), Image(5, 4), {0, 0}, 10), std::invalid_argument);
}

TEST_CASE("morphological opening drops thin spurs but keeps solid regions") {
  Image mask(9, 9, 0);
  for (int y = 2; y <= 6; ++y)
    for (int x = 2; x <= 6; ++x) mask.at(x, y) = 1;  // 5x5 solid block
  mask.at(8, 8) = 1;                                 // isolated pixel
  mask.at(0, 4) = 1;                                 // 1 px spur
  const auto blobs = segment(mask, 1, 1);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].box == Rect{2, 2, 5, 5});  // opening restores the solid block
  CHECK(blobs[0].area == 25);
}

TEST_CASE("segment filters by area and sorts by size") {
  Image mask(12, 6, 0);
  for (int x = 0; x <= 3; ++x) mask.at(x, 0) = 1;      // area 4
  for (int y = 3; y <= 5; ++y)
    for (int x = 6; x <= 11; ++x) mask.at(x, y) = 1;   // area 18
  mask.at(0, 5) = 1;                                   // area 1

  const auto blobs = segment(mask, 2, 0);
  REQUIRE(blobs.size() == 2);
  CHECK(blobs[0].area == 18);
  CHECK(blobs[1].area == 4);
  CHECK(blobs[0].box == Rect{6, 3, 6, 3});
  CHECK(blobs[0].centroid_x == doctest::Approx(8.5));
  CHECK(blobs[0].centroid_y == doctest::Approx(4.0));
}

TEST_CASE("segment uses 8-connectivity") {
  Image mask(4, 4, 0);
  mask.at(0, 0) = 1;
  mask.at(1, 1) = 1;  // diagonal touch
  mask.at(2, 2) = 1;
  const auto blobs = segment(mask, 1, 0);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].area == 3);
}

TEST_CASE("localize maps blob centroids to the nearest footprint") {
  const SceneConfig config;
  const TrackGeometry g = standard_geometry(config);
  const ComponentId screw = parse_component_label("1-5S");
  const Rect fp = g.footprint(screw);

  DefectBlob close;
  close.centroid_x = fp.cx() + 1.0;
  close.centroid_y = fp.cy() - 1.0;
  close.area = 20;

  DefectBlob far;
  far.centroid_x = 0.0;
  far.centroid_y = 0.0;
  far.area = 20;

  const auto mapped = localize({close, far}, g, 15.0);
  REQUIRE(mapped.size() == 2);
  REQUIRE(mapped[0].mapped.has_value());
  CHECK(*mapped[0].mapped == screw);
  CHECK_FALSE(mapped[1].mapped.has_value());

  CHECK_THROWS_AS(localize({close}, g, -1.0), std::invalid_argument);
}

TEST_CASE("inspect finds the exact injected defects on a canonical case") {
  const SceneConfig config;
  const TrackGeometry g = standard_geometry(config);
  const PipelineConfig cfg;

  for (int c : {1, 4, 7, 11, 15}) {
    CAPTURE(c);
    const RenderedScene control =
        render_track(g, {}, trial_seed_for(config.master_seed, 1, 2), config);
    const RenderedScene variable = render_track(g, test_case(c).defects,
                                                trial_seed_for(config.master_seed, c, 2), config);
    const InspectionReport report = inspect(control.image, variable.image, g, cfg);

    REQUIRE(report.verdict.has_value());
    CHECK(*report.verdict == (c == 1 ? Verdict::Safe : Verdict::NotSafe));

    std::set<std::string> want;
    for (const auto& id : test_case(c).defects) want.insert(format_component_label(id));
    CHECK(report.defect_labels == want);

    // All six stages ran and reported success.
    REQUIRE(report.step_log.size() == 6);
    const char* names[] = {"acquire", "preprocess", "extract_features",
                           "segment", "present", "decide"};
    for (size_t i = 0; i < 6; ++i) {
      CHECK(report.step_log[i].name == names[i]);
      CHECK(report.step_log[i].ok);
    }
  }
}

TEST_CASE("inspect survives bad input with a failed step instead of a throw") {
  const SceneConfig config;
  const TrackGeometry g = standard_geometry(config);
  const InspectionReport report = inspect(Image(8, 8), Image(9, 8), g, PipelineConfig{});
  CHECK_FALSE(report.verdict.has_value());
  REQUIRE(!report.step_log.empty());
  CHECK(report.step_log.back().name == "acquire");
  CHECK_FALSE(report.step_log.back().ok);

  const auto lines = format_text_report(report);
  REQUIRE(lines.size() == 8);
  CHECK(lines[7].find("INSPECTION FAILED") != std::string::npos);
}

TEST_CASE("the text report prints the eight canonical lines") {
  InspectionReport report;
  report.control_name = "01_F_T1";
  report.variable_name = "04_F_T1";
  report.verdict = Verdict::NotSafe;

  const auto lines = format_text_report(report);
  const std::vector<std::string> want = {
      "Acquiring Image 1 (Control): 01_F_T1",
      "Acquiring Image 2 (Variable): 04_F_T1",
      "Pre-processing Image 1 (Control): 01_F_T1",
      "Pre-processing Image 2 (Variable): 04_F_T1",
      "Extract Image Features (Control vs. Variable): 01_F_T1 vs. 04_F_T1",
      "Detection/segmentation of POI (Control vs. Variable): 01_F_T1 vs. 04_F_T1",
      "Presenting Visual Track Problems (Control vs. Variable): 01_F_T1 vs. 04_F_T1",
      ">> Prediction of Final Decision: DANGER: ***TRACK IS NOT SAFE!***",
  };
  CHECK(lines == want);

  report.verdict = Verdict::Safe;
  CHECK(format_text_report(report)[7] == ">> Prediction of Final Decision: TRACK IS SAFE");
}

TEST_CASE("report JSON carries verdict, offset, labels and blobs") {
  InspectionReport report;
  report.control_name = "a";
  report.variable_name = "b";
  report.verdict = Verdict::NotSafe;
  report.offset_dx = 2;
  report.offset_dy = -1;
  DefectBlob blob;
  blob.box = {10, 20, 5, 6};
  blob.area = 22;
  blob.centroid_x = 12.5;
  blob.centroid_y = 22.5;
  blob.mapped = parse_component_label("3B");
  report.blobs.push_back(blob);
  report.defect_labels.insert("3B");

  const nlohmann::json j = report_to_json(report);
  CHECK(j.at("verdict") == "not_safe");
  CHECK(j.at("offset").at("dx") == 2);
  CHECK(j.at("offset").at("dy") == -1);
  CHECK(j.at("defect_labels") == nlohmann::json::array({"3B"}));
  CHECK(j.at("blobs").size() == 1);
  CHECK(j.at("blobs")[0].at("area") == 22);
  CHECK(j.at("blobs")[0].at("box").at("w") == 5);

  report.verdict.reset();
  CHECK(report_to_json(report).at("verdict").is_null());
}

TEST_CASE("overlay marks blob boxes in red in variable-frame coordinates") {
  Image control(20, 20, 80), variable(20, 20, 80);
  InspectionReport report;
  report.offset_dx = 1;
  report.offset_dy = 0;
  DefectBlob blob;
  blob.box = {4, 5, 3, 3};
  report.blobs.push_back(blob);

  const RgbImage overlay = render_overlay(control, variable, report);
  // Box corner lands at (5, 5) after applying the offset.
  const uint8_t* corner = overlay.px(5, 5);
  CHECK(corner[0] == 255);
  CHECK(corner[1] == 0);
  CHECK(corner[2] == 0);
  // Interior pixels keep the grayscale promotion.
  const uint8_t* inside = overlay.px(6, 6);
  CHECK(inside[0] == 80);
  CHECK(inside[1] == 80);
  CHECK(inside[2] == 80);

  const RgbImage clean = render_overlay(control, variable, InspectionReport{});
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      const uint8_t* p = clean.px(x, y);
      CHECK(p[0] == 80);
      CHECK(p[1] == 80);
      CHECK(p[2] == 80);
    }
}
