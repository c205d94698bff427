// pybind11 surface over the core library: scene rendering, the reference
// comparison pipeline, experiment scoring, and classifier training.
#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "trackinspect/cases.hpp"
#include "trackinspect/cnn/data.hpp"
#include "trackinspect/cnn/model.hpp"
#include "trackinspect/cnn/serialize.hpp"
#include "trackinspect/cnn/train.hpp"
#include "trackinspect/config.hpp"
#include "trackinspect/dataset.hpp"
#include "trackinspect/experiment.hpp"
#include "trackinspect/footage.hpp"
#include "trackinspect/image.hpp"
#include "trackinspect/labels.hpp"
#include "trackinspect/metrics.hpp"
#include "trackinspect/pipeline.hpp"
#include "trackinspect/scene.hpp"

namespace py = pybind11;
namespace ti = trackinspect;
namespace fs = std::filesystem;

namespace {

ti::AppConfig config_from_dict(const py::dict& overrides) {
  ti::AppConfig cfg;
  ti::ConfigValues values;
  for (auto item : overrides) {
    const std::string key = py::cast<std::string>(py::str(item.first));
    py::object v = py::reinterpret_borrow<py::object>(item.second);
    if (py::isinstance<py::bool_>(v)) {
      values[key] = py::cast<bool>(v) ? "true" : "false";
    } else {
      values[key] = py::cast<std::string>(py::str(v));
    }
  }
  ti::apply_config(cfg, values);
  return cfg;
}

ti::Image image_from_array(const py::object& obj) {
  auto a = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!a) throw std::invalid_argument("image: expected a file path or a 2-D uint8 array");
  if (a.ndim() != 2)
    throw std::invalid_argument("image: expected a 2-D (height, width) array, got " +
                                std::to_string(a.ndim()) + " dimensions");
  ti::Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data.data(), a.data(), img.data.size());
  return img;
}

ti::Image image_from_object(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return ti::load_png_gray(py::cast<std::string>(obj));
  return image_from_array(obj);
}

py::array_t<uint8_t> array_from_image(const ti::Image& img) {
  py::array_t<uint8_t> a({img.height, img.width});
  std::memcpy(a.mutable_data(), img.data.data(), img.data.size());
  return a;
}

py::list labels_to_list(const ti::DefectSet& defects) {
  py::list out;
  for (const auto& id : defects) out.append(ti::format_component_label(id));
  return out;
}

py::list labels_to_list(const std::set<std::string>& labels) {
  py::list out;
  for (const auto& label : labels) out.append(label);
  return out;
}

py::dict report_to_pydict(const ti::InspectionReport& r) {
  py::dict d;
  d["control"] = r.control_name;
  d["variable"] = r.variable_name;
  if (r.verdict) {
    d["verdict"] = *r.verdict == ti::Verdict::Safe ? "safe" : "not_safe";
    d["safe"] = *r.verdict == ti::Verdict::Safe;
  } else {
    d["verdict"] = py::none();
    d["safe"] = py::none();
  }
  d["offset"] = py::make_tuple(r.offset_dx, r.offset_dy);
  d["labels"] = labels_to_list(r.defect_labels);

  py::list blobs;
  for (const auto& b : r.blobs) {
    py::dict bd;
    bd["box"] = py::make_tuple(b.box.x, b.box.y, b.box.w, b.box.h);
    bd["area"] = b.area;
    bd["centroid"] = py::make_tuple(b.centroid_x, b.centroid_y);
    bd["direction"] = b.direction == ti::BlobDirection::MissingInTest ? "missing" : "extra";
    bd["label"] = b.mapped ? py::object(py::str(ti::format_component_label(*b.mapped)))
                           : py::object(py::none());
    blobs.append(bd);
  }
  d["blobs"] = blobs;

  py::list steps;
  for (const auto& s : r.step_log) {
    py::dict sd;
    sd["name"] = s.name;
    sd["ok"] = s.ok;
    sd["detail"] = s.detail;
    steps.append(sd);
  }
  d["steps"] = steps;
  d["lines"] = ti::format_text_report(r);
  return d;
}

ti::PairingPolicy pairing_from_string(const std::string& s) {
  if (s == "same") return ti::PairingPolicy::SameTrial;
  if (s == "shifted") return ti::PairingPolicy::ShiftedTrial;
  throw std::invalid_argument("pairing must be \"same\" or \"shifted\", got \"" + s + "\"");
}

// Case/trial lists default to whatever the experiment directory holds.
void fill_from_experiment(const ti::ExperimentData& data, std::vector<int>& cases,
                          std::vector<int>& trials) {
  if (!cases.empty() && !trials.empty()) return;
  std::set<int> cs, ts;
  for (const auto& [name, img] : data.images) {
    const ti::FootageId id = ti::parse_footage_name(name);
    cs.insert(id.case_number);
    ts.insert(id.trial);
  }
  if (cases.empty()) cases.assign(cs.begin(), cs.end());
  if (trials.empty()) trials.assign(ts.begin(), ts.end());
}

py::dict summary_to_pydict(const ti::ExperimentSummary& summary) {
  py::dict d;
  d["runs"] = summary.runs.size();
  d["verdicts_correct"] = summary.verdicts_correct;
  d["labels_exact"] = summary.labels_exact_count;
  d["score_mean"] = summary.score_mean;
  d["score_stddev"] = summary.score_stddev;
  d["acceptance_percent"] = summary.acceptance_percent;
  d["tpr"] = summary.tpr ? py::object(py::float_(*summary.tpr)) : py::object(py::none());
  d["fpr"] = summary.fpr ? py::object(py::float_(*summary.fpr)) : py::object(py::none());
  py::list hist;
  for (int count : summary.histogram) hist.append(count);
  d["histogram"] = hist;
  py::list runs;
  for (const auto& run : summary.runs) {
    py::dict rd;
    rd["name"] = ti::format_footage_name(run.pair.variable);
    rd["control"] = ti::format_footage_name(run.pair.control);
    rd["verdict_correct"] = run.verdict_correct;
    rd["labels_exact"] = run.labels_exact;
    rd["score"] = run.likert.value;
    rd["expected"] = labels_to_list(run.pair.expected);
    rd["reported"] = labels_to_list(run.report.defect_labels);
    runs.append(rd);
  }
  d["run_results"] = runs;
  return d;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

py::list history_to_pylist(const ti::cnn::History& history) {
  py::list rows;
  for (size_t i = 0; i < history.epochs.size(); ++i) {
    const auto& e = history.epochs[i];
    py::dict row;
    row["epoch"] = i + 1;
    row["train_loss"] = e.train_loss;
    row["train_acc"] = e.train_acc;
    row["val_loss"] = e.val_loss;
    row["val_acc"] = e.val_acc;
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synthetic rail-track scenes, reference-comparison defect inspection, "
            "and a small from-scratch CNN classifier.";
  m.attr("__version__") = "0.1.0";

  m.def("default_config", []() {
    py::dict d;
    std::istringstream in(ti::config_echo(ti::AppConfig{}));
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      d[py::str(line.substr(0, eq))] = line.substr(eq + 3);
    }
    return d;
  }, "All configuration keys with their default values, as strings.");

  m.def("component_labels", []() {
    py::list out;
    for (const auto& id : ti::inventory()) out.append(ti::format_component_label(id));
    return out;
  }, "The 49 inventory component labels in canonical order.");

  m.def("case_description", [](int case_number) {
    return ti::test_case(case_number).description;
  }, py::arg("case_number"));

  m.def("case_defects", [](int case_number) {
    return labels_to_list(ti::test_case(case_number).defects);
  }, py::arg("case_number"),
  "Component labels removed from the track in the given canonical case (1..15).");

  m.def("render_frame",
        [](int case_number, int trial, const py::dict& config) {
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
          const ti::DefectSet& defects = ti::test_case(case_number).defects;
          const uint64_t seed = ti::trial_seed_for(cfg.scene.master_seed, case_number, trial);
          const ti::RenderedScene scene = ti::render_track(geometry, defects, seed, cfg.scene);
          return py::make_tuple(array_from_image(scene.image),
                                labels_to_list(scene.ground_truth));
        },
        py::arg("case_number"), py::arg("trial") = 1, py::arg("config") = py::dict(),
        "Render one trial frame of a canonical case; returns (image, defect_labels).");

  m.def("generate_experiment",
        [](const std::string& out_dir, std::vector<int> cases, std::vector<int> trials,
           const py::dict& config) {
          const ti::AppConfig cfg = config_from_dict(config);
          if (cases.empty()) for (int c = 1; c <= 15; ++c) cases.push_back(c);
          if (trials.empty()) for (int t = 1; t <= 5; ++t) trials.push_back(t);
          const ti::ExperimentManifest manifest =
              ti::generate_experiment(out_dir, cases, trials, cfg.scene);
          write_text_file(fs::path(out_dir) / "config.ini", ti::config_echo(cfg));
          py::dict d;
          d["files"] = manifest.files;
          py::dict gt;
          for (const auto& [name, defects] : manifest.ground_truth)
            gt[py::str(name)] = labels_to_list(defects);
          d["ground_truth"] = gt;
          return d;
        },
        py::arg("out_dir"), py::arg("cases") = std::vector<int>{},
        py::arg("trials") = std::vector<int>{}, py::arg("config") = py::dict(),
        "Write CC_F_Tt.png frames plus ground_truth.json; returns the manifest.");

  m.def("inspect",
        [](const py::object& control, const py::object& variable, const py::dict& config,
           const std::string& control_name, const std::string& variable_name) {
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::Image ref = image_from_object(control);
          const ti::Image test = image_from_object(variable);
          const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
          const ti::InspectionReport report =
              ti::inspect(ref, test, geometry, cfg.pipeline, control_name, variable_name);
          return report_to_pydict(report);
        },
        py::arg("control"), py::arg("variable"), py::arg("config") = py::dict(),
        py::arg("control_name") = "control", py::arg("variable_name") = "variable",
        "Compare a variable frame against an intact control frame.  Both "
        "arguments accept a PNG path or a 2-D uint8 array.");

  m.def("inspect_batch",
        [](const std::string& experiment_dir, const std::string& out_dir,
           const std::string& pairing, std::vector<int> cases, std::vector<int> trials,
           const py::dict& config, bool overlays) {
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::ExperimentData data = ti::load_experiment(experiment_dir);
          fill_from_experiment(data, cases, trials);
          const ti::RunManifest manifest =
              ti::build_run_manifest(cases, trials, pairing_from_string(pairing));
          const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
          const ti::ExperimentSummary summary =
              ti::run_experiment(data, manifest, geometry, cfg.pipeline, out_dir, overlays);
          if (!out_dir.empty())
            write_text_file(fs::path(out_dir) / "config.ini", ti::config_echo(cfg));
          return summary_to_pydict(summary);
        },
        py::arg("experiment_dir"), py::arg("out_dir") = "", py::arg("pairing") = "same",
        py::arg("cases") = std::vector<int>{}, py::arg("trials") = std::vector<int>{},
        py::arg("config") = py::dict(), py::arg("overlays") = true,
        "Score every control/variable pair of a generated experiment.  Cases and "
        "trials default to everything present in the directory.");

  m.def("roc",
        [](const std::string& experiment_dir, std::vector<int> thresholds,
           const std::string& pairing, const py::dict& config) {
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::ExperimentData data = ti::load_experiment(experiment_dir);
          if (thresholds.empty()) for (int t = 1; t <= 60; ++t) thresholds.push_back(t);
          std::vector<int> cases, trials;
          fill_from_experiment(data, cases, trials);
          const ti::RunManifest manifest =
              ti::build_run_manifest(cases, trials, pairing_from_string(pairing));
          const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
          const ti::RocCurve curve =
              ti::roc_sweep(data, manifest, geometry, cfg.pipeline, thresholds);
          py::list out;
          for (const auto& p : curve.points)
            out.append(py::make_tuple(p.threshold, p.tpr, p.fpr));
          return out;
        },
        py::arg("experiment_dir"), py::arg("thresholds") = std::vector<int>{},
        py::arg("pairing") = "same", py::arg("config") = py::dict(),
        "Component-level (threshold, tpr, fpr) sweep; thresholds default to 1..60.");

  m.def("build_dataset",
        [](const std::string& out_dir, const py::dict& config) {
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::DatasetManifest manifest =
              ti::build_cnn_dataset(out_dir, cfg.dataset, cfg.scene);
          write_text_file(fs::path(out_dir) / "config.ini", ti::config_echo(cfg));
          py::list entries;
          for (const auto& e : manifest.entries) {
            py::dict ed;
            ed["path"] = e.path;
            ed["defective"] = e.defective;
            ed["labels"] = labels_to_list(e.labels);
            entries.append(ed);
          }
          return entries;
        },
        py::arg("out_dir"), py::arg("config") = py::dict(),
        "Render a train/valid/test safe-vs-defective image dataset; returns the "
        "manifest entries.");

  m.def("train",
        [](const std::string& data_dir, const std::string& out_dir, const py::dict& config,
           const std::string& precision, const std::string& transfer) {
          if (precision != "float" && precision != "double")
            throw std::invalid_argument("precision must be \"float\" or \"double\"");
          const ti::AppConfig cfg = config_from_dict(config);
          const ti::cnn::LoadedDataset train_set = ti::cnn::load_split(data_dir, "train");
          const ti::cnn::LoadedDataset valid_set = ti::cnn::load_split(data_dir, "valid");
          if (train_set.width != train_set.height)
            throw std::runtime_error("train: expected square images, got " +
                                     std::to_string(train_set.width) + "x" +
                                     std::to_string(train_set.height));

          ti::cnn::History history;
          const auto run = [&](auto model) {
            if (transfer.empty()) {
              history = ti::cnn::train(model, train_set, valid_set, cfg.train);
            } else {
              history = ti::cnn::freeze_and_retrain(model, train_set, valid_set, cfg.train);
            }
            if (!out_dir.empty()) {
              fs::create_directories(out_dir);
              ti::cnn::save_model((fs::path(out_dir) / "model.bin").string(), model);
              ti::cnn::write_history_csv((fs::path(out_dir) / "history.csv").string(), history);
              write_text_file(fs::path(out_dir) / "config.ini", ti::config_echo(cfg));
            }
          };

          if (!transfer.empty()) {
            ti::cnn::LoadedModel loaded = ti::cnn::load_model(transfer);
            std::visit([&](auto& model) { run(std::move(model)); }, loaded);
          } else if (precision == "double") {
            run(ti::cnn::make_default_model<double>(train_set.width, cfg.train.seed,
                                                    cfg.train_dropout));
          } else {
            run(ti::cnn::make_default_model<float>(train_set.width, cfg.train.seed,
                                                   cfg.train_dropout));
          }
          return history_to_pylist(history);
        },
        py::arg("data_dir"), py::arg("out_dir") = "", py::arg("config") = py::dict(),
        py::arg("precision") = "float", py::arg("transfer") = "",
        "Train the classifier on a generated dataset; returns per-epoch stats and, "
        "when out_dir is given, writes model.bin / history.csv / config.ini.  Pass "
        "transfer=<model.bin> to freeze the feature stack and retrain the head.");

  m.def("predict",
        [](const std::string& model_path, const py::object& image) {
          ti::cnn::LoadedModel loaded = ti::cnn::load_model(model_path);
          const ti::Image img = image_from_object(image);
          return std::visit(
              [&](const auto& model) {
                using T = typename std::decay_t<decltype(model)>::value_type;
                if (img.width != model.input_w || img.height != model.input_h)
                  throw std::invalid_argument(
                      "predict: image is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + " but the model expects " +
                      std::to_string(model.input_w) + "x" + std::to_string(model.input_h));
                const ti::cnn::Tensor<T> x = ti::cnn::batch_tensor<T>({img});
                const ti::cnn::Tensor<T> p =
                    ti::cnn::forward(model, x, ti::cnn::PassMode::Eval);
                const int cls = ti::cnn::predict_classes(model, x)[0];
                py::dict d;
                d["label"] = cls == 1 ? "defective" : "safe";
                d["defective"] = cls == 1;
                d["p_safe"] = static_cast<double>(p.at(0, 0, 0, 0));
                d["p_defective"] = static_cast<double>(p.at(0, 0, 0, 1));
                return d;
              },
              loaded);
        },
        py::arg("model_path"), py::arg("image"),
        "Classify one image (PNG path or 2-D uint8 array) with a saved model.");

  m.def("evaluate",
        [](const std::string& model_path, const std::string& data_dir,
           const std::string& split) {
          ti::cnn::LoadedModel loaded = ti::cnn::load_model(model_path);
          const ti::cnn::LoadedDataset ds = ti::cnn::load_split(data_dir, split);
          return std::visit(
              [&](const auto& model) {
                using T = typename std::decay_t<decltype(model)>::value_type;
                const ti::cnn::EvalResult r = ti::cnn::evaluate(model, ds);
                std::vector<size_t> all(ds.size());
                for (size_t i = 0; i < all.size(); ++i) all[i] = i;
                const ti::cnn::Tensor<T> x = ti::cnn::batch_tensor<T>(ds, all);
                const std::vector<int> pred = ti::cnn::predict_classes(model, x);
                ti::ConfusionMatrix cm;
                for (size_t i = 0; i < ds.size(); ++i) {
                  const bool actual = ds.labels[i] == 1, flagged = pred[i] == 1;
                  if (actual && flagged) ++cm.tp;
                  else if (actual) ++cm.fn;
                  else if (flagged) ++cm.fp;
                  else ++cm.tn;
                }
                py::dict d;
                d["split"] = split;
                d["loss"] = r.loss;
                d["accuracy"] = r.accuracy;
                d["tp"] = cm.tp;
                d["fn"] = cm.fn;
                d["fp"] = cm.fp;
                d["tn"] = cm.tn;
                return d;
              },
              loaded);
        },
        py::arg("model_path"), py::arg("data_dir"), py::arg("split") = "test",
        "Loss, accuracy, and the safe/defective confusion counts on one split.");
}
