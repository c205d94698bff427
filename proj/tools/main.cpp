// trackinspect: generate synthetic track footage, inspect frame pairs,
// train/evaluate the safe-vs-defective classifier, and aggregate batch
// metrics.  Exit codes: 0 success (inspect: track safe), 3 inspect found a
// defect, 2 usage error, 1 runtime error.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <variant>

#include "trackinspect/cnn/data.hpp"
#include "trackinspect/cnn/serialize.hpp"
#include "trackinspect/cnn/train.hpp"
#include "trackinspect/config.hpp"
#include "trackinspect/experiment.hpp"
#include "trackinspect/metrics.hpp"
#include "trackinspect/scene.hpp"

namespace ti = trackinspect;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
}

// defaults < config file < flags; a --seed flag pins every seed in one go.
ti::AppConfig resolve_config(const GlobalArgs& g, const ti::ConfigValues& flag_values) {
  ti::AppConfig cfg;
  if (!g.config_path.empty()) ti::apply_config(cfg, ti::load_config_file(g.config_path));
  if (g.seed) {
    cfg.scene.master_seed = *g.seed;
    cfg.dataset.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  ti::apply_config(cfg, flag_values);
  return cfg;
}

void echo_config(const std::string& out_dir, const ti::AppConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  write_text(out_dir + "/config.ini", ti::config_echo(cfg));
}

std::vector<int> default_cases() {
  std::vector<int> v(15);
  for (int i = 0; i < 15; ++i) v[static_cast<size_t>(i)] = i + 1;
  return v;
}

std::vector<int> default_trials() { return {1, 2, 3, 4, 5}; }

ti::PairingPolicy parse_pairing(const std::string& s) {
  if (s == "same") return ti::PairingPolicy::SameTrial;
  if (s == "shifted") return ti::PairingPolicy::ShiftedTrial;
  throw CLI::ValidationError("--pairing", "expected 'same' or 'shifted'");
}

// "1:60" (inclusive range) or "5,10,20"
std::vector<int> parse_thresholds(const std::string& s) {
  std::vector<int> out;
  const size_t colon = s.find(':');
  if (colon != std::string::npos) {
    const int lo = std::stoi(s.substr(0, colon));
    const int hi = std::stoi(s.substr(colon + 1));
    if (lo < 1 || hi > 254 || lo > hi)
      throw CLI::ValidationError("--thresholds", "range must satisfy 1 <= lo <= hi <= 254");
    for (int t = lo; t <= hi; ++t) out.push_back(t);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw CLI::ValidationError("--thresholds", "no thresholds given");
  for (int t : out)
    if (t < 1 || t > 254) throw CLI::ValidationError("--thresholds", "values must be in 1..254");
  return out;
}

int exit_code_for(const ti::InspectionReport& report) {
  if (!report.verdict) return 1;
  return *report.verdict == ti::Verdict::NotSafe ? 3 : 0;
}

// ---- generate ----------------------------------------------------------------

int cmd_generate(const GlobalArgs& g, const ti::ConfigValues& flag_values, bool experiment,
                 bool dataset, const std::vector<int>& cases, const std::vector<int>& trials) {
  if (experiment == dataset) {
    std::cerr << "generate: pass exactly one of --experiment / --dataset\n";
    return 2;
  }
  if (g.out.empty()) {
    std::cerr << "generate: --out is required\n";
    return 2;
  }
  const ti::AppConfig cfg = resolve_config(g, flag_values);
  echo_config(g.out, cfg);
  if (experiment) {
    const auto manifest = ti::generate_experiment(g.out, cases, trials, cfg.scene);
    if (!g.quiet)
      std::cout << "wrote " << manifest.files.size() << " frames + ground_truth.json to " << g.out
                << "\n";
  } else {
    const auto manifest = ti::build_cnn_dataset(g.out, cfg.dataset, cfg.scene);
    if (!g.quiet)
      std::cout << "wrote " << manifest.entries.size() << " images + manifest.json to " << g.out
                << "\n";
  }
  return 0;
}

// ---- inspect -------------------------------------------------------------------

int cmd_inspect(const GlobalArgs& g, const ti::ConfigValues& flag_values,
                const std::string& control_path, const std::string& variable_path) {
  const ti::AppConfig cfg = resolve_config(g, flag_values);
  const ti::Image control = ti::load_png_gray(control_path);
  const ti::Image variable = ti::load_png_gray(variable_path);
  const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);

  const std::string control_name =
      std::filesystem::path(control_path).filename().stem().string();
  const std::string variable_name =
      std::filesystem::path(variable_path).filename().stem().string();
  const ti::InspectionReport report =
      ti::inspect(control, variable, geometry, cfg.pipeline, control_name, variable_name);

  std::string text;
  for (const std::string& line : ti::format_text_report(report)) text += line + '\n';
  if (!g.quiet) std::cout << text;

  if (!g.out.empty()) {
    echo_config(g.out, cfg);
    write_text(g.out + "/report.txt", text);
    write_text(g.out + "/report.json", ti::report_to_json(report).dump(2) + "\n");
    ti::save_png_rgb(g.out + "/overlay.png", ti::render_overlay(control, variable, report));
  }
  return exit_code_for(report);
}

// ---- inspect-batch --------------------------------------------------------------

int cmd_inspect_batch(const GlobalArgs& g, const ti::ConfigValues& flag_values,
                      const std::string& dir, const std::string& pairing,
                      std::vector<int> cases, std::vector<int> trials, bool overlays) {
  if (cases.empty() || trials.empty()) {
    std::cerr << "inspect-batch: empty case/trial filter\n";
    return 2;
  }
  if (g.out.empty()) {
    std::cerr << "inspect-batch: --out is required\n";
    return 2;
  }
  const ti::AppConfig cfg = resolve_config(g, flag_values);
  const ti::ExperimentData data = ti::load_experiment(dir);
  const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
  ti::RunManifest manifest = ti::build_run_manifest(cases, trials, parse_pairing(pairing));

  // Run what exists; list what doesn't and flag the batch as partial.
  std::vector<std::string> missing;
  ti::RunManifest present;
  present.policy = manifest.policy;
  for (const ti::RunPairSpec& pair : manifest.pairs) {
    const std::string c = ti::format_footage_name(pair.control);
    const std::string v = ti::format_footage_name(pair.variable);
    if (!data.images.count(c)) missing.push_back(c);
    if (!data.images.count(v)) missing.push_back(v);
    if (data.images.count(c) && data.images.count(v)) present.pairs.push_back(pair);
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  for (const std::string& name : missing)
    std::cerr << "inspect-batch: missing frame " << name << ".png in " << dir << "\n";
  if (present.pairs.empty()) {
    std::cerr << "inspect-batch: nothing to run\n";
    return 1;
  }

  echo_config(g.out, cfg);
  const ti::ExperimentSummary summary =
      ti::run_experiment(data, present, geometry, cfg.pipeline, g.out, overlays);
  if (!g.quiet) {
    std::cout << "runs: " << summary.runs.size() << "\n"
              << "verdicts correct: " << summary.verdicts_correct << "/" << summary.runs.size()
              << "\n"
              << "label sets exact: " << summary.labels_exact_count << "/" << summary.runs.size()
              << "\n";
    if (summary.tpr) std::cout << "component tpr: " << *summary.tpr << "\n";
    if (summary.fpr) std::cout << "component fpr: " << *summary.fpr << "\n";
    std::cout << "score mean: " << summary.score_mean << "  stddev: " << summary.score_stddev
              << "\nacceptance: " << summary.acceptance_percent << "%\n";
  }
  return missing.empty() ? 0 : 1;
}

// ---- train / predict / evaluate ---------------------------------------------------

int cmd_train(const GlobalArgs& g, const ti::ConfigValues& flag_values, const std::string& data_dir,
              const std::string& precision, const std::string& transfer_from) {
  if (g.out.empty()) {
    std::cerr << "train: --out is required\n";
    return 2;
  }
  if (precision != "float" && precision != "double") {
    std::cerr << "train: --precision must be float or double\n";
    return 2;
  }
  const ti::AppConfig cfg = resolve_config(g, flag_values);
  const ti::cnn::LoadedDataset train_set = ti::cnn::load_split(data_dir, "train");
  const ti::cnn::LoadedDataset valid_set = ti::cnn::load_split(data_dir, "valid");
  if (train_set.width != train_set.height)
    throw std::runtime_error("train: expected square images, got " +
                             std::to_string(train_set.width) + "x" +
                             std::to_string(train_set.height));
  echo_config(g.out, cfg);
  std::ostream* log = g.quiet ? nullptr : &std::cout;

  const auto run = [&](auto model) {
    ti::cnn::History history;
    if (transfer_from.empty()) {
      history = ti::cnn::train(model, train_set, valid_set, cfg.train, log);
    } else {
      history = ti::cnn::freeze_and_retrain(model, train_set, valid_set, cfg.train, log);
    }
    ti::cnn::save_model(g.out + "/model.bin", model);
    ti::cnn::write_history_csv(g.out + "/history.csv", history);
  };

  if (!transfer_from.empty()) {
    ti::cnn::LoadedModel loaded = ti::cnn::load_model(transfer_from);
    std::visit([&](auto& m) { run(std::move(m)); }, loaded);
  } else if (precision == "double") {
    run(ti::cnn::make_default_model<double>(train_set.width, cfg.train.seed, cfg.train_dropout));
  } else {
    run(ti::cnn::make_default_model<float>(train_set.width, cfg.train.seed, cfg.train_dropout));
  }
  if (!g.quiet) std::cout << "wrote " << g.out << "/model.bin and history.csv\n";
  return 0;
}

int cmd_predict(const GlobalArgs& g, const std::string& model_path, const std::string& image_path) {
  ti::cnn::LoadedModel loaded = ti::cnn::load_model(model_path);
  const ti::Image img = ti::load_png_gray(image_path);
  return std::visit(
      [&](const auto& model) {
        using T = typename std::decay_t<decltype(model)>::value_type;
        if (img.width != model.input_w || img.height != model.input_h)
          throw std::runtime_error("predict: image is " + std::to_string(img.width) + "x" +
                                   std::to_string(img.height) + " but the model expects " +
                                   std::to_string(model.input_w) + "x" +
                                   std::to_string(model.input_h));
        const ti::cnn::Tensor<T> x = ti::cnn::batch_tensor<T>({img});
        const ti::cnn::Tensor<T> p = ti::cnn::forward(model, x, ti::cnn::PassMode::Eval);
        const int cls = ti::cnn::predict_classes(model, x)[0];
        const char* name = cls == 1 ? "defective" : "safe";
        if (!g.quiet) {
          std::cout << name;
          std::cout << " p[safe]=" << static_cast<double>(p.at(0, 0, 0, 0))
                    << " p[defective]=" << static_cast<double>(p.at(0, 0, 0, 1)) << "\n";
        }
        return 0;
      },
      loaded);
}

int cmd_evaluate(const GlobalArgs& g, const std::string& model_path, const std::string& data_dir,
                 const std::string& split) {
  ti::cnn::LoadedModel loaded = ti::cnn::load_model(model_path);
  const ti::cnn::LoadedDataset ds = ti::cnn::load_split(data_dir, split);
  return std::visit(
      [&](const auto& model) {
        using T = typename std::decay_t<decltype(model)>::value_type;
        const ti::cnn::EvalResult r = ti::cnn::evaluate(model, ds);
        // 2-class confusion with "defective" as the positive class
        ti::ConfusionMatrix cm;
        const ti::cnn::Tensor<T> x = ti::cnn::batch_tensor<T>(
            ds, [&] {
              std::vector<size_t> all(ds.size());
              for (size_t i = 0; i < all.size(); ++i) all[i] = i;
              return all;
            }());
        const std::vector<int> pred = ti::cnn::predict_classes(model, x);
        for (size_t i = 0; i < ds.size(); ++i) {
          const bool actual = ds.labels[i] == 1, flagged = pred[i] == 1;
          if (actual && flagged) ++cm.tp;
          else if (actual) ++cm.fn;
          else if (flagged) ++cm.fp;
          else ++cm.tn;
        }
        if (!g.quiet)
          std::cout << "split: " << split << "\nloss: " << r.loss << "\naccuracy: " << r.accuracy
                    << "\ntp " << cm.tp << " fn " << cm.fn << " fp " << cm.fp << " tn " << cm.tn
                    << "\n";
        if (!g.out.empty()) {
          std::filesystem::create_directories(g.out);
          write_text(g.out + "/confusion.csv", ti::confusion_csv({{split, cm}}));
        }
        return 0;
      },
      loaded);
}

// ---- roc / report -------------------------------------------------------------------

int cmd_roc(const GlobalArgs& g, const ti::ConfigValues& flag_values, const std::string& dir,
            const std::string& thresholds_text, const std::string& pairing) {
  if (g.out.empty()) {
    std::cerr << "roc: --out is required\n";
    return 2;
  }
  const std::vector<int> thresholds = parse_thresholds(thresholds_text);
  const ti::AppConfig cfg = resolve_config(g, flag_values);
  const ti::ExperimentData data = ti::load_experiment(dir);
  const ti::TrackGeometry geometry = ti::standard_geometry(cfg.scene);
  const ti::RunManifest all =
      ti::build_run_manifest(default_cases(), default_trials(), parse_pairing(pairing));
  // Sweep whatever frames the directory actually holds.
  ti::RunManifest manifest;
  manifest.policy = all.policy;
  for (const ti::RunPairSpec& pair : all.pairs)
    if (data.images.count(ti::format_footage_name(pair.control)) &&
        data.images.count(ti::format_footage_name(pair.variable)))
      manifest.pairs.push_back(pair);
  if (manifest.pairs.empty()) {
    std::cerr << "roc: no usable control/variable pairs in " << dir << "\n";
    return 1;
  }
  const ti::RocCurve curve = ti::roc_sweep(data, manifest, geometry, cfg.pipeline, thresholds);
  echo_config(g.out, cfg);
  write_text(g.out + "/roc.csv", ti::roc_csv(curve));
  if (!g.quiet) {
    std::cout << "swept " << curve.points.size() << " thresholds; curve is monotone\n";
    for (const ti::RocPoint& p : curve.points)
      if (p.threshold == 10)
        std::cout << "T=10: tpr " << p.tpr << " fpr " << p.fpr << "\n";
  }
  return 0;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

// Rebuilds stats.csv and histogram.csv from a batch run's likert.csv.
int cmd_report(const GlobalArgs& g, const std::string& dir) {
  const auto rows = read_csv(dir + "/likert.csv");
  if (rows.size() < 2 || rows[0].empty() || rows[0][0] != "run")
    throw std::runtime_error(dir + "/likert.csv: not a batch-run score table");
  const size_t score_col = rows[0].size() - 1;
  std::map<int, std::vector<double>> case_scores;
  std::vector<double> all_scores;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw std::runtime_error(dir + "/likert.csv: ragged row " + std::to_string(i + 1));
    const ti::FootageId id = ti::parse_footage_name(rows[i][0]);
    const double score = std::stod(rows[i][score_col]);
    case_scores[id.case_number].push_back(score);
    all_scores.push_back(score);
  }

  std::vector<std::vector<double>> per_case;
  per_case.reserve(case_scores.size());
  for (auto& [case_number, scores] : case_scores) per_case.push_back(std::move(scores));
  const double acceptance = ti::overall_acceptance(per_case);
  const double score_mean = ti::mean(all_scores);
  const double score_stddev = ti::population_stddev(all_scores);
  const std::array<int, 5> bins = ti::score_histogram(all_scores);

  const std::string out_dir = g.out.empty() ? dir : g.out;
  std::filesystem::create_directories(out_dir);
  write_text(out_dir + "/stats.csv",
             ti::stats_csv({{"runs", static_cast<double>(all_scores.size())},
                            {"score_mean", score_mean},
                            {"score_stddev", score_stddev},
                            {"acceptance_percent", acceptance}}));
  write_text(out_dir + "/histogram.csv", ti::histogram_csv(bins));
  if (!g.quiet)
    std::cout << "runs: " << all_scores.size() << "\nscore mean: " << score_mean
              << "  stddev: " << score_stddev << "\nacceptance: " << acceptance << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic rail-track inspection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key = value settings file");
  uint64_t seed_value = 0;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_value, "master seed for scene/dataset/training");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  // generate
  auto* generate = app.add_subcommand("generate", "render an experiment or a training dataset");
  bool gen_experiment = false, gen_dataset = false;
  std::vector<int> cases = default_cases(), trials = default_trials();
  std::string kinds, image_size, counts;
  generate->add_flag("--experiment", gen_experiment, "15-case frame set + ground truth");
  generate->add_flag("--dataset", gen_dataset, "train/valid/test classifier images");
  generate->add_option("--cases", cases, "experiment cases (default 1..15)")
      ->check(CLI::Range(1, 15));
  generate->add_option("--trials", trials, "trials per case (default 1..5)")
      ->check(CLI::Range(1, 5));
  generate->add_option("--kinds", kinds, "dataset defect kinds, comma list");
  generate->add_option("--image-size", image_size, "dataset image edge length");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "compare a variable frame against a control");
  std::string control_path, variable_path, threshold;
  inspect->add_option("--control", control_path, "reference frame PNG")->required();
  inspect->add_option("--variable", variable_path, "frame under test PNG")->required();
  inspect->add_option("--threshold", threshold, "difference threshold override");

  // inspect-batch
  auto* batch = app.add_subcommand("inspect-batch", "run every case/trial pair of an experiment");
  std::string batch_dir, pairing = "same";
  bool no_overlays = false;
  std::vector<int> batch_cases = default_cases(), batch_trials = default_trials();
  batch->add_option("--dir", batch_dir, "experiment directory")->required();
  batch->add_option("--pairing", pairing, "control pairing: same|shifted");
  batch->add_option("--cases", batch_cases, "case filter")->check(CLI::Range(1, 15));
  batch->add_option("--trials", batch_trials, "trial filter")->check(CLI::Range(1, 5));
  batch->add_option("--threshold", threshold, "difference threshold override");
  batch->add_flag("--no-overlays", no_overlays, "skip overlay PNGs");

  // train
  auto* train = app.add_subcommand("train", "fit the safe/defective classifier");
  std::string data_dir, epochs, batch_size, dropout, precision = "float", transfer;
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--batch", batch_size, "mini-batch size");
  train->add_option("--dropout", dropout, "head dropout rate");
  train->add_option("--precision", precision, "float|double");
  train->add_option("--transfer", transfer, "existing model: freeze features, refit the head");

  // predict
  auto* predict = app.add_subcommand("predict", "classify one image with a trained model");
  std::string model_path, image_path;
  predict->add_option("--model", model_path, "model binary")->required();
  predict->add_option("--image", image_path, "input PNG")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a model on a dataset split");
  std::string eval_model, eval_data, split = "test";
  evaluate->add_option("--model", eval_model, "model binary")->required();
  evaluate->add_option("--data", eval_data, "dataset directory")->required();
  evaluate->add_option("--split", split, "train|valid|test");

  // roc
  auto* roc = app.add_subcommand("roc", "sweep difference thresholds over an experiment");
  std::string roc_dir, thresholds = "1:60", roc_pairing = "same";
  roc->add_option("--dir", roc_dir, "experiment directory")->required();
  roc->add_option("--thresholds", thresholds, "lo:hi range or comma list");
  roc->add_option("--pairing", roc_pairing, "control pairing: same|shifted");

  // report
  auto* report = app.add_subcommand("report", "re-aggregate stats from a batch-run directory");
  std::string report_dir;
  report->add_option("--dir", report_dir, "inspect-batch output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    ti::ConfigValues flags;
    if (!threshold.empty()) flags["pipeline.diff_threshold"] = threshold;
    if (!kinds.empty()) flags["dataset.kinds"] = kinds;
    if (!image_size.empty()) flags["dataset.image_size"] = image_size;
    if (!epochs.empty()) flags["train.epochs"] = epochs;
    if (!batch_size.empty()) flags["train.batch_size"] = batch_size;
    if (!dropout.empty()) flags["train.dropout"] = dropout;

    if (generate->parsed()) return cmd_generate(g, flags, gen_experiment, gen_dataset, cases, trials);
    if (inspect->parsed()) return cmd_inspect(g, flags, control_path, variable_path);
    if (batch->parsed())
      return cmd_inspect_batch(g, flags, batch_dir, pairing, batch_cases, batch_trials,
                               !no_overlays);
    if (train->parsed()) return cmd_train(g, flags, data_dir, precision, transfer);
    if (predict->parsed()) return cmd_predict(g, model_path, image_path);
    if (evaluate->parsed()) return cmd_evaluate(g, eval_model, eval_data, split);
    if (roc->parsed()) return cmd_roc(g, flags, roc_dir, thresholds, roc_pairing);
    if (report->parsed()) return cmd_report(g, report_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
