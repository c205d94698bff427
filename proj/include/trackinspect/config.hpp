#pragma once
#include <map>
#include <string>

#include "trackinspect/cnn/train.hpp"
#include "trackinspect/dataset.hpp"
#include "trackinspect/pipeline.hpp"
#include "trackinspect/scene.hpp"

namespace trackinspect {

// Every tunable in one place, addressed by flat "section.key" names in a
// plain key = value file ('#' starts a comment).  Unknown keys and
// out-of-range values are errors, not warnings.
struct AppConfig {
  SceneConfig scene;
  PipelineConfig pipeline;
  DatasetSpec dataset;
  cnn::TrainConfig train;
  double train_dropout = 0.0;  // dropout rate of the classifier head
};

using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config_text(const std::string& text);
ConfigValues load_config_file(const std::string& path);

// Applies the given keys on top of `config`; throws std::invalid_argument
// naming the offending key on unknown names or unparseable/out-of-range
// values.
void apply_config(AppConfig& config, const ConfigValues& values);

// Canonical round-trippable dump of every key (the file written next to
// generated outputs so a run can be reproduced).
std::string config_echo(const AppConfig& config);

}  // namespace trackinspect
