#pragma once

#include <string>

#include "uavd/bench.hpp"
#include "uavd/dataset.hpp"
#include "uavd/loss.hpp"

namespace uavd {

/// Settings for every pipeline command. The shipped `configs/default.json`
/// overrides the optimizer schedule and step counts; its keys mirror the CLI
/// flag names.
struct PipelineConfig {
  std::uint64_t seed = 42;
  GenConfig data_gen;
  DistillConfig train_teacher;
  DistillConfig distill;
  /// Context window = longest corpus sample + this slack, for both presets.
  int context_slack = 32;
  BenchOptions bench;
  int bench_prompts = 8;
  int gen_max_new = 256;
};

/// Parses a config document; unknown keys and ill-typed values throw ConfigError.
/// Keys absent from the document keep their built-in defaults.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);

}  // namespace uavd
