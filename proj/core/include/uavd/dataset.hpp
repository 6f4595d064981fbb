#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uavd/schema.hpp"
#include "uavd/templates.hpp"

namespace uavd {

/// Fixed output for instructions the target SDK cannot serve.
inline constexpr std::string_view kRefusalLine = "Current SDK does not support this function";

struct GenConfig {
  int min_calls = 3;
  int max_calls = 5;
  /// Numeric literals are drawn from `grid_points + 1` evenly spaced values in [min, max].
  int grid_points = 10;
  /// Range used for numeric params that declare no bounds.
  double unbounded_lo = 1.0;
  double unbounded_hi = 10.0;
  double optional_param_prob = 0.5;
  std::vector<std::string> string_pool = {"wind", "battery", "survey", "inspect"};
  bool reject_alternative = true;

  int per_sdk = 200;
  double counterfactual_ratio = 0.2;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 42;
};

struct Binding {
  std::string name;
  Literal value;
  bool operator==(const Binding&) const = default;
};

struct PlannedCall {
  std::string function;
  std::vector<Binding> args;
  bool operator==(const PlannedCall&) const = default;
};

struct TaskPlan {
  std::string sdk_id;
  std::vector<PlannedCall> calls;
  int seed_index = 0;
  bool operator==(const TaskPlan&) const = default;
};

enum class Stage { kParse, kSelectSdk, kRejectAlternative, kSequence, kValidateParams, kRefuse };

std::string_view to_string(Stage stage);
std::optional<Stage> stage_from_string(std::string_view s);

struct ReasoningStep {
  Stage stage;
  std::string text;
  bool operator==(const ReasoningStep&) const = default;
};

enum class Label { kFeasible, kInfeasible };
std::string_view to_string(Label label);

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split split);
std::optional<Split> split_from_string(std::string_view s);

struct Triplet {
  std::string instruction;
  std::string prompt_context;
  std::vector<ReasoningStep> think;
  std::string code;
  std::string sdk_id;
  Label label = Label::kFeasible;
  std::optional<std::string> requested_capability;
  int seed_index = 0;
  bool operator==(const Triplet&) const = default;
};

struct Corpus {
  std::vector<Triplet> samples;
  std::vector<Split> split;
  GenConfig gen_config;
  std::uint64_t seed = 0;

  std::vector<std::size_t> indices(Split which) const;
};

/// `SDK:`/`FUNCTIONS:`/`CONSTRAINTS:` header shared by training and inference.
std::string render_prompt_context(const SdkSchema& schema);

/// Reasoning rendered one `stage: text` line per step.
std::string render_think(const std::vector<ReasoningStep>& think);

TaskPlan sample_task(const SdkSchema& schema, int seed_index, const GenConfig& cfg);

/// `alternatives`, when given, supplies candidate SDKs for the optional
/// reject_alternative reasoning step.
Triplet render_triplet(const TaskPlan& plan, const SdkSchema& schema, const TemplateSet& templates,
                       const GenConfig& cfg = {}, const std::vector<SdkSchema>* alternatives = nullptr);

Triplet make_counterfactual(const SdkSchema& schema, const std::vector<SdkSchema>& all_schemas, int seed_index,
                            const GenConfig& cfg, const TemplateSet& templates = TemplateSet::defaults());

Corpus build_corpus(const std::vector<SdkSchema>& schemas, const GenConfig& cfg,
                    const TemplateSet& templates = TemplateSet::defaults());

/// Number of infeasible samples generated for one SDK under `cfg`.
int counterfactual_count(const GenConfig& cfg);

// JSON Lines corpus I/O, one triplet per line in canonical sample order.
std::string triplet_to_json(const Triplet& t, Split split);
std::string corpus_to_jsonl(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::string& path);
Corpus read_corpus(const std::string& path);
Corpus parse_corpus_jsonl(std::string_view text);

}  // namespace uavd
