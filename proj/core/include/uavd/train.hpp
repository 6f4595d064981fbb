#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "uavd/dataset.hpp"
#include "uavd/loss.hpp"
#include "uavd/model.hpp"
#include "uavd/tokenizer.hpp"

namespace uavd {

struct StepRecord {
  long step = 0;
  LossBreakdown loss;
  double lr = 0;
  double grad_norm = 0;
  /// Filled every `probe_interval` steps and on the last step.
  std::optional<double> probe_accuracy;
};

struct TrainHistory {
  std::vector<StepRecord> steps;

  /// Trailing-window mean of the total loss ending at `step_index` (0-based).
  double smoothed_loss(std::size_t step_index, std::size_t window = 20) const;
};

struct AccuracyCount {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

/// Teacher-forced argmax accuracy over the supervised (response) region.
AccuracyCount token_accuracy(const ModelState& model, std::span<const EncodedSample> samples);

std::vector<EncodedSample> encode_split(const Tokenizer& tok, const Corpus& corpus, Split split);

/// Longest encoded sample in the corpus (all splits).
int longest_sample(const Tokenizer& tok, const Corpus& corpus);

/// Learned student->teacher width bridge for hidden-state alignment.
struct Projection {
  Mat<float> weight;  // [d_student x d_teacher]
};

/// Trains `model` in place. Without a teacher this is plain hard-label training
/// (alpha forced to 1, beta to 0). With a teacher, `cfg.mode` selects which
/// soft terms are active; `projection` must be provided when beta > 0.
TrainHistory train(ModelState& model, std::span<const EncodedSample> data, const DistillConfig& cfg,
                   const ModelState* teacher = nullptr, Projection* projection = nullptr);

/// Convenience: encodes the train split and trains the teacher on hard labels.
TrainHistory train_teacher(ModelState& model, const Tokenizer& tok, const Corpus& corpus, const DistillConfig& cfg);

/// Produces the response tokens (after SEP_THINK, ending with EOS) that serve as
/// the black-box target for one training sample, or nullopt to keep the reference.
using SequenceSource = std::function<std::optional<std::vector<TokenId>>(const EncodedSample&, const Triplet&)>;

/// Default black-box source: teacher greedy decoding, accepted only when the
/// output passes the validator gate for the sample's label and schema.
SequenceSource teacher_greedy_source(const ModelState& teacher, const Tokenizer& tok,
                                     const std::vector<SdkSchema>& schemas);

struct DistillResult {
  ModelState student;
  TrainHistory history;
  std::size_t teacher_param_count = 0;
  std::size_t student_param_count = 0;
  /// Black-box targets taken from the teacher vs. kept from the reference.
  std::size_t regenerated = 0;
  std::size_t kept_reference = 0;
};

/// Hybrid black-box/white-box distillation of `teacher` into a fresh student.
/// `source` overrides the black-box target generator (default: teacher greedy).
DistillResult distill(const ModelState& teacher, const ModelConfig& student_cfg, const Tokenizer& tok,
                      const Corpus& corpus, const std::vector<SdkSchema>& schemas, const DistillConfig& cfg,
                      const SequenceSource* source = nullptr);

}  // namespace uavd
