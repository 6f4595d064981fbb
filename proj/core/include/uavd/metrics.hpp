#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavd/dataset.hpp"
#include "uavd/schema.hpp"

namespace uavd {

struct Ratio {
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  /// An empty denominator means nothing could go wrong; reported as 1.
  double value() const {
    return denominator ? static_cast<double>(numerator) / static_cast<double>(denominator) : 1.0;
  }
};

struct EvalMetrics {
  Ratio sdk_id_accuracy;
  Ratio call_match_rate;
  Ratio param_validity_rate;
  Ratio exact_match_rate;
  Ratio refusal_precision;
  Ratio refusal_recall;
  Ratio token_accuracy;

  std::vector<std::pair<std::string, Ratio>> named() const;
};

/// Scores generated responses against references (aligned by index). Each
/// output is a response text: think lines, a `---` line, then code; a text
/// without the separator is treated as code only.
///
/// `teacher_forced`, when supplied, is used for token_accuracy; otherwise
/// token_accuracy is the positional token match of output vs. reference
/// response.
EvalMetrics evaluate(const std::vector<std::string>& outputs, const std::vector<Triplet>& references,
                     const std::vector<SdkSchema>& schemas, std::optional<Ratio> teacher_forced = std::nullopt);

/// `name,numerator,denominator,value` with one row per metric.
std::string metrics_to_csv(const EvalMetrics& m);

/// Reference response text for a triplet, in the same format as outputs.
std::string reference_response(const Triplet& t);

}  // namespace uavd
