#include "uavd/metrics.hpp"

#include <cstdio>

#include "uavd/error.hpp"
#include "uavd/tokenizer.hpp"
#include "uavd/validator.hpp"

namespace uavd {

std::vector<std::pair<std::string, Ratio>> EvalMetrics::named() const {
  return {{"sdk_id_accuracy", sdk_id_accuracy},     {"call_match_rate", call_match_rate},
          {"param_validity_rate", param_validity_rate}, {"exact_match_rate", exact_match_rate},
          {"refusal_precision", refusal_precision}, {"refusal_recall", refusal_recall},
          {"token_accuracy", token_accuracy}};
}

std::string reference_response(const Triplet& t) { return render_response(render_think(t.think), t.code); }

EvalMetrics evaluate(const std::vector<std::string>& outputs, const std::vector<Triplet>& references,
                     const std::vector<SdkSchema>& schemas, std::optional<Ratio> teacher_forced) {
  if (outputs.size() != references.size())
    throw InputError("evaluate: " + std::to_string(outputs.size()) + " outputs vs " +
                     std::to_string(references.size()) + " references");
  EvalMetrics m;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const Triplet& ref = references[i];
    const DecodedResponse out = split_response_text(outputs[i]);
    const bool ref_infeasible = ref.label == Label::kInfeasible;
    const bool refused = detect_refusal(out.code);

    if (refused) {
      ++m.refusal_precision.denominator;
      if (ref_infeasible) ++m.refusal_precision.numerator;
    }
    if (ref_infeasible) {
      ++m.refusal_recall.denominator;
      if (refused) ++m.refusal_recall.numerator;
    }

    ++m.exact_match_rate.denominator;
    if (normalize_whitespace(out.code) == normalize_whitespace(ref.code)) ++m.exact_match_rate.numerator;

    auto parsed = parse_program(out.code);
    if (!ref_infeasible) {
      ++m.sdk_id_accuracy.denominator;
      auto id = identify_sdk(out.code, schemas);
      if (id.sdk_id && *id.sdk_id == ref.sdk_id) ++m.sdk_id_accuracy.numerator;

      auto ref_parsed = parse_program(ref.code);
      if (ref_parsed) {
        const auto& ref_calls = ref_parsed.value().calls;
        m.call_match_rate.denominator += ref_calls.size();
        if (parsed) {
          const auto& out_calls = parsed.value().calls;
          for (std::size_t k = 0; k < ref_calls.size() && k < out_calls.size(); ++k)
            if (out_calls[k].name == ref_calls[k].name) ++m.call_match_rate.numerator;
        }
      }
    }

    if (parsed) {
      const auto& seq = parsed.value();
      auto id = identify_sdk(seq, schemas);
      const SdkSchema* schema = id.sdk_id ? find_schema(schemas, *id.sdk_id) : find_schema(schemas, ref.sdk_id);
      if (schema) {
        auto report = check_calls(seq, *schema);
        for (const auto& v : report.verdicts) {
          if (v.on_error) continue;
          ++m.param_validity_rate.denominator;
          if (v.params_ok) ++m.param_validity_rate.numerator;
        }
      }
    }

    if (!teacher_forced) {
      auto ref_tokens = pre_tokenize(reference_response(ref));
      auto out_tokens = pre_tokenize(render_response(out.think, out.code));
      m.token_accuracy.denominator += ref_tokens.size();
      for (std::size_t k = 0; k < ref_tokens.size() && k < out_tokens.size(); ++k)
        if (ref_tokens[k] == out_tokens[k]) ++m.token_accuracy.numerator;
    }
  }
  if (teacher_forced) m.token_accuracy = *teacher_forced;
  return m;
}

std::string metrics_to_csv(const EvalMetrics& m) {
  std::string out = "name,numerator,denominator,value\n";
  char buf[64];
  for (const auto& [name, r] : m.named()) {
    std::snprintf(buf, sizeof buf, "%.6f", r.value());
    out += name + "," + std::to_string(r.numerator) + "," + std::to_string(r.denominator) + "," + buf + "\n";
  }
  return out;
}

}  // namespace uavd
