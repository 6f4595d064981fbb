#include <cmath>

#include "uavd/error.hpp"
#include "uavd/generate.hpp"
#include "uavd/rng.hpp"
#include "uavd/train.hpp"
#include "uavd/validator.hpp"

namespace uavd {

namespace {

bool passes_gate(const DecodedResponse& r, const Triplet& ref, const std::vector<SdkSchema>& schemas) {
  if (!r.saw_code_separator) return false;
  if (ref.label == Label::kInfeasible) return detect_refusal(r.code);
  if (detect_refusal(r.code)) return false;
  auto parsed = parse_program(r.code);
  if (!parsed) return false;
  auto id = identify_sdk(parsed.value(), schemas);
  if (!id.sdk_id || *id.sdk_id != ref.sdk_id) return false;
  const SdkSchema* schema = find_schema(schemas, ref.sdk_id);
  return schema && check_calls(parsed.value(), *schema).clean();
}

}  // namespace

SequenceSource teacher_greedy_source(const ModelState& teacher, const Tokenizer& tok,
                                     const std::vector<SdkSchema>& schemas) {
  return [&teacher, &tok, &schemas](const EncodedSample& s, const Triplet& ref) -> std::optional<std::vector<TokenId>> {
    std::span<const TokenId> prompt(s.ids.data(), s.response_start);
    const int room = teacher.config.max_seq_len - static_cast<int>(prompt.size());
    if (room < 1) return std::nullopt;
    GenResult g = generate(teacher, prompt, room);
    if (g.tokens.empty() || g.tokens.back() != kEos) return std::nullopt;
    if (!passes_gate(decode_response(tok, g.tokens), ref, schemas)) return std::nullopt;
    return std::move(g.tokens);
  };
}

DistillResult distill(const ModelState& teacher, const ModelConfig& student_cfg, const Tokenizer& tok,
                      const Corpus& corpus, const std::vector<SdkSchema>& schemas, const DistillConfig& cfg,
                      const SequenceSource* source) {
  cfg.validate();
  student_cfg.validate();
  const int V = static_cast<int>(tok.size());
  if (teacher.config.vocab_size != V || student_cfg.vocab_size != V)
    throw ConfigError("teacher, student and tokenizer vocabularies differ");

  DistillResult result;
  result.teacher_param_count = parameter_count(teacher.config);
  result.student_param_count = parameter_count(student_cfg);

  std::vector<EncodedSample> data;
  const auto train_idx = corpus.indices(Split::kTrain);
  data.reserve(train_idx.size());
  const bool regenerate = cfg.mode != DistillMode::kWhitebox;
  SequenceSource fallback;
  if (regenerate && !source) {
    fallback = teacher_greedy_source(teacher, tok, schemas);
    source = &fallback;
  }
  for (std::size_t i : train_idx) {
    EncodedSample s = encode_sample(tok, corpus.samples[i]);
    if (regenerate) {
      auto response = (*source)(s, corpus.samples[i]);
      if (response && !response->empty() && s.response_start + response->size() <= static_cast<std::size_t>(student_cfg.max_seq_len)) {
        s.ids.resize(s.response_start);
        s.ids.insert(s.ids.end(), response->begin(), response->end());
        ++result.regenerated;
      } else {
        ++result.kept_reference;
      }
    }
    data.push_back(std::move(s));
  }

  result.student = ModelState(student_cfg);
  result.student.init(cfg.seed);

  Projection projection;
  projection.weight = Mat<float>::Zero(student_cfg.d_model, teacher.config.d_model);
  Rng rng = Rng::keyed(cfg.seed, "projection", 0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(student_cfg.d_model));
  for (Eigen::Index i = 0; i < projection.weight.size(); ++i)
    projection.weight.data()[i] = static_cast<float>(rng.normal() * scale);

  result.history = train(result.student, data, cfg, &teacher, &projection);
  return result;
}

}  // namespace uavd
