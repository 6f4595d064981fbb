#include "uavd/inference.hpp"

#include "uavd/error.hpp"
#include "uavd/generate.hpp"
#include "uavd/train.hpp"

namespace uavd {

DecodedResponse respond(const ModelState& model, const Tokenizer& tok, std::string_view prompt_context,
                        std::string_view instruction, int max_new) {
  const auto prompt = encode_prompt(tok, prompt_context, instruction);
  const int room = model.config.max_seq_len - static_cast<int>(prompt.size());
  if (room < 1) throw InputError("prompt fills the model's context window");
  const GenResult g = generate(model, prompt, std::min(room, max_new));
  return decode_response(tok, g.tokens);
}

std::string respond_text(const ModelState& model, const Tokenizer& tok, std::string_view prompt_context,
                         std::string_view instruction, int max_new) {
  const DecodedResponse r = respond(model, tok, prompt_context, instruction, max_new);
  return render_response(r.think, r.code);
}

std::vector<std::string> respond_split(const ModelState& model, const Tokenizer& tok, const Corpus& corpus,
                                       Split split, int max_new) {
  std::vector<std::string> out;
  for (std::size_t i : corpus.indices(split)) {
    const Triplet& t = corpus.samples[i];
    out.push_back(respond_text(model, tok, t.prompt_context, t.instruction, max_new));
  }
  return out;
}

EvalMetrics evaluate_split(const ModelState& model, const Tokenizer& tok, const Corpus& corpus, Split split,
                           const std::vector<SdkSchema>& schemas, int max_new) {
  std::vector<Triplet> refs;
  for (std::size_t i : corpus.indices(split)) refs.push_back(corpus.samples[i]);
  const auto outputs = respond_split(model, tok, corpus, split, max_new);
  const auto encoded = encode_split(tok, corpus, split);
  const AccuracyCount acc = token_accuracy(model, encoded);
  return evaluate(outputs, refs, schemas, Ratio{acc.correct, acc.total});
}

}  // namespace uavd
