#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uavd/dataset.hpp"

namespace uavd {

using TokenId = std::int32_t;

/// Special ids occupy the lowest seven slots in this order.
enum SpecialToken : TokenId {
  kBos = 0,
  kEos = 1,
  kPad = 2,
  kSepInstruct = 3,
  kSepThink = 4,
  kSepCode = 5,
  kUnk = 6,
};
inline constexpr int kNumSpecial = 7;

/// Splits text into word-level pieces: identifiers, numbers (with optional sign
/// and decimals), double-quoted strings, newlines, and single punctuation marks.
std::vector<std::string> pre_tokenize(std::string_view text);

/// Collapses whitespace runs, trims each line, drops blank lines.
std::string normalize_whitespace(std::string_view text);

class Tokenizer {
 public:
  Tokenizer() = default;
  /// `vocab` must start with the special token strings in id order.
  explicit Tokenizer(std::vector<std::string> vocab);

  std::vector<TokenId> encode(std::string_view text) const;
  /// Special tokens other than UNK render as nothing.
  std::string decode(const std::vector<TokenId>& ids) const;

  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::string& token(TokenId id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  TokenId id(std::string_view token) const;
  /// FNV-1a over the vocabulary; checkpoints record it to catch mismatches.
  std::uint64_t hash() const;

  static const std::vector<std::string>& special_strings();

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Vocabulary = specials + corpus tokens by (descending frequency, lexicographic).
Tokenizer build_vocab(const Corpus& corpus);
/// Same ordering rule over raw texts; exposed for tests.
Tokenizer build_vocab_from_texts(const std::vector<std::string>& texts);

/// One training sequence:
///   BOS SEP_INSTRUCT <context> \n <instruction> SEP_THINK <think> SEP_CODE <code> EOS
/// Supervision starts at the first token after SEP_THINK.
struct EncodedSample {
  std::vector<TokenId> ids;
  std::size_t response_start = 0;
};

std::vector<TokenId> encode_prompt(const Tokenizer& tok, std::string_view prompt_context, std::string_view instruction);
EncodedSample encode_sample(const Tokenizer& tok, const Triplet& t);

/// Splits a generated response (tokens after SEP_THINK) into think and code text.
struct DecodedResponse {
  std::string think;
  std::string code;
  bool saw_code_separator = false;
};
DecodedResponse decode_response(const Tokenizer& tok, const std::vector<TokenId>& response);

/// Canonical textual form of a response: think lines, a `---` line, then code.
std::string render_response(std::string_view think, std::string_view code);
DecodedResponse split_response_text(std::string_view text);

}  // namespace uavd
