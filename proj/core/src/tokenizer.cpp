#include "uavd/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "uavd/error.hpp"
#include "uavd/rng.hpp"

namespace uavd {

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }


// Spacing rules used by decode; generator text follows the same conventions.
bool no_space_before(std::string_view t) {
  static constexpr std::string_view set[] = {".", ",", ")", "(", ":", ";", "]", "[", "=", "/", "\n"};
  return std::find(std::begin(set), std::end(set), t) != std::end(set);
}
bool no_space_after(std::string_view t) {
  static constexpr std::string_view set[] = {".", "(", "[", "=", "/", "\n"};
  return std::find(std::begin(set), std::end(set), t) != std::end(set);
}

}  // namespace

std::vector<std::string> pre_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      out.emplace_back("\n");
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < n && text[j] != '"' && text[j] != '\n') ++j;
      if (j < n && text[j] == '"') {
        out.emplace_back(text.substr(i, j - i + 1));
        i = j + 1;
      } else {
        out.emplace_back("\"");
        ++i;
      }
    } else if (digit(c) || (c == '-' && i + 1 < n && digit(text[i + 1]) &&
                            (i == 0 || !(word_char(text[i - 1]) || text[i - 1] == '.' || text[i - 1] == ')' ||
                                         text[i - 1] == '"')))) {
      std::size_t j = i + 1;
      while (j < n && digit(text[j])) ++j;
      if (j + 1 < n && text[j] == '.' && digit(text[j + 1])) {
        j += 2;
        while (j < n && digit(text[j])) ++j;
      }
      while (j < n && word_char(text[j])) ++j;  // e.g. 1080p
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else if (word_char(c)) {
      std::size_t j = i + 1;
      while (j < n && word_char(text[j])) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(1, c);
      ++i;
    }
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line;
    bool pending_space = false;
    for (std::size_t i = pos; i < nl; ++i) {
      char c = text[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        pending_space = !line.empty();
      } else {
        if (pending_space) line += ' ';
        pending_space = false;
        line += c;
      }
    }
    if (!line.empty()) {
      if (!out.empty()) out += '\n';
      out += line;
    }
    pos = nl + 1;
  }
  return out;
}

const std::vector<std::string>& Tokenizer::special_strings() {
  static const std::vector<std::string> s = {"<bos>", "<eos>", "<pad>", "<instruct>", "<think>", "<code>", "<unk>"};
  return s;
}

Tokenizer::Tokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
  const auto& sp = special_strings();
  if (vocab_.size() < sp.size() || !std::equal(sp.begin(), sp.end(), vocab_.begin()))
    throw TokenizerError("vocabulary must begin with the special tokens");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<TokenId>(i)).second)
      throw TokenizerError("duplicate vocabulary entry '" + vocab_[i] + "'");
  }
}

TokenId Tokenizer::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& piece : pre_tokenize(text)) ids.push_back(id(piece));
  return ids;
}

std::string Tokenizer::decode(const std::vector<TokenId>& ids) const {
  std::string out;
  std::string_view prev;
  for (TokenId t : ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_.size()) throw TokenizerError("token id out of range");
    if (t < kNumSpecial && t != kUnk) continue;
    std::string_view tok = vocab_[static_cast<std::size_t>(t)];
    if (!out.empty() && !prev.empty() && !no_space_before(tok) && !no_space_after(prev)) out += ' ';
    out += tok;
    prev = tok;
  }
  return out;
}

std::uint64_t Tokenizer::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : vocab_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
  }
  return h;
}

Tokenizer build_vocab_from_texts(const std::vector<std::string>& texts) {
  std::map<std::string, long> counts;
  for (const auto& text : texts)
    for (auto& piece : pre_tokenize(text)) ++counts[piece];
  if (counts.empty()) throw TokenizerError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, long>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> vocab = Tokenizer::special_strings();
  for (auto& [tok, _] : entries) vocab.push_back(tok);
  return Tokenizer(std::move(vocab));
}

Tokenizer build_vocab(const Corpus& corpus) {
  if (corpus.samples.empty()) throw TokenizerError("cannot build a vocabulary from an empty corpus");
  std::vector<std::string> texts;
  texts.reserve(corpus.samples.size() * 4);
  for (const auto& t : corpus.samples) {
    texts.push_back(t.prompt_context);
    texts.push_back(t.instruction);
    texts.push_back(render_think(t.think));
    texts.push_back(t.code);
  }
  return build_vocab_from_texts(texts);
}

std::vector<TokenId> encode_prompt(const Tokenizer& tok, std::string_view prompt_context, std::string_view instruction) {
  std::vector<TokenId> ids{kBos, kSepInstruct};
  auto ctx = tok.encode(prompt_context);
  ids.insert(ids.end(), ctx.begin(), ctx.end());
  ids.push_back(tok.id("\n"));
  auto ins = tok.encode(instruction);
  ids.insert(ids.end(), ins.begin(), ins.end());
  ids.push_back(kSepThink);
  return ids;
}

EncodedSample encode_sample(const Tokenizer& tok, const Triplet& t) {
  EncodedSample s;
  s.ids = encode_prompt(tok, t.prompt_context, t.instruction);
  s.response_start = s.ids.size();
  auto think = tok.encode(render_think(t.think));
  s.ids.insert(s.ids.end(), think.begin(), think.end());
  s.ids.push_back(kSepCode);
  auto code = tok.encode(t.code);
  s.ids.insert(s.ids.end(), code.begin(), code.end());
  s.ids.push_back(kEos);
  return s;
}

DecodedResponse decode_response(const Tokenizer& tok, const std::vector<TokenId>& response) {
  DecodedResponse r;
  auto sep = std::find(response.begin(), response.end(), static_cast<TokenId>(kSepCode));
  auto end = std::find(response.begin(), response.end(), static_cast<TokenId>(kEos));
  if (sep != response.end() && sep < end) {
    r.saw_code_separator = true;
    r.think = tok.decode(std::vector<TokenId>(response.begin(), sep));
    r.code = tok.decode(std::vector<TokenId>(sep + 1, end));
  } else {
    r.think = tok.decode(std::vector<TokenId>(response.begin(), end));
  }
  return r;
}

std::string render_response(std::string_view think, std::string_view code) {
  std::string out(think);
  out += "\n---\n";
  out += code;
  return out;
}

DecodedResponse split_response_text(std::string_view text) {
  DecodedResponse r;
  // The separator is a line consisting solely of `---`.
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto end = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(pos, end - pos);
    if (normalize_whitespace(line) == "---") {
      r.saw_code_separator = true;
      r.think = std::string(text.substr(0, pos > 0 ? pos - 1 : 0));
      r.code = nl == std::string_view::npos ? std::string() : std::string(text.substr(nl + 1));
      return r;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  r.code = std::string(text);
  return r;
}

}  // namespace uavd
