#include "doctest.h"
#include "test_support.hpp"
#include "uavd/dataset.hpp"
#include "uavd/tokenizer.hpp"

using namespace uavd;

TEST_SUITE("tokenizer") {
  TEST_CASE("vocabulary orders by frequency then lexicographically after the specials") {
    Tokenizer tok = build_vocab_from_texts({"takeoff takeoff land"});
    REQUIRE(tok.size() == 9);
    CHECK(tok.token(7) == "takeoff");
    CHECK(tok.token(8) == "land");
    Tokenizer tie = build_vocab_from_texts({"b a c a b"});
    CHECK(tie.vocab() == std::vector<std::string>{"<bos>", "<eos>", "<pad>", "<instruct>", "<think>", "<code>", "<unk>",
                                                  "a", "b", "c"});
  }

  TEST_CASE("special ids are the lowest seven in fixed order") {
    Tokenizer tok = build_vocab_from_texts({"x"});
    CHECK(tok.id("<bos>") == kBos);
    CHECK(tok.id("<eos>") == kEos);
    CHECK(tok.id("<pad>") == kPad);
    CHECK(tok.id("<instruct>") == kSepInstruct);
    CHECK(tok.id("<think>") == kSepThink);
    CHECK(tok.id("<code>") == kSepCode);
    CHECK(tok.id("<unk>") == kUnk);
  }

  TEST_CASE("unseen words map to UNK") {
    Tokenizer tok = build_vocab_from_texts({"takeoff land"});
    CHECK(tok.encode("zzz_unseen") == std::vector<TokenId>{kUnk});
  }

  TEST_CASE("empty corpus is a tokenizer error") {
    CHECK_THROWS_AS(build_vocab(Corpus{}), TokenizerError);
  }

  TEST_CASE("pre-tokenization keeps literals and punctuation apart") {
    CHECK(pre_tokenize("tello.forward(distance=2.0)") ==
          std::vector<std::string>{"tello", ".", "forward", "(", "distance", "=", "2.0", ")"});
    CHECK(pre_tokenize("yaw angle=-90 deg") == std::vector<std::string>{"yaw", "angle", "=", "-90", "deg"});
    CHECK(pre_tokenize("mode=\"sport mode\"") == std::vector<std::string>{"mode", "=", "\"sport mode\""});
    CHECK(pre_tokenize("a\nb") == std::vector<std::string>{"a", "\n", "b"});
    CHECK(pre_tokenize("record 1080p") == std::vector<std::string>{"record", "1080p"});
  }

  TEST_CASE("round trip reproduces corpus text up to whitespace normalization") {
    const Corpus c = build_corpus(uavd::testing::fixtures(), GenConfig{});
    Tokenizer tok = build_vocab(c);
    CHECK(tok.size() < 2000);
    for (const auto& t : c.samples) {
      CHECK(tok.decode(tok.encode(t.instruction)) == normalize_whitespace(t.instruction));
      CHECK(tok.decode(tok.encode(t.code)) == normalize_whitespace(t.code));
      CHECK(tok.decode(tok.encode(t.prompt_context)) == normalize_whitespace(t.prompt_context));
      const std::string think = render_think(t.think);
      CHECK(tok.decode(tok.encode(think)) == normalize_whitespace(think));
    }
  }

  TEST_CASE("encoded samples follow the section layout and decode back") {
    const Corpus c = build_corpus(uavd::testing::fixtures(), GenConfig{});
    Tokenizer tok = build_vocab(c);
    for (std::size_t i = 0; i < c.samples.size(); i += 97) {
      const Triplet& t = c.samples[i];
      EncodedSample s = encode_sample(tok, t);
      CHECK(s.ids[0] == kBos);
      CHECK(s.ids[1] == kSepInstruct);
      CHECK(s.ids[s.response_start - 1] == kSepThink);
      CHECK(s.ids.back() == kEos);
      CHECK(std::count(s.ids.begin(), s.ids.end(), static_cast<TokenId>(kSepCode)) == 1);
      std::vector<TokenId> response(s.ids.begin() + static_cast<long>(s.response_start), s.ids.end());
      DecodedResponse r = decode_response(tok, response);
      CHECK(r.saw_code_separator);
      CHECK(r.code == normalize_whitespace(t.code));
      CHECK(r.think == normalize_whitespace(render_think(t.think)));
    }
  }

  TEST_CASE("response text splits on the separator line") {
    const std::string text = render_response("parse: a.", "import x\nx.go()");
    CHECK(text == "parse: a.\n---\nimport x\nx.go()");
    DecodedResponse r = split_response_text(text);
    CHECK(r.think == "parse: a.");
    CHECK(r.code == "import x\nx.go()");
    DecodedResponse bare = split_response_text("import x");
    CHECK(bare.code == "import x");
    CHECK_FALSE(bare.saw_code_separator);
  }

  TEST_CASE("tokenizer rejects a vocabulary without the special prefix") {
    CHECK_THROWS_AS(Tokenizer(std::vector<std::string>{"a", "b"}), TokenizerError);
  }
}
