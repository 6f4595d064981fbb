#include "doctest.h"
#include "uavd/generate.hpp"
#include "uavd/transformer.hpp"

using namespace uavd;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.n_layers = 2;
  c.d_model = 16;
  c.n_heads = 4;
  c.d_ff = 32;
  c.vocab_size = 23;
  c.max_seq_len = 20;
  return c;
}

// Shape arithmetic written out tensor by tensor.
std::size_t hand_count(const ModelConfig& c) {
  const std::size_t V = c.vocab_size, L = c.max_seq_len, d = c.d_model, f = c.d_ff;
  const std::size_t embeddings = V * d + L * d;
  const std::size_t attention = 4 * d * d + 3 * d;  // no key bias
  const std::size_t ffn = d * f + f + f * d + d;
  const std::size_t norms = 2 * (2 * d);
  const std::size_t head = 2 * d + d * V + V;
  return embeddings + c.n_layers * (attention + ffn + norms) + head;
}

}  // namespace

TEST_SUITE("transformer") {
  TEST_CASE("forward shapes, finiteness and determinism") {
    ModelState m(small_config());
    m.init(1);
    std::vector<TokenId> toks{0, 5, 7, 22, 3};
    auto a = forward<float>(m, toks);
    CHECK(a.logits.rows() == 5);
    CHECK(a.logits.cols() == 23);
    CHECK(a.hidden.rows() == 5);
    CHECK(a.hidden.cols() == 16);
    CHECK(a.logits.allFinite());
    auto b = forward<float>(m, toks);
    CHECK((a.logits.array() == b.logits.array()).all());
  }

  TEST_CASE("invalid tokens are input errors") {
    ModelState m(small_config());
    m.init(1);
    CHECK_THROWS_AS(forward<float>(m, std::vector<TokenId>{1, 23}), InputError);
    CHECK_THROWS_AS(forward<float>(m, std::vector<TokenId>{-1}), InputError);
    CHECK_THROWS_AS(forward<float>(m, std::vector<TokenId>{}), InputError);
    CHECK_THROWS_AS(forward<float>(m, std::vector<TokenId>(21, 1)), InputError);
  }

  TEST_CASE("attention is causal") {
    ModelState m(small_config());
    m.init(2);
    std::vector<TokenId> a{1, 2, 3, 4, 5, 6};
    std::vector<TokenId> b = a;
    b[4] = 17;
    auto ra = forward<float>(m, a), rb = forward<float>(m, b);
    CHECK((ra.logits.topRows(4).array() == rb.logits.topRows(4).array()).all());
    CHECK_FALSE((ra.logits.row(4).array() == rb.logits.row(4).array()).all());
  }

  TEST_CASE("incremental decoding matches the full forward pass") {
    ModelState m(small_config());
    m.init(3);
    std::vector<TokenId> toks{0, 3, 9, 12, 4, 8, 8, 1};
    auto full = forward<float>(m, toks);
    IncrementalDecoder<float> dec(m);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      RowVec<float> row = dec.step(toks[i]);
      CHECK((row - full.logits.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() < 1e-5f);
    }
    CHECK(dec.position() == 8);
  }

  TEST_CASE("parameter count equals the tensor shape arithmetic") {
    for (ModelConfig c : {small_config(), ModelConfig::teacher_preset(600, 256), ModelConfig::student_preset(600, 256)}) {
      ModelState m(c);
      CHECK(m.params.size() == hand_count(c));
      CHECK(parameter_count(c) == hand_count(c));
      std::size_t sum = 0;
      for (const auto& t : m.layout.tensors) sum += t.size();
      CHECK(sum == hand_count(c));
    }
  }

  TEST_CASE("presets: shapes and a student/teacher ratio near 0.18") {
    const ModelConfig t = ModelConfig::teacher_preset(607, 520);
    const ModelConfig s = ModelConfig::student_preset(607, 520);
    CHECK(t.n_layers == 4);
    CHECK(t.d_model == 128);
    CHECK(t.n_heads == 4);
    CHECK(t.d_ff == 512);
    CHECK(s.n_layers == 2);
    CHECK(s.d_model == 64);
    CHECK(s.n_heads == 2);
    CHECK(s.d_ff == 256);
    const double ratio = static_cast<double>(hand_count(s)) / static_cast<double>(hand_count(t));
    CHECK(ratio == doctest::Approx(0.18).epsilon(0.05 / 0.18));
    CHECK(hand_count(s) < hand_count(t));
  }

  TEST_CASE("config validation") {
    ModelConfig c = small_config();
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.vocab_size = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("initialisation is seed-deterministic") {
    ModelState a(small_config()), b(small_config()), c(small_config());
    a.init(7);
    b.init(7);
    c.init(8);
    CHECK(a.params == b.params);
    CHECK(a.params != c.params);
    const TensorInfo* g = a.layout.find("lnf.g");
    REQUIRE(g);
    CHECK(a.params[g->offset] == 1.0f);
  }

  TEST_CASE("generation halts, is deterministic and reports consistent timing") {
    ModelState m(small_config());
    m.init(4);
    std::vector<TokenId> prompt{0, 3, 9};
    DecodeOptions opts;
    opts.stop_token = 999;  // never emitted, forces max_new
    GenResult a = generate(m, prompt, 10, opts);
    GenResult b = generate(m, prompt, 10, opts);
    CHECK(a.tokens == b.tokens);
    CHECK(a.tokens.size() == 10);
    CHECK(a.timing.emitted_tokens == 10);
    CHECK(a.timing.tokens_per_second > 0);
    CHECK(a.timing.tokens_per_second == doctest::Approx(a.timing.emitted_tokens / a.timing.elapsed_seconds));
    GenResult c = generate(m, prompt, 100, opts);  // context window caps output
    CHECK(c.tokens.size() == 17);
    CHECK_THROWS_AS(generate(m, prompt, 0), InputError);
    CHECK_THROWS_AS(generate(m, std::vector<TokenId>(21, 1), 1), InputError);
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
      std::vector<TokenId> ctx = prompt;
      ctx.insert(ctx.end(), a.tokens.begin(), a.tokens.begin() + static_cast<long>(i));
      auto full = forward<float>(m, ctx);
      Eigen::Index arg;
      full.logits.row(full.logits.rows() - 1).maxCoeff(&arg);
      CHECK(arg == a.tokens[i]);
    }
  }

  TEST_CASE("sampled decoding is reproducible per seed") {
    ModelState m(small_config());
    m.init(4);
    std::vector<TokenId> prompt{0, 3};
    DecodeOptions opts;
    opts.greedy = false;
    opts.temperature = 1.5;
    opts.seed = 12;
    opts.stop_token = 999;
    CHECK(generate(m, prompt, 12, opts).tokens == generate(m, prompt, 12, opts).tokens);
  }
}
