#include "uavd/model.hpp"

#include "uavd/error.hpp"
#include "uavd/rng.hpp"

namespace uavd {

void ModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_ff < 1) throw ConfigError("d_model, n_heads and d_ff must be positive");
  if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
  if (vocab_size < kNumSpecial) throw ConfigError("vocab_size must cover the special tokens");
  if (max_seq_len < 1) throw ConfigError("max_seq_len must be positive");
}

ModelConfig ModelConfig::teacher_preset(int vocab_size, int max_seq_len) {
  return ModelConfig{4, 128, 4, 512, vocab_size, max_seq_len, Precision::kF32};
}

ModelConfig ModelConfig::student_preset(int vocab_size, int max_seq_len) {
  return ModelConfig{2, 64, 2, 256, vocab_size, max_seq_len, Precision::kF32};
}

ParamLayout ParamLayout::build(const ModelConfig& cfg) {
  cfg.validate();
  ParamLayout l;
  const int d = cfg.d_model, f = cfg.d_ff, V = cfg.vocab_size;
  auto add = [&l](std::string name, int rows, int cols, bool decay) {
    TensorInfo t{std::move(name), rows, cols, l.total, decay};
    l.total += t.size();
    l.tensors.push_back(t);
    return t.offset;
  };
  l.tok_emb = add("tok_emb", V, d, true);
  l.pos_emb = add("pos_emb", cfg.max_seq_len, d, true);
  for (int i = 0; i < cfg.n_layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    LayerSlots s{};
    s.ln1_g = add(p + "ln1.g", 1, d, false);
    s.ln1_b = add(p + "ln1.b", 1, d, false);
    s.wq = add(p + "attn.wq", d, d, true);
    s.bq = add(p + "attn.bq", 1, d, false);
    s.wk = add(p + "attn.wk", d, d, true);
    s.wv = add(p + "attn.wv", d, d, true);
    s.bv = add(p + "attn.bv", 1, d, false);
    s.wo = add(p + "attn.wo", d, d, true);
    s.bo = add(p + "attn.bo", 1, d, false);
    s.ln2_g = add(p + "ln2.g", 1, d, false);
    s.ln2_b = add(p + "ln2.b", 1, d, false);
    s.w1 = add(p + "ffn.w1", d, f, true);
    s.b1 = add(p + "ffn.b1", 1, f, false);
    s.w2 = add(p + "ffn.w2", f, d, true);
    s.b2 = add(p + "ffn.b2", 1, d, false);
    l.layers.push_back(s);
  }
  l.lnf_g = add("lnf.g", 1, d, false);
  l.lnf_b = add("lnf.b", 1, d, false);
  l.w_out = add("out.w", d, V, true);
  l.b_out = add("out.b", 1, V, false);
  return l;
}

const TensorInfo* ParamLayout::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const std::size_t d = cfg.d_model, f = cfg.d_ff, V = cfg.vocab_size, L = cfg.max_seq_len;
  const std::size_t per_layer = 4 * d * d + 2 * d * f + 8 * d + f;
  return V * d + L * d + cfg.n_layers * per_layer + 2 * d + d * V + V;
}

template <class S>
BasicModel<S>::BasicModel(const ModelConfig& cfg) : config(cfg), layout(ParamLayout::build(cfg)) {
  params.assign(layout.total, S(0));
}

template <class S>
void BasicModel<S>::init(std::uint64_t seed) {
  Rng rng(seed ^ 0x5eed5eed5eedULL);
  for (const auto& t : layout.tensors) {
    S* p = params.data() + t.offset;
    const bool gain = t.name.size() >= 2 && t.name.compare(t.name.size() - 2, 2, ".g") == 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (gain) p[i] = S(1);
      else if (t.rows > 1) p[i] = static_cast<S>(0.02 * rng.normal());
      else p[i] = S(0);
    }
  }
  step = 0;
}

template struct BasicModel<float>;
template struct BasicModel<double>;

}  // namespace uavd
