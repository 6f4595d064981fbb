#include "uavd/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "uavd/rng.hpp"
#include "uavd/transformer.hpp"

namespace uavd {

ModelConfig grad_check_config() {
  ModelConfig c;
  c.n_layers = 1;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.vocab_size = 11;
  c.max_seq_len = 6;
  c.precision = Precision::kF64;
  return c;
}

namespace {

// Small-init models have nearly flat losses; spread the weights so every term
// carries a gradient well above finite-difference noise.
void randomize(ModelStateF64& m, std::uint64_t seed) {
  Rng rng = Rng::keyed(seed, "grad_check", 0);
  for (const auto& t : m.layout.tensors) {
    const bool gain = t.name.ends_with(".g");
    for (std::size_t i = 0; i < t.size(); ++i)
      m.params[t.offset + i] = gain ? 1.0 + 0.1 * rng.normal() : 0.4 * rng.normal();
  }
}

std::string param_name(const ParamLayout& layout, std::size_t index) {
  for (const auto& t : layout.tensors)
    if (index >= t.offset && index < t.offset + t.size())
      return t.name + "[" + std::to_string(index - t.offset) + "]";
  return "?";
}

}  // namespace

GradCheckResult grad_check(const GradCheckOptions& opts) {
  const ModelConfig scfg = grad_check_config();
  ModelConfig tcfg = scfg;
  tcfg.d_model = 12;
  tcfg.n_heads = 3;
  tcfg.d_ff = 24;

  ModelStateF64 student(scfg);
  ModelStateF64 teacher(tcfg);
  randomize(student, opts.seed);
  randomize(teacher, opts.seed + 1);

  Rng rng = Rng::keyed(opts.seed, "grad_check_data", 0);
  std::vector<TokenId> tokens(static_cast<std::size_t>(scfg.max_seq_len));
  std::vector<TokenId> targets(tokens.size());
  for (auto& t : tokens) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(scfg.vocab_size)));
  for (auto& t : targets) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(scfg.vocab_size)));
  const std::vector<std::uint8_t> mask = {0, 1, 0, 1, 1, 1};

  Mat<double> projection(scfg.d_model, tcfg.d_model);
  for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = 0.3 * rng.normal();

  const auto tout = forward<double>(teacher, tokens);
  const DistillConfig& cfg = opts.loss;

  auto loss_at = [&](const ModelStateF64& m, const Mat<double>& proj) {
    auto s = forward<double>(m, tokens);
    return total_distill_loss<double>(s.logits, s.hidden, &tout.logits, &tout.hidden, &proj, targets, mask, cfg).total;
  };

  ForwardCache<double> cache;
  auto sout = forward<double>(student, tokens, &cache);
  Mat<double> d_proj = Mat<double>::Zero(projection.rows(), projection.cols());
  const double inv = 1.0 / static_cast<double>(masked_count(mask));
  const bool use_mse = cfg.mode != DistillMode::kBlackbox && cfg.beta != 0.0;
  auto lg = sequence_loss_grad<double>(sout.logits, sout.hidden, &tout.logits, &tout.hidden, &projection, &d_proj,
                                       targets, mask, cfg, inv);
  FlatVec<double> grad(student.params.size(), 0.0);
  BackwardOptions bopts;
  bopts.corrupt_gelu_derivative = opts.corrupt_backward;
  backward<double>(student, cache, lg.d_logits, use_mse ? &lg.d_hidden : nullptr, grad, bopts);

  GradCheckResult result;
  auto record = [&](double analytic, double numeric, const std::string& name) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    const double err = std::abs(analytic - numeric) / denom;
    ++result.checked;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_param = name;
    }
  };

  const std::size_t n = student.params.size();
  const std::size_t stride = (opts.max_params == 0 || opts.max_params >= n) ? 1 : n / opts.max_params;
  for (std::size_t i = 0; i < n; i += stride) {
    const double saved = student.params[i];
    student.params[i] = saved + opts.eps;
    const double up = loss_at(student, projection);
    student.params[i] = saved - opts.eps;
    const double down = loss_at(student, projection);
    student.params[i] = saved;
    record(grad[i], (up - down) / (2.0 * opts.eps), param_name(student.layout, i));
  }
  if (use_mse) {
    for (Eigen::Index i = 0; i < projection.size(); ++i) {
      const double saved = projection.data()[i];
      projection.data()[i] = saved + opts.eps;
      const double up = loss_at(student, projection);
      projection.data()[i] = saved - opts.eps;
      const double down = loss_at(student, projection);
      projection.data()[i] = saved;
      record(d_proj.data()[i], (up - down) / (2.0 * opts.eps), "projection[" + std::to_string(i) + "]");
    }
  }
  return result;
}

}  // namespace uavd
