#include "uavd/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uavd/error.hpp"
#include "uavd/rng.hpp"
#include "uavd/transformer.hpp"

namespace uavd {

double TrainHistory::smoothed_loss(std::size_t step_index, std::size_t window) const {
  if (steps.empty()) return 0.0;
  step_index = std::min(step_index, steps.size() - 1);
  const std::size_t lo = step_index + 1 >= window ? step_index + 1 - window : 0;
  double sum = 0;
  for (std::size_t i = lo; i <= step_index; ++i) sum += steps[i].loss.total;
  return sum / static_cast<double>(step_index - lo + 1);
}

namespace {

struct Example {
  std::vector<TokenId> input;
  std::vector<TokenId> target;
  std::vector<std::uint8_t> mask;
};

Example make_example(const EncodedSample& s) {
  if (s.ids.size() < 2) throw InputError("training sample shorter than two tokens");
  Example e;
  e.input.assign(s.ids.begin(), s.ids.end() - 1);
  e.target.assign(s.ids.begin() + 1, s.ids.end());
  e.mask.resize(e.input.size());
  for (std::size_t i = 0; i < e.input.size(); ++i) e.mask[i] = (i + 1 >= s.response_start) ? 1 : 0;
  return e;
}

class AdamW {
 public:
  AdamW(std::size_t n, const DistillConfig& cfg) : m_(n, 0.0f), v_(n, 0.0f), cfg_(cfg) {}

  void update(std::span<float> params, std::span<const float> grad, std::span<const std::uint8_t> decay, double lr,
              long t) {
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      m_[i] = static_cast<float>(b1 * m_[i] + (1.0 - b1) * g);
      v_[i] = static_cast<float>(b2 * v_[i] + (1.0 - b2) * g * g);
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      double p = params[i];
      if (decay.empty() || decay[i]) p -= lr * cfg_.weight_decay * p;
      p -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
      params[i] = static_cast<float>(p);
    }
  }

 private:
  std::vector<float> m_, v_;
  DistillConfig cfg_;
};

double learning_rate(const DistillConfig& cfg, long step) {
  if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps)
    return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (cfg.min_lr_ratio >= 1.0 || cfg.steps <= cfg.warmup_steps) return cfg.lr;
  const double progress =
      static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(cfg.steps - cfg.warmup_steps);
  const double cosine = 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
  return cfg.lr * (cfg.min_lr_ratio + (1.0 - cfg.min_lr_ratio) * cosine);
}

std::vector<std::size_t> probe_indices(std::size_t n, const DistillConfig& cfg) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::keyed(cfg.seed, "probe", 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  idx.resize(std::min<std::size_t>(n, static_cast<std::size_t>(std::max(0, cfg.probe_size))));
  return idx;
}

}  // namespace

AccuracyCount token_accuracy(const ModelState& model, std::span<const EncodedSample> samples) {
  AccuracyCount acc;
  for (const auto& s : samples) {
    Example e = make_example(s);
    auto out = forward<float>(model, e.input);
    for (std::size_t i = 0; i < e.input.size(); ++i) {
      if (!e.mask[i]) continue;
      Eigen::Index arg;
      out.logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      acc.correct += (arg == e.target[i]) ? 1 : 0;
      ++acc.total;
    }
  }
  return acc;
}

std::vector<EncodedSample> encode_split(const Tokenizer& tok, const Corpus& corpus, Split split) {
  std::vector<EncodedSample> out;
  for (std::size_t i : corpus.indices(split)) out.push_back(encode_sample(tok, corpus.samples[i]));
  return out;
}

int longest_sample(const Tokenizer& tok, const Corpus& corpus) {
  std::size_t longest = 0;
  for (const auto& t : corpus.samples) longest = std::max(longest, encode_sample(tok, t).ids.size());
  return static_cast<int>(longest);
}

TrainHistory train(ModelState& model, std::span<const EncodedSample> data, const DistillConfig& cfg_in,
                   const ModelState* teacher, Projection* projection) {
  DistillConfig cfg = cfg_in;
  if (!teacher) cfg.mode = DistillMode::kBlackbox;
  // Blackbox targets are teacher outputs already; only the hard-label term applies.
  if (cfg.mode == DistillMode::kBlackbox) {
    cfg.alpha = 1.0;
    cfg.beta = 0.0;
  }
  cfg.validate();
  if (data.empty()) throw InputError("training set is empty");

  const bool need_teacher = cfg.mode != DistillMode::kBlackbox && (cfg.alpha != 1.0 || cfg.beta != 0.0);
  const bool use_mse = cfg.mode != DistillMode::kBlackbox && cfg.beta != 0.0;
  if (need_teacher && teacher && teacher->config.vocab_size != model.config.vocab_size)
    throw ConfigError("teacher and student vocabularies differ");
  if (use_mse && (!projection || projection->weight.rows() != model.config.d_model ||
                  projection->weight.cols() != teacher->config.d_model))
    throw ConfigError("hidden alignment needs a projection of shape [d_student x d_teacher]");

  std::vector<Example> examples;
  examples.reserve(data.size());
  for (const auto& s : data) {
    check_tokens(model.config, s.ids);
    examples.push_back(make_example(s));
  }
  std::vector<EncodedSample> probe;
  for (std::size_t i : probe_indices(data.size(), cfg)) probe.push_back(data[i]);

  std::vector<std::uint8_t> decay(model.params.size(), 0);
  for (const auto& t : model.layout.tensors)
    if (t.decay) std::fill(decay.begin() + static_cast<long>(t.offset), decay.begin() + static_cast<long>(t.offset + t.size()), 1);

  AdamW opt(model.params.size(), cfg);
  std::optional<AdamW> proj_opt;
  if (use_mse) proj_opt.emplace(static_cast<std::size_t>(projection->weight.size()), cfg);

  Rng batch_rng = Rng::keyed(cfg.seed, "batches", 0);
  FlatVec<float> grad(model.params.size());
  Mat<float> d_proj;
  TrainHistory history;
  history.steps.reserve(static_cast<std::size_t>(cfg.steps));

  for (long step = 1; step <= cfg.steps; ++step) {
    std::vector<std::size_t> batch(static_cast<std::size_t>(cfg.batch_size));
    for (auto& b : batch) b = batch_rng.below(examples.size());

    std::size_t total_masked = 0;
    for (auto b : batch) total_masked += masked_count(examples[b].mask);
    if (total_masked == 0) throw LossError("batch has no supervised positions");
    const double inv = 1.0 / static_cast<double>(total_masked);

    std::fill(grad.begin(), grad.end(), 0.0f);
    if (use_mse) d_proj = Mat<float>::Zero(projection->weight.rows(), projection->weight.cols());
    double ce = 0, kl = 0, mse = 0;
    for (auto b : batch) {
      const Example& e = examples[b];
      ForwardCache<float> cache;
      auto sout = forward<float>(model, e.input, &cache);
      std::optional<ForwardResult<float>> tout;
      if (need_teacher) tout = forward<float>(*teacher, e.input);
      auto lg = sequence_loss_grad<float>(sout.logits, sout.hidden, tout ? &tout->logits : nullptr,
                                          tout ? &tout->hidden : nullptr, use_mse ? &projection->weight : nullptr,
                                          use_mse ? &d_proj : nullptr, e.target, e.mask, cfg, inv);
      ce += lg.ce_sum;
      kl += lg.kl_sum;
      mse += lg.mse_sum;
      backward<float>(model, cache, lg.d_logits, use_mse ? &lg.d_hidden : nullptr, grad);
    }
    ce *= inv;
    kl *= inv;
    if (use_mse) mse *= inv / static_cast<double>(projection->weight.cols());

    StepRecord rec;
    rec.step = step;
    rec.loss = combine_losses<float>(ce, kl, mse, cfg);
    if (!std::isfinite(rec.loss.total)) throw TrainingDiverged(step, "non-finite loss");

    double sq = 0;
    for (float g : grad) sq += static_cast<double>(g) * g;
    if (use_mse) sq += static_cast<double>(d_proj.squaredNorm());
    rec.grad_norm = std::sqrt(sq);
    if (!std::isfinite(rec.grad_norm)) throw TrainingDiverged(step, "non-finite gradient");
    if (cfg.grad_clip > 0 && rec.grad_norm > cfg.grad_clip) {
      const float s = static_cast<float>(cfg.grad_clip / rec.grad_norm);
      for (float& g : grad) g *= s;
      if (use_mse) d_proj *= s;
    }

    rec.lr = learning_rate(cfg, step);
    opt.update(model.params, grad, decay, rec.lr, step);
    if (use_mse) {
      proj_opt->update(std::span<float>(projection->weight.data(), static_cast<std::size_t>(projection->weight.size())),
                       std::span<const float>(d_proj.data(), static_cast<std::size_t>(d_proj.size())), {}, rec.lr,
                       step);
    }
    ++model.step;

    if (!probe.empty() && cfg.probe_interval > 0 && (step % cfg.probe_interval == 0 || step == cfg.steps))
      rec.probe_accuracy = token_accuracy(model, probe).value();
    history.steps.push_back(rec);
  }
  return history;
}

TrainHistory train_teacher(ModelState& model, const Tokenizer& tok, const Corpus& corpus, const DistillConfig& cfg) {
  auto data = encode_split(tok, corpus, Split::kTrain);
  return train(model, data, cfg, nullptr, nullptr);
}

}  // namespace uavd
