#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <optional>

#include "uavd/error.hpp"
#include "uavd/model.hpp"

namespace uavd {

enum class DistillMode { kBlackbox, kWhitebox, kHybrid };
std::string_view to_string(DistillMode mode);
std::optional<DistillMode> distill_mode_from_string(std::string_view s);

struct DistillConfig {
  double temperature = 2.0;
  double alpha = 0.5;  // weight of the hard-label term
  double beta = 0.1;   // weight of hidden-state alignment
  DistillMode mode = DistillMode::kHybrid;

  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  int warmup_steps = 100;
  /// After warmup the rate follows a cosine from lr down to lr * min_lr_ratio;
  /// 1.0 keeps it constant.
  double min_lr_ratio = 1.0;
  double grad_clip = 1.0;
  int batch_size = 8;
  int steps = 1000;
  std::uint64_t seed = 42;

  int probe_size = 16;
  int probe_interval = 50;

  /// Throws ConfigError: T > 0, alpha in [0,1], beta >= 0, steps >= 1, ...
  void validate() const;
};

/// Temperature softmax with max subtraction.
template <class S>
RowVec<S> softmax_t(const Eigen::Ref<const RowVec<S>>& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be > 0");
  RowVec<S> z = logits / static_cast<S>(temperature);
  const S mx = z.maxCoeff();
  RowVec<S> e = (z.array() - mx).exp();
  return e / e.sum();
}

/// log softmax of one row at temperature T.
template <class S>
RowVec<S> log_softmax_t(const Eigen::Ref<const RowVec<S>>& logits, double temperature) {
  RowVec<S> z = logits / static_cast<S>(temperature);
  const S mx = z.maxCoeff();
  const S lse = mx + std::log((z.array() - mx).exp().sum());
  return z.array() - lse;
}

inline std::size_t masked_count(std::span<const std::uint8_t> mask) {
  std::size_t n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

/// Mean negative log-likelihood over masked rows. Throws LossError on an empty mask.
template <class S>
S cross_entropy(const Mat<S>& logits, std::span<const TokenId> targets, std::span<const std::uint8_t> mask) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size() || targets.size() != mask.size())
    throw InputError("cross_entropy: logits, targets and mask lengths differ");
  const std::size_t n = masked_count(mask);
  if (n == 0) throw LossError("cross_entropy: mask selects no positions");
  S sum = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    RowVec<S> lp = log_softmax_t<S>(logits.row(i), 1.0);
    sum -= lp(targets[i]);
  }
  return sum / static_cast<S>(n);
}

/// Mean over masked rows of KL(softmax_T(teacher) || softmax_T(student)).
template <class S>
S kl_soft(const Mat<S>& teacher_logits, const Mat<S>& student_logits, double temperature,
          std::span<const std::uint8_t> mask) {
  if (teacher_logits.rows() != student_logits.rows() || teacher_logits.cols() != student_logits.cols())
    throw InputError("kl_soft: teacher and student logits differ in shape");
  if (static_cast<std::size_t>(teacher_logits.rows()) != mask.size()) throw InputError("kl_soft: mask length mismatch");
  if (!(temperature > 0.0)) throw ConfigError("kl_soft: temperature must be > 0");
  const std::size_t n = masked_count(mask);
  if (n == 0) throw LossError("kl_soft: mask selects no positions");
  S sum = 0;
  for (Eigen::Index i = 0; i < teacher_logits.rows(); ++i) {
    if (!mask[i]) continue;
    RowVec<S> lp = log_softmax_t<S>(teacher_logits.row(i), temperature);
    RowVec<S> lq = log_softmax_t<S>(student_logits.row(i), temperature);
    sum += (lp.array().exp() * (lp - lq).array()).sum();
  }
  return sum / static_cast<S>(n);
}

/// Mean squared elementwise error between projected student and teacher hidden
/// states over masked rows. `projection` is [d_student x d_teacher].
template <class S>
S hidden_mse(const Mat<S>& student_hidden, const Mat<S>& teacher_hidden, const Mat<S>& projection,
             std::span<const std::uint8_t> mask) {
  if (projection.rows() != student_hidden.cols())
    throw InputError("hidden_mse: projection rows must equal the student width");
  if (projection.cols() != teacher_hidden.cols())
    throw InputError("hidden_mse: projected width does not match the teacher width");
  if (student_hidden.rows() != teacher_hidden.rows() || static_cast<std::size_t>(student_hidden.rows()) != mask.size())
    throw InputError("hidden_mse: sequence lengths differ");
  const std::size_t n = masked_count(mask);
  if (n == 0) throw LossError("hidden_mse: mask selects no positions");
  S sum = 0;
  for (Eigen::Index i = 0; i < student_hidden.rows(); ++i) {
    if (!mask[i]) continue;
    RowVec<S> diff = student_hidden.row(i) * projection - teacher_hidden.row(i);
    sum += diff.squaredNorm();
  }
  return sum / static_cast<S>(n * static_cast<std::size_t>(teacher_hidden.cols()));
}

struct LossBreakdown {
  double total = 0;
  double ce = 0;
  double kl = 0;
  double mse = 0;
};

/// total = alpha*CE + (1-alpha)*T^2*KL + beta*MSE. Terms with zero weight, and
/// the KL/MSE terms in blackbox mode, are skipped and reported as 0.
template <class S>
LossBreakdown combine_losses(double ce, double kl, double mse, const DistillConfig& cfg) {
  LossBreakdown b;
  b.ce = ce;
  b.kl = kl;
  b.mse = mse;
  const double T = cfg.temperature;
  b.total = cfg.alpha * ce;
  if (cfg.mode != DistillMode::kBlackbox) {
    if (cfg.alpha != 1.0) b.total += (1.0 - cfg.alpha) * T * T * kl;
    if (cfg.beta != 0.0) b.total += cfg.beta * mse;
  }
  return b;
}

template <class S>
LossBreakdown total_distill_loss(const Mat<S>& student_logits, const Mat<S>& student_hidden,
                                 const Mat<S>* teacher_logits, const Mat<S>* teacher_hidden, const Mat<S>* projection,
                                 std::span<const TokenId> targets, std::span<const std::uint8_t> mask,
                                 const DistillConfig& cfg) {
  cfg.validate();
  const double ce = cross_entropy<S>(student_logits, targets, mask);
  double kl = 0, mse = 0;
  if (cfg.mode != DistillMode::kBlackbox) {
    if (cfg.alpha != 1.0) {
      if (!teacher_logits) throw InputError("total_distill_loss: KL term needs teacher logits");
      kl = kl_soft<S>(*teacher_logits, student_logits, cfg.temperature, mask);
    }
    if (cfg.beta != 0.0) {
      if (!teacher_hidden || !projection) throw InputError("total_distill_loss: MSE term needs teacher hidden states");
      mse = hidden_mse<S>(student_hidden, *teacher_hidden, *projection, mask);
    }
  }
  return combine_losses<S>(ce, kl, mse, cfg);
}

/// Sums and gradients of the distillation loss for one sequence. Gradients are
/// scaled by `inv_count` (1 / masked positions across the batch) so that
/// accumulating over a batch yields the gradient of the batch-mean loss.
template <class S>
struct SequenceLossGrad {
  double ce_sum = 0, kl_sum = 0, mse_sum = 0;
  std::size_t count = 0;
  std::size_t correct = 0;  // argmax hits on masked rows
  Mat<S> d_logits;
  Mat<S> d_hidden;          // empty unless the MSE term is active
};

template <class S>
SequenceLossGrad<S> sequence_loss_grad(const Mat<S>& student_logits, const Mat<S>& student_hidden,
                                       const Mat<S>* teacher_logits, const Mat<S>* teacher_hidden,
                                       const Mat<S>* projection, Mat<S>* d_projection,
                                       std::span<const TokenId> targets, std::span<const std::uint8_t> mask,
                                       const DistillConfig& cfg, double inv_count) {
  SequenceLossGrad<S> out;
  const auto n = student_logits.rows();
  const auto V = student_logits.cols();
  out.d_logits = Mat<S>::Zero(n, V);
  const bool use_kl = cfg.mode != DistillMode::kBlackbox && cfg.alpha != 1.0 && teacher_logits;
  const bool use_mse = cfg.mode != DistillMode::kBlackbox && cfg.beta != 0.0 && teacher_hidden && projection;
  const double T = cfg.temperature;
  const S w_ce = static_cast<S>(cfg.alpha * inv_count);
  const S w_kl = static_cast<S>((1.0 - cfg.alpha) * T * inv_count);  // T^2 * (1/T)
  if (use_mse) out.d_hidden = Mat<S>::Zero(n, student_hidden.cols());

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++out.count;
    RowVec<S> lp = log_softmax_t<S>(student_logits.row(i), 1.0);
    out.ce_sum -= lp(targets[i]);
    Eigen::Index arg;
    student_logits.row(i).maxCoeff(&arg);
    if (arg == targets[i]) ++out.correct;
    if (cfg.alpha != 0.0) {
      RowVec<S> p = lp.array().exp();
      p(targets[i]) -= S(1);
      out.d_logits.row(i) += w_ce * p;
    }
    if (use_kl) {
      RowVec<S> lt = log_softmax_t<S>(teacher_logits->row(i), T);
      RowVec<S> ls = log_softmax_t<S>(student_logits.row(i), T);
      RowVec<S> pt = lt.array().exp();
      out.kl_sum += (pt.array() * (lt - ls).array()).sum();
      out.d_logits.row(i) += w_kl * (RowVec<S>(ls.array().exp()) - pt);
    }
    if (use_mse) {
      RowVec<S> diff = student_hidden.row(i) * *projection - teacher_hidden->row(i);
      out.mse_sum += diff.squaredNorm();
      const S w = static_cast<S>(cfg.beta * 2.0 * inv_count / static_cast<double>(teacher_hidden->cols()));
      out.d_hidden.row(i) += w * (diff * projection->transpose());
      if (d_projection) d_projection->noalias() += w * student_hidden.row(i).transpose() * diff;
    }
  }
  return out;
}

}  // namespace uavd
