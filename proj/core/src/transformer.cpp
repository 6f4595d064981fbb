#include "uavd/transformer.hpp"

#include <cmath>

#include "uavd/error.hpp"

namespace uavd {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <class S>
void layer_norm(const Mat<S>& x, const Eigen::Map<const RowVec<S>>& g, const Eigen::Map<const RowVec<S>>& b,
                Mat<S>& xhat, RowVec<S>& rstd, Mat<S>& y) {
  const auto n = x.rows();
  const auto d = x.cols();
  xhat.resize(n, d);
  rstd.resize(n);
  y.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mu = x.row(i).mean();
    const S var = (x.row(i).array() - mu).square().mean();
    const S r = S(1) / std::sqrt(var + S(kLnEps));
    rstd(i) = r;
    xhat.row(i) = (x.row(i).array() - mu) * r;
    y.row(i) = xhat.row(i).cwiseProduct(g) + b;
  }
}

// Returns dx; accumulates dg, db.
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat, const RowVec<S>& rstd,
                           const Eigen::Map<const RowVec<S>>& g, S* dg, S* db) {
  const auto n = dy.rows();
  const auto d = dy.cols();
  Eigen::Map<RowVec<S>> dg_v(dg, d);
  Eigen::Map<RowVec<S>> db_v(db, d);
  dg_v += dy.cwiseProduct(xhat).colwise().sum();
  db_v += dy.colwise().sum();
  Mat<S> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    RowVec<S> dxhat = dy.row(i).cwiseProduct(g);
    const S mean_dxhat = dxhat.mean();
    const S mean_dxhat_xhat = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i) = rstd(i) * (dxhat.array() - mean_dxhat - xhat.row(i).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

template <class S>
S gelu(S u) {
  const S t = std::tanh(S(kGeluC) * (u + S(kGeluA) * u * u * u));
  return S(0.5) * u * (S(1) + t);
}

template <class S>
S gelu_grad(S u) {
  const S t = std::tanh(S(kGeluC) * (u + S(kGeluA) * u * u * u));
  return S(0.5) * (S(1) + t) + S(0.5) * u * (S(1) - t * t) * S(kGeluC) * (S(1) + S(3 * kGeluA) * u * u);
}

}  // namespace

void check_tokens(const ModelConfig& cfg, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw InputError("token sequence is empty");
  if (tokens.size() > static_cast<std::size_t>(cfg.max_seq_len))
    throw InputError("sequence length " + std::to_string(tokens.size()) + " exceeds max_seq_len " +
                     std::to_string(cfg.max_seq_len));
  for (TokenId t : tokens)
    if (t < 0 || t >= cfg.vocab_size)
      throw InputError("token id " + std::to_string(t) + " outside [0, " + std::to_string(cfg.vocab_size) + ")");
}

template <class S>
ForwardResult<S> forward(const BasicModel<S>& model, std::span<const TokenId> tokens, ForwardCache<S>* cache) {
  const ModelConfig& cfg = model.config;
  check_tokens(cfg, tokens);
  const auto& L = model.layout;
  const int n = static_cast<int>(tokens.size());
  const int d = cfg.d_model, f = cfg.d_ff, H = cfg.n_heads, dh = d / H;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  auto tok_emb = model.mat(L.tok_emb, cfg.vocab_size, d);
  auto pos_emb = model.mat(L.pos_emb, cfg.max_seq_len, d);
  Mat<S> x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = tok_emb.row(tokens[i]) + pos_emb.row(i);

  LayerCache<S> scratch;
  if (cache) {
    cache->tokens.assign(tokens.begin(), tokens.end());
    cache->layers.assign(cfg.n_layers, LayerCache<S>{});
  }

  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerSlots& s = L.layers[l];
    LayerCache<S>& c = cache ? cache->layers[l] : scratch;
    c.x_in = x;
    layer_norm<S>(x, model.vec(s.ln1_g, d), model.vec(s.ln1_b, d), c.xhat1, c.rstd1, c.a);
    c.q.noalias() = c.a * model.mat(s.wq, d, d);
    c.q.rowwise() += model.vec(s.bq, d);
    c.k.noalias() = c.a * model.mat(s.wk, d, d);
    c.v.noalias() = c.a * model.mat(s.wv, d, d);
    c.v.rowwise() += model.vec(s.bv, d);

    c.ctx.resize(n, d);
    c.probs.resize(H);
    for (int h = 0; h < H; ++h) {
      Mat<S>& P = c.probs[h];
      P.noalias() = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose();
      for (int i = 0; i < n; ++i) {
        auto row = P.row(i);
        const S mx = (row.head(i + 1) * scale).maxCoeff();
        S sum = 0;
        for (int j = 0; j <= i; ++j) {
          const S e = std::exp(row(j) * scale - mx);
          row(j) = e;
          sum += e;
        }
        row.head(i + 1) /= sum;
        row.tail(n - i - 1).setZero();
      }
      c.ctx.middleCols(h * dh, dh).noalias() = P * c.v.middleCols(h * dh, dh);
    }
    c.x_mid = x;
    c.x_mid.noalias() += c.ctx * model.mat(s.wo, d, d);
    c.x_mid.rowwise() += model.vec(s.bo, d);

    layer_norm<S>(c.x_mid, model.vec(s.ln2_g, d), model.vec(s.ln2_b, d), c.xhat2, c.rstd2, c.m);
    c.u.noalias() = c.m * model.mat(s.w1, d, f);
    c.u.rowwise() += model.vec(s.b1, f);
    c.z = c.u.unaryExpr([](S v) { return gelu(v); });
    x = c.x_mid;
    x.noalias() += c.z * model.mat(s.w2, f, d);
    x.rowwise() += model.vec(s.b2, d);
  }

  ForwardResult<S> out;
  Mat<S> xhat_f;
  RowVec<S> rstd_f;
  layer_norm<S>(x, model.vec(L.lnf_g, d), model.vec(L.lnf_b, d), xhat_f, rstd_f, out.hidden);
  out.logits.noalias() = out.hidden * model.mat(L.w_out, d, cfg.vocab_size);
  out.logits.rowwise() += model.vec(L.b_out, cfg.vocab_size);
  if (cache) {
    cache->x_final = std::move(x);
    cache->xhat_f = std::move(xhat_f);
    cache->rstd_f = std::move(rstd_f);
  }
  return out;
}

template <class S>
void backward(const BasicModel<S>& model, const ForwardCache<S>& cache, const Mat<S>& d_logits, const Mat<S>* d_hidden,
              FlatVec<S>& grad, const BackwardOptions& opts) {
  const ModelConfig& cfg = model.config;
  const auto& L = model.layout;
  const int n = static_cast<int>(cache.tokens.size());
  const int d = cfg.d_model, f = cfg.d_ff, H = cfg.n_heads, dh = d / H, V = cfg.vocab_size;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  if (grad.size() != model.params.size()) grad.assign(model.params.size(), S(0));

  auto gmat = [&grad](std::size_t off, int r, int c) { return Eigen::Map<Mat<S>>(grad.data() + off, r, c); };
  auto gvec = [&grad](std::size_t off, int c) { return Eigen::Map<RowVec<S>>(grad.data() + off, c); };

  // Final norm output (the hidden states) feeds the output projection.
  const auto g_f = model.vec(L.lnf_g, d);
  Mat<S> hidden = cache.xhat_f.array().rowwise() * g_f.array();
  hidden.rowwise() += model.vec(L.lnf_b, d);
  gmat(L.w_out, d, V).noalias() += hidden.transpose() * d_logits;
  gvec(L.b_out, V) += d_logits.colwise().sum();
  Mat<S> dh_out = d_logits * model.mat(L.w_out, d, V).transpose();
  if (d_hidden) dh_out += *d_hidden;
  Mat<S> dx = layer_norm_backward<S>(dh_out, cache.xhat_f, cache.rstd_f, g_f, grad.data() + L.lnf_g,
                                     grad.data() + L.lnf_b);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerSlots& s = L.layers[l];
    const LayerCache<S>& c = cache.layers[l];

    // Feed-forward block.
    gmat(s.w2, f, d).noalias() += c.z.transpose() * dx;
    gvec(s.b2, d) += dx.colwise().sum();
    Mat<S> dz = dx * model.mat(s.w2, f, d).transpose();
    Mat<S> du = opts.corrupt_gelu_derivative ? dz : Mat<S>(dz.cwiseProduct(c.u.unaryExpr([](S v) { return gelu_grad(v); })));
    gmat(s.w1, d, f).noalias() += c.m.transpose() * du;
    gvec(s.b1, f) += du.colwise().sum();
    Mat<S> dm = du * model.mat(s.w1, d, f).transpose();
    Mat<S> dx_mid = dx + layer_norm_backward<S>(dm, c.xhat2, c.rstd2, model.vec(s.ln2_g, d), grad.data() + s.ln2_g,
                                                grad.data() + s.ln2_b);

    // Attention block.
    gmat(s.wo, d, d).noalias() += c.ctx.transpose() * dx_mid;
    gvec(s.bo, d) += dx_mid.colwise().sum();
    Mat<S> dctx = dx_mid * model.mat(s.wo, d, d).transpose();
    Mat<S> dq(n, d), dk(n, d), dv(n, d);
    for (int h = 0; h < H; ++h) {
      const Mat<S>& P = c.probs[h];
      auto dctx_h = dctx.middleCols(h * dh, dh);
      Mat<S> dP = dctx_h * c.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh).noalias() = P.transpose() * dctx_h;
      Eigen::Matrix<S, Eigen::Dynamic, 1> row_dot = dP.cwiseProduct(P).rowwise().sum();
      Mat<S> dS = (P.array() * (dP.colwise() - row_dot).array()).matrix() * scale;
      dq.middleCols(h * dh, dh).noalias() = dS * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = dS.transpose() * c.q.middleCols(h * dh, dh);
    }
    gmat(s.wq, d, d).noalias() += c.a.transpose() * dq;
    gmat(s.wk, d, d).noalias() += c.a.transpose() * dk;
    gmat(s.wv, d, d).noalias() += c.a.transpose() * dv;
    gvec(s.bq, d) += dq.colwise().sum();
    gvec(s.bv, d) += dv.colwise().sum();
    Mat<S> da = dq * model.mat(s.wq, d, d).transpose();
    da.noalias() += dk * model.mat(s.wk, d, d).transpose();
    da.noalias() += dv * model.mat(s.wv, d, d).transpose();
    dx = dx_mid + layer_norm_backward<S>(da, c.xhat1, c.rstd1, model.vec(s.ln1_g, d), grad.data() + s.ln1_g,
                                         grad.data() + s.ln1_b);
  }

  auto d_tok = gmat(L.tok_emb, V, d);
  auto d_pos = gmat(L.pos_emb, cfg.max_seq_len, d);
  for (int i = 0; i < n; ++i) {
    d_tok.row(cache.tokens[i]) += dx.row(i);
    d_pos.row(i) += dx.row(i);
  }
}

template <class S>
IncrementalDecoder<S>::IncrementalDecoder(const BasicModel<S>& model) : model_(model) {
  reset();
}

template <class S>
void IncrementalDecoder<S>::reset() {
  const auto& cfg = model_.config;
  k_cache_.assign(cfg.n_layers, Mat<S>(cfg.max_seq_len, cfg.d_model));
  v_cache_.assign(cfg.n_layers, Mat<S>(cfg.max_seq_len, cfg.d_model));
  pos_ = 0;
}

template <class S>
RowVec<S> IncrementalDecoder<S>::step(TokenId token) {
  const ModelConfig& cfg = model_.config;
  if (pos_ >= cfg.max_seq_len) throw InputError("decoder position exceeds max_seq_len");
  if (token < 0 || token >= cfg.vocab_size) throw InputError("token id out of range");
  const auto& L = model_.layout;
  const int d = cfg.d_model, f = cfg.d_ff, H = cfg.n_heads, dh = d / H;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const int t = pos_;

  Mat<S> x = model_.mat(L.tok_emb, cfg.vocab_size, d).row(token) + model_.mat(L.pos_emb, cfg.max_seq_len, d).row(t);
  Mat<S> xhat, y;
  RowVec<S> rstd;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerSlots& s = L.layers[l];
    layer_norm<S>(x, model_.vec(s.ln1_g, d), model_.vec(s.ln1_b, d), xhat, rstd, y);
    RowVec<S> q = y * model_.mat(s.wq, d, d) + model_.vec(s.bq, d);
    k_cache_[l].row(t) = y * model_.mat(s.wk, d, d);
    v_cache_[l].row(t) = y * model_.mat(s.wv, d, d) + model_.vec(s.bv, d);
    RowVec<S> ctx(d);
    for (int h = 0; h < H; ++h) {
      auto keys = k_cache_[l].block(0, h * dh, t + 1, dh);
      RowVec<S> scores = (q.segment(h * dh, dh) * keys.transpose()) * scale;
      const S mx = scores.maxCoeff();
      scores = (scores.array() - mx).exp();
      scores /= scores.sum();
      ctx.segment(h * dh, dh).noalias() = scores * v_cache_[l].block(0, h * dh, t + 1, dh);
    }
    Mat<S> x_mid = x;
    x_mid.noalias() += ctx * model_.mat(s.wo, d, d);
    x_mid += model_.vec(s.bo, d);
    layer_norm<S>(x_mid, model_.vec(s.ln2_g, d), model_.vec(s.ln2_b, d), xhat, rstd, y);
    Mat<S> u = y * model_.mat(s.w1, d, f);
    u += model_.vec(s.b1, f);
    u = u.unaryExpr([](S v) { return gelu(v); });
    x = x_mid;
    x.noalias() += u * model_.mat(s.w2, f, d);
    x += model_.vec(s.b2, d);
  }
  layer_norm<S>(x, model_.vec(L.lnf_g, d), model_.vec(L.lnf_b, d), xhat, rstd, y);
  RowVec<S> logits = y * model_.mat(L.w_out, d, cfg.vocab_size) + model_.vec(L.b_out, cfg.vocab_size);
  ++pos_;
  return logits;
}

template ForwardResult<float> forward(const BasicModel<float>&, std::span<const TokenId>, ForwardCache<float>*);
template ForwardResult<double> forward(const BasicModel<double>&, std::span<const TokenId>, ForwardCache<double>*);
template void backward(const BasicModel<float>&, const ForwardCache<float>&, const Mat<float>&, const Mat<float>*,
                       FlatVec<float>&, const BackwardOptions&);
template void backward(const BasicModel<double>&, const ForwardCache<double>&, const Mat<double>&, const Mat<double>*,
                       FlatVec<double>&, const BackwardOptions&);
template class IncrementalDecoder<float>;
template class IncrementalDecoder<double>;

}  // namespace uavd
