// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

// Micro encoder-decoder transformer.
//
// Pre-layer-norm blocks, sinusoidal positions, multi-head attention without
// biases, GELU feed-forward, and an output projection tied to the input
// embedding. Every sequence is processed on its own (no padding), so there are
// no padding masks; the decoder self-attention is causal. Gradients are
// written by hand, layer by layer, into a flat buffer that mirrors the
// parameter buffer.

#ifndef ZETT_SEQ2SEQ_HPP_
#define ZETT_SEQ2SEQ_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "zett/backend.hpp"
#include "zett/common.hpp"
#include "zett/tokenizer.hpp"

namespace zett {

struct ModelConfig {
  int d_model = 64;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ffn_dim = 128;
  int max_input_len = 128;
  int max_output_len = 64;
  double dropout = 0.0;
  int vocab_size = 0;

  void validate() const {
    if (d_model <= 0 || heads <= 0 || d_model % heads != 0)
      throw DataError("model config: d_model must be a positive multiple of heads");
    if (encoder_layers < 0 || decoder_layers < 0 || ffn_dim <= 0)
      throw DataError("model config: layer counts must be >= 0 and ffn_dim > 0");
    if (max_input_len < 1 || max_output_len < 1)
      throw DataError("model config: lengths must be >= 1");
    if (vocab_size < tok::kNumReserved)
      throw DataError("model config: vocab_size must cover the reserved tokens");
    if (dropout < 0.0 || dropout >= 1.0) throw DataError("model config: dropout must be in [0, 1)");
  }

  nlohmann::json to_json() const {
    return {{"d_model", d_model},         {"heads", heads},
            {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
            {"ffn_dim", ffn_dim},         {"max_input_len", max_input_len},
            {"max_output_len", max_output_len}, {"dropout", dropout},
            {"vocab_size", vocab_size}};
  }
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.heads = j.value("heads", c.heads);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
    c.max_input_len = j.value("max_input_len", c.max_input_len);
    c.max_output_len = j.value("max_output_len", c.max_output_len);
    c.dropout = j.value("dropout", c.dropout);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    return c;
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * cols; }
};

namespace nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;

inline constexpr double kLnEps = 1e-5;

template <typename T>
struct LnCache {
  Mat<T> xhat;
  ColVec<T> rstd;
};

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, const CMap<T>& g, const CMap<T>& b, LnCache<T>* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat<T> xhat(n, d);
  ColVec<T> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix();
    const T var = centered.squaredNorm() / static_cast<T>(d);
    rstd(i) = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    xhat.row(i) = centered * rstd(i);
  }
  Mat<T> y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
Mat<T> layer_norm_back(const Mat<T>& dy, const CMap<T>& g, const LnCache<T>& c, MMap<T> dg,
                       MMap<T> db) {
  dg.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.row(0) += dy.colwise().sum();
  const Eigen::Index d = dy.cols();
  Mat<T> dxhat = dy.array().rowwise() * g.row(0).array();
  Mat<T> dx(dy.rows(), d);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T m1 = dxhat.row(i).mean();
    const T m2 = dxhat.row(i).dot(c.xhat.row(i)) / static_cast<T>(d);
    dx.row(i) = (dxhat.row(i).array() - m1 - c.xhat.row(i).array() * m2) * c.rstd(i);
  }
  return dx;
}

template <typename T>
struct AttnCache {
  Mat<T> xq, xkv, q, k, v, o;
  std::vector<Mat<T>> p;
};

/// Multi-head attention of queries from xq over precomputed keys/values.
template <typename T>
Mat<T> attend(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int heads, bool causal,
              std::vector<Mat<T>>* probs) {
  const Eigen::Index lq = q.rows(), lk = k.rows(), d = q.cols(), dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  Mat<T> o(lq, d);
  if (probs) probs->resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Mat<T> s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
    for (Eigen::Index i = 0; i < lq; ++i) {
      const Eigen::Index lim = causal ? std::min<Eigen::Index>(i + 1, lk) : lk;
      const T mx = s.row(i).head(lim).maxCoeff();
      s.row(i).head(lim) = (s.row(i).head(lim).array() - mx).exp().matrix();
      s.row(i).head(lim) /= s.row(i).head(lim).sum();
      if (lim < lk) s.row(i).tail(lk - lim).setZero();
    }
    o.middleCols(h * dh, dh).noalias() = s * v.middleCols(h * dh, dh);
    if (probs) (*probs)[static_cast<std::size_t>(h)] = std::move(s);
  }
  return o;
}

template <typename T>
Mat<T> attention(const Mat<T>& xq, const Mat<T>& xkv, const CMap<T>& wq, const CMap<T>& wk,
                 const CMap<T>& wv, const CMap<T>& wo, int heads, bool causal,
                 AttnCache<T>* cache) {
  Mat<T> q = xq * wq;
  Mat<T> k = xkv * wk;
  Mat<T> v = xkv * wv;
  std::vector<Mat<T>> probs;
  Mat<T> o = attend(q, k, v, heads, causal, cache ? &probs : nullptr);
  Mat<T> out = o * wo;
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
    cache->p = std::move(probs);
  }
  return out;
}

/// Returns (d xq, d xkv).
template <typename T>
std::pair<Mat<T>, Mat<T>> attention_back(const Mat<T>& dout, const CMap<T>& wq,
                                         const CMap<T>& wk, const CMap<T>& wv,
                                         const CMap<T>& wo, int heads, const AttnCache<T>& c,
                                         MMap<T> dwq, MMap<T> dwk, MMap<T> dwv, MMap<T> dwo) {
  const Eigen::Index d = c.q.cols(), dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  dwo.noalias() += c.o.transpose() * dout;
  const Mat<T> d_o = dout * wo.transpose();
  Mat<T> dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Mat<T>& p = c.p[static_cast<std::size_t>(h)];
    const auto doh = d_o.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * doh;
    Mat<T> dp = doh * c.v.middleCols(h * dh, dh).transpose();
    const ColVec<T> rowdot = (dp.array() * p.array()).rowwise().sum();
    Mat<T> ds = (p.array() * (dp.array().colwise() - rowdot.array())) * scale;
    dq.middleCols(h * dh, dh).noalias() = ds * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * c.q.middleCols(h * dh, dh);
  }
  dwq.noalias() += c.xq.transpose() * dq;
  dwk.noalias() += c.xkv.transpose() * dk;
  dwv.noalias() += c.xkv.transpose() * dv;
  Mat<T> dxq = dq * wq.transpose();
  Mat<T> dxkv = dk * wk.transpose();
  dxkv.noalias() += dv * wv.transpose();
  return {std::move(dxq), std::move(dxkv)};
}

// GELU, tanh approximation; smooth everywhere so finite differences behave.
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;

template <typename T>
struct FfnCache {
  Mat<T> x, pre, act;
};

template <typename T>
Mat<T> ffn(const Mat<T>& x, const CMap<T>& w1, const CMap<T>& b1, const CMap<T>& w2,
           const CMap<T>& b2, FfnCache<T>* cache) {
  Mat<T> pre = x * w1;
  pre.rowwise() += b1.row(0);
  Mat<T> act = pre.unaryExpr([](T u) {
    return static_cast<T>(0.5) * u *
           (T(1) + std::tanh(static_cast<T>(kGeluC) * (u + static_cast<T>(kGeluA) * u * u * u)));
  });
  Mat<T> out = act * w2;
  out.rowwise() += b2.row(0);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return out;
}

template <typename T>
Mat<T> ffn_back(const Mat<T>& dout, const CMap<T>& w1, const CMap<T>& w2, const FfnCache<T>& c,
                MMap<T> dw1, MMap<T> db1, MMap<T> dw2, MMap<T> db2) {
  dw2.noalias() += c.act.transpose() * dout;
  db2.row(0) += dout.colwise().sum();
  Mat<T> dact = dout * w2.transpose();
  const Mat<T> gprime = c.pre.unaryExpr([](T u) {
    const T kc = static_cast<T>(kGeluC), ka = static_cast<T>(kGeluA);
    const T th = std::tanh(kc * (u + ka * u * u * u));
    return static_cast<T>(0.5) * (T(1) + th) +
           static_cast<T>(0.5) * u * (T(1) - th * th) * kc * (T(1) + T(3) * ka * u * u);
  });
  Mat<T> dpre = dact.cwiseProduct(gprime);
  dw1.noalias() += c.x.transpose() * dpre;
  db1.row(0) += dpre.colwise().sum();
  return dpre * w1.transpose();
}

}  // namespace nn

/// Encoder output plus per-decoder-layer cross-attention keys and values.
template <typename T>
struct EncoderState {
  nn::Mat<T> memory;
  std::vector<nn::Mat<T>> cross_k, cross_v;
};

template <typename T>
class Seq2SeqModel {
 public:
  using Scalar = T;
  using Mat = nn::Mat<T>;

  /// All weights zero (layer-norm gains included).
  explicit Seq2SeqModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build_layout();
    params_.assign(total_, T(0));
    build_positions();
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
  std::size_t num_params() const noexcept { return total_; }
  std::span<T> params() noexcept { return params_; }
  std::span<const T> params() const noexcept { return params_; }

  /// Scaled-normal initialization from SplitMix64::substream(seed, "init").
  void init_random(std::uint64_t seed) {
    SplitMix64 rng = SplitMix64::substream(seed, "init");
    const double d = cfg_.d_model, f = cfg_.ffn_dim;
    const double depth = std::sqrt(2.0 * std::max(1, cfg_.encoder_layers + cfg_.decoder_layers));
    for (const auto& t : tensors_) {
      const std::string& n = t.name;
      const auto ends = [&](std::string_view s) {
        return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
      };
      double stdev = 0.0, constant = 0.0;
      if (ends(".g"))
        constant = 1.0;
      else if (ends(".b") || ends(".b1") || ends(".b2"))
        constant = 0.0;
      else if (ends(".wo"))
        stdev = 1.0 / std::sqrt(d) / depth;
      else if (ends(".w2"))
        stdev = 1.0 / std::sqrt(f) / depth;
      else
        stdev = 1.0 / std::sqrt(d);
      for (std::size_t i = 0; i < t.size(); ++i)
        params_[t.offset + i] = static_cast<T>(stdev > 0 ? stdev * rng.normal() : constant);
    }
  }

  EncoderState<T> encode(std::span<const TokenId> input) const {
    check_input(input);
    EncoderState<T> st;
    st.memory = run_encoder(input, nullptr, nullptr);
    for (const auto& L : dec_) {
      st.cross_k.push_back(st.memory * w(L.cross.wk));
      st.cross_v.push_back(st.memory * w(L.cross.wv));
    }
    return st;
  }

  /// Logits for every decoder position given decoder inputs (PAD-prefixed).
  Mat decoder_logits(const EncoderState<T>& st, std::span<const TokenId> dec_in) const {
    check_output_len(dec_in.size());
    Mat y = embed_rows(dec_in);
    for (const auto& L : dec_) {
      const std::size_t li = static_cast<std::size_t>(&L - dec_.data());
      Mat a = nn::layer_norm<T>(y, w(L.ln1.g), w(L.ln1.b), nullptr);
      y += nn::attention<T>(a, a, w(L.self.wq), w(L.self.wk), w(L.self.wv), w(L.self.wo),
                            cfg_.heads, true, nullptr);
      Mat b = nn::layer_norm<T>(y, w(L.ln2.g), w(L.ln2.b), nullptr);
      Mat q = b * w(L.cross.wq);
      y += nn::attend<T>(q, st.cross_k[li], st.cross_v[li], cfg_.heads, false, nullptr) *
           w(L.cross.wo);
      Mat c = nn::layer_norm<T>(y, w(L.ln3.g), w(L.ln3.b), nullptr);
      y += nn::ffn<T>(c, w(L.ffn.w1), w(L.ffn.b1), w(L.ffn.w2), w(L.ffn.b2), nullptr);
    }
    Mat h = nn::layer_norm<T>(y, w(dec_ln_.g), w(dec_ln_.b), nullptr);
    return h * w(embed_).transpose();
  }

  /// Next-token logits after `prefix` (the decoder is fed PAD + prefix).
  std::vector<T> forward(std::span<const TokenId> input, std::span<const TokenId> prefix) const {
    return next_logits(encode(input), prefix);
  }

  std::vector<T> next_logits(const EncoderState<T>& st, std::span<const TokenId> prefix) const {
    const std::vector<TokenId> dec_in = shift_right(prefix, prefix.size() + 1);
    const Mat logits = decoder_logits(st, dec_in);
    const auto last = logits.row(logits.rows() - 1);
    return std::vector<T>(last.data(), last.data() + last.size());
  }

  /// Row-by-row batched forward; identical to independent calls.
  std::vector<std::vector<T>> forward_batch(const std::vector<std::vector<TokenId>>& inputs,
                                            const std::vector<std::vector<TokenId>>& prefixes) const {
    if (inputs.size() != prefixes.size()) throw DataError("forward_batch: size mismatch");
    std::vector<std::vector<T>> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) out.push_back(forward(inputs[i], prefixes[i]));
    return out;
  }

  /// Mean token negative log-likelihood under teacher forcing.
  double loss(std::span<const TokenId> input, std::span<const TokenId> target) const {
    check_target(target);
    const EncoderState<T> st = encode(input);
    const Mat logits = decoder_logits(st, shift_right(target, target.size()));
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const auto row = logits.row(i);
      const auto lp = log_softmax(row.data(), row.data() + row.size());
      total -= lp[static_cast<std::size_t>(target[static_cast<std::size_t>(i)])];
    }
    return total / static_cast<double>(target.size());
  }

  /// Loss plus its gradient, added into `grad` (same layout as params()).
  /// A non-null `dropout_rng` enables dropout on every sublayer output.
  double loss_and_grad(std::span<const TokenId> input, std::span<const TokenId> target,
                       std::span<T> grad, SplitMix64* dropout_rng = nullptr) const {
    check_target(target);
    check_input(input);
    if (grad.size() != total_) throw DataError("loss_and_grad: gradient buffer size mismatch");
    const bool drop = dropout_rng && cfg_.dropout > 0.0;
    SplitMix64* rng = drop ? dropout_rng : nullptr;

    std::vector<EncCache> ecache(enc_.size());
    nn::LnCache<T> enc_final;
    const Mat memory = run_encoder(input, &ecache, &enc_final, rng);

    const std::vector<TokenId> dec_in = shift_right(target, target.size());
    std::vector<DecCache> dcache(dec_.size());
    Mat y = embed_rows(dec_in);
    for (std::size_t li = 0; li < dec_.size(); ++li) {
      const auto& L = dec_[li];
      auto& c = dcache[li];
      Mat a = nn::layer_norm<T>(y, w(L.ln1.g), w(L.ln1.b), &c.ln1);
      y += maybe_drop(nn::attention<T>(a, a, w(L.self.wq), w(L.self.wk), w(L.self.wv),
                                       w(L.self.wo), cfg_.heads, true, &c.self),
                      c.drop1, rng);
      Mat b = nn::layer_norm<T>(y, w(L.ln2.g), w(L.ln2.b), &c.ln2);
      y += maybe_drop(nn::attention<T>(b, memory, w(L.cross.wq), w(L.cross.wk), w(L.cross.wv),
                                       w(L.cross.wo), cfg_.heads, false, &c.cross),
                      c.drop2, rng);
      Mat cc = nn::layer_norm<T>(y, w(L.ln3.g), w(L.ln3.b), &c.ln3);
      y += maybe_drop(nn::ffn<T>(cc, w(L.ffn.w1), w(L.ffn.b1), w(L.ffn.w2), w(L.ffn.b2), &c.ffn),
                      c.drop3, rng);
    }
    nn::LnCache<T> dec_final;
    const Mat h = nn::layer_norm<T>(y, w(dec_ln_.g), w(dec_ln_.b), &dec_final);
    const Mat logits = h * w(embed_).transpose();

    // d loss / d logits = (softmax - onehot) / n
    const Eigen::Index n = logits.rows();
    const T inv_n = T(1) / static_cast<T>(n);
    Mat dlogits(n, logits.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = logits.row(i);
      const auto lp = log_softmax(row.data(), row.data() + row.size());
      const std::size_t tgt = static_cast<std::size_t>(target[static_cast<std::size_t>(i)]);
      total -= lp[tgt];
      for (Eigen::Index j = 0; j < logits.cols(); ++j)
        dlogits(i, j) = static_cast<T>(std::exp(lp[static_cast<std::size_t>(j)])) * inv_n;
      dlogits(i, static_cast<Eigen::Index>(tgt)) -= inv_n;
    }

    g(grad, embed_).noalias() += dlogits.transpose() * h;
    Mat dy = nn::layer_norm_back<T>(dlogits * w(embed_), w(dec_ln_.g), dec_final,
                                    g(grad, dec_ln_.g), g(grad, dec_ln_.b));
    Mat dmemory = Mat::Zero(memory.rows(), memory.cols());
    for (std::size_t li = dec_.size(); li-- > 0;) {
      const auto& L = dec_[li];
      const auto& c = dcache[li];
      {
        Mat dr = undrop(dy, c.drop3);
        Mat dx = nn::ffn_back<T>(dr, w(L.ffn.w1), w(L.ffn.w2), c.ffn, g(grad, L.ffn.w1),
                                 g(grad, L.ffn.b1), g(grad, L.ffn.w2), g(grad, L.ffn.b2));
        dy += nn::layer_norm_back<T>(dx, w(L.ln3.g), c.ln3, g(grad, L.ln3.g), g(grad, L.ln3.b));
      }
      {
        Mat dr = undrop(dy, c.drop2);
        auto [dq, dkv] = nn::attention_back<T>(dr, w(L.cross.wq), w(L.cross.wk), w(L.cross.wv),
                                               w(L.cross.wo), cfg_.heads, c.cross,
                                               g(grad, L.cross.wq), g(grad, L.cross.wk),
                                               g(grad, L.cross.wv), g(grad, L.cross.wo));
        dmemory += dkv;
        dy += nn::layer_norm_back<T>(dq, w(L.ln2.g), c.ln2, g(grad, L.ln2.g), g(grad, L.ln2.b));
      }
      {
        Mat dr = undrop(dy, c.drop1);
        auto [dq, dkv] = nn::attention_back<T>(dr, w(L.self.wq), w(L.self.wk), w(L.self.wv),
                                               w(L.self.wo), cfg_.heads, c.self,
                                               g(grad, L.self.wq), g(grad, L.self.wk),
                                               g(grad, L.self.wv), g(grad, L.self.wo));
        dq += dkv;
        dy += nn::layer_norm_back<T>(dq, w(L.ln1.g), c.ln1, g(grad, L.ln1.g), g(grad, L.ln1.b));
      }
    }
    embed_back(dec_in, dy, grad);

    Mat dx = nn::layer_norm_back<T>(dmemory, w(enc_ln_.g), enc_final, g(grad, enc_ln_.g),
                                    g(grad, enc_ln_.b));
    for (std::size_t li = enc_.size(); li-- > 0;) {
      const auto& L = enc_[li];
      const auto& c = ecache[li];
      {
        Mat dr = undrop(dx, c.drop2);
        Mat db = nn::ffn_back<T>(dr, w(L.ffn.w1), w(L.ffn.w2), c.ffn, g(grad, L.ffn.w1),
                                 g(grad, L.ffn.b1), g(grad, L.ffn.w2), g(grad, L.ffn.b2));
        dx += nn::layer_norm_back<T>(db, w(L.ln2.g), c.ln2, g(grad, L.ln2.g), g(grad, L.ln2.b));
      }
      {
        Mat dr = undrop(dx, c.drop1);
        auto [dq, dkv] = nn::attention_back<T>(dr, w(L.attn.wq), w(L.attn.wk), w(L.attn.wv),
                                               w(L.attn.wo), cfg_.heads, c.attn,
                                               g(grad, L.attn.wq), g(grad, L.attn.wk),
                                               g(grad, L.attn.wv), g(grad, L.attn.wo));
        dq += dkv;
        dx += nn::layer_norm_back<T>(dq, w(L.ln1.g), c.ln1, g(grad, L.ln1.g), g(grad, L.ln1.b));
      }
    }
    embed_back(input, dx, grad);
    return total / static_cast<double>(n);
  }

  /// Index of a tensor by name; throws when absent.
  std::size_t tensor_index(const std::string& name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name == name) return i;
    throw DataError("no tensor named " + name);
  }

 private:
  struct Ln {
    int g, b;
  };
  struct Attn {
    int wq, wk, wv, wo;
  };
  struct Ffn {
    int w1, b1, w2, b2;
  };
  struct EncLayer {
    Ln ln1;
    Attn attn;
    Ln ln2;
    Ffn ffn;
  };
  struct DecLayer {
    Ln ln1;
    Attn self;
    Ln ln2;
    Attn cross;
    Ln ln3;
    Ffn ffn;
  };
  struct EncCache {
    nn::LnCache<T> ln1, ln2;
    nn::AttnCache<T> attn;
    nn::FfnCache<T> ffn;
    Mat drop1, drop2;
  };
  struct DecCache {
    nn::LnCache<T> ln1, ln2, ln3;
    nn::AttnCache<T> self, cross;
    nn::FfnCache<T> ffn;
    Mat drop1, drop2, drop3;
  };

  int add_tensor(const std::string& name, int rows, int cols) {
    tensors_.push_back({name, rows, cols, total_});
    total_ += static_cast<std::size_t>(rows) * cols;
    return static_cast<int>(tensors_.size() - 1);
  }
  Ln add_ln(const std::string& p) {
    return {add_tensor(p + ".g", 1, cfg_.d_model), add_tensor(p + ".b", 1, cfg_.d_model)};
  }
  Attn add_attn(const std::string& p) {
    const int d = cfg_.d_model;
    return {add_tensor(p + ".wq", d, d), add_tensor(p + ".wk", d, d), add_tensor(p + ".wv", d, d),
            add_tensor(p + ".wo", d, d)};
  }
  Ffn add_ffn(const std::string& p) {
    const int d = cfg_.d_model, f = cfg_.ffn_dim;
    return {add_tensor(p + ".w1", d, f), add_tensor(p + ".b1", 1, f), add_tensor(p + ".w2", f, d),
            add_tensor(p + ".b2", 1, d)};
  }

  void build_layout() {
    embed_ = add_tensor("embed", cfg_.vocab_size, cfg_.d_model);
    for (int i = 0; i < cfg_.encoder_layers; ++i) {
      const std::string p = "encoder." + std::to_string(i);
      EncLayer L;
      L.ln1 = add_ln(p + ".ln1");
      L.attn = add_attn(p + ".attn");
      L.ln2 = add_ln(p + ".ln2");
      L.ffn = add_ffn(p + ".ffn");
      enc_.push_back(L);
    }
    enc_ln_ = add_ln("encoder.ln_f");
    for (int i = 0; i < cfg_.decoder_layers; ++i) {
      const std::string p = "decoder." + std::to_string(i);
      DecLayer L;
      L.ln1 = add_ln(p + ".ln1");
      L.self = add_attn(p + ".self");
      L.ln2 = add_ln(p + ".ln2");
      L.cross = add_attn(p + ".cross");
      L.ln3 = add_ln(p + ".ln3");
      L.ffn = add_ffn(p + ".ffn");
      dec_.push_back(L);
    }
    dec_ln_ = add_ln("decoder.ln_f");
  }

  void build_positions() {
    const int n = std::max(cfg_.max_input_len, cfg_.max_output_len);
    const int d = cfg_.d_model;
    positions_.resize(n, d);
    for (int p = 0; p < n; ++p)
      for (int i = 0; i < d; i += 2) {
        const double angle = p / std::pow(10000.0, static_cast<double>(i) / d);
        positions_(p, i) = static_cast<T>(std::sin(angle));
        if (i + 1 < d) positions_(p, i + 1) = static_cast<T>(std::cos(angle));
      }
  }

  nn::CMap<T> w(int idx) const {
    const auto& t = tensors_[static_cast<std::size_t>(idx)];
    return nn::CMap<T>(params_.data() + t.offset, t.rows, t.cols);
  }
  nn::MMap<T> g(std::span<T> grad, int idx) const {
    const auto& t = tensors_[static_cast<std::size_t>(idx)];
    return nn::MMap<T>(grad.data() + t.offset, t.rows, t.cols);
  }

  Mat embed_rows(std::span<const TokenId> ids) const {
    const auto E = w(embed_);
    const T scale = std::sqrt(static_cast<T>(cfg_.d_model));
    Mat x(static_cast<Eigen::Index>(ids.size()), cfg_.d_model);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= cfg_.vocab_size)
        throw DataError("token id " + std::to_string(ids[i]) + " outside model vocabulary");
      x.row(static_cast<Eigen::Index>(i)) =
          E.row(ids[i]) * scale + positions_.row(static_cast<Eigen::Index>(i));
    }
    return x;
  }

  void embed_back(std::span<const TokenId> ids, const Mat& dx, std::span<T> grad) const {
    auto dE = g(grad, embed_);
    const T scale = std::sqrt(static_cast<T>(cfg_.d_model));
    for (std::size_t i = 0; i < ids.size(); ++i)
      dE.row(ids[i]) += dx.row(static_cast<Eigen::Index>(i)) * scale;
  }

  Mat maybe_drop(Mat r, Mat& mask, SplitMix64* rng) const {
    if (!rng) return r;
    const double p = cfg_.dropout;
    mask.resize(r.rows(), r.cols());
    const T keep = static_cast<T>(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      mask.data()[i] = rng->uniform() < p ? T(0) : keep;
    return r.cwiseProduct(mask);
  }
  static Mat undrop(const Mat& d, const Mat& mask) {
    return mask.size() == 0 ? d : Mat(d.cwiseProduct(mask));
  }

  Mat run_encoder(std::span<const TokenId> input, std::vector<EncCache>* caches,
                  nn::LnCache<T>* final_cache, SplitMix64* rng = nullptr) const {
    Mat x = embed_rows(input);
    for (std::size_t li = 0; li < enc_.size(); ++li) {
      const auto& L = enc_[li];
      EncCache* c = caches ? &(*caches)[li] : nullptr;
      Mat a = nn::layer_norm<T>(x, w(L.ln1.g), w(L.ln1.b), c ? &c->ln1 : nullptr);
      Mat r = nn::attention<T>(a, a, w(L.attn.wq), w(L.attn.wk), w(L.attn.wv), w(L.attn.wo),
                               cfg_.heads, false, c ? &c->attn : nullptr);
      if (c) r = maybe_drop(std::move(r), c->drop1, rng);
      x += r;
      Mat b = nn::layer_norm<T>(x, w(L.ln2.g), w(L.ln2.b), c ? &c->ln2 : nullptr);
      Mat f = nn::ffn<T>(b, w(L.ffn.w1), w(L.ffn.b1), w(L.ffn.w2), w(L.ffn.b2),
                         c ? &c->ffn : nullptr);
      if (c) f = maybe_drop(std::move(f), c->drop2, rng);
      x += f;
    }
    return nn::layer_norm<T>(x, w(enc_ln_.g), w(enc_ln_.b), final_cache);
  }

  /// [PAD, seq[0], ..., seq[n-2]] of length n (T5-style decoder start).
  static std::vector<TokenId> shift_right(std::span<const TokenId> seq, std::size_t n) {
    std::vector<TokenId> out;
    out.reserve(n);
    out.push_back(tok::kPad);
    for (std::size_t i = 0; i + 1 < n && i < seq.size(); ++i) out.push_back(seq[i]);
    return out;
  }

  void check_input(std::span<const TokenId> input) const {
    if (input.empty()) throw DataError("model input is empty");
    if (input.size() > static_cast<std::size_t>(cfg_.max_input_len))
      throw DataError("input length " + std::to_string(input.size()) + " exceeds max_input_len " +
                      std::to_string(cfg_.max_input_len));
  }
  void check_output_len(std::size_t n) const {
    if (n > static_cast<std::size_t>(cfg_.max_output_len))
      throw DataError("output length " + std::to_string(n) + " exceeds max_output_len " +
                      std::to_string(cfg_.max_output_len));
  }
  void check_target(std::span<const TokenId> target) const {
    if (target.empty()) throw DataError("empty target sequence");
    check_output_len(target.size());
  }

  ModelConfig cfg_;
  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
  std::vector<T> params_;
  Mat positions_;
  int embed_ = 0;
  std::vector<EncLayer> enc_;
  Ln enc_ln_{};
  std::vector<DecLayer> dec_;
  Ln dec_ln_{};
};

/// ScoringBackend over a (shared, immutable) micro model.
template <typename T>
class Seq2SeqBackend final : public ScoringBackend {
 public:
  explicit Seq2SeqBackend(std::shared_ptr<const Seq2SeqModel<T>> model) : model_(std::move(model)) {}

  const Seq2SeqModel<T>& model() const noexcept { return *model_; }

  std::size_t vocab_size() const override {
    return static_cast<std::size_t>(model_->config().vocab_size);
  }

  std::size_t max_input_len() const override {
    return static_cast<std::size_t>(model_->config().max_input_len);
  }
  std::size_t max_output_len() const override {
    return static_cast<std::size_t>(model_->config().max_output_len);
  }

  std::vector<double> next_token_logprobs(std::span<const TokenId> input,
                                          std::span<const TokenId> prefix) const override {
    const auto logits = model_->forward(input, prefix);
    return log_softmax(logits.begin(), logits.end());
  }

  double sequence_logprob(std::span<const TokenId> input,
                          std::span<const TokenId> output) const override {
    if (output.empty()) return 0.0;
    const auto st = model_->encode(input);
    std::vector<TokenId> dec_in{tok::kPad};
    dec_in.insert(dec_in.end(), output.begin(), output.end() - 1);
    const auto logits = model_->decoder_logits(st, dec_in);
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const auto row = logits.row(i);
      total += log_softmax(row.data(), row.data() + row.size())
          [static_cast<std::size_t>(output[static_cast<std::size_t>(i)])];
    }
    return total;
  }

  std::unique_ptr<DecodeSession> open(std::span<const TokenId> input) const override {
    return std::make_unique<Session>(*model_, model_->encode(input));
  }

 private:
  class Session final : public DecodeSession {
   public:
    Session(const Seq2SeqModel<T>& m, EncoderState<T> st) : model_(m), state_(std::move(st)) {}
    std::vector<double> next_token_logprobs(std::span<const TokenId> prefix) override {
      const auto logits = model_.next_logits(state_, prefix);
      return log_softmax(logits.begin(), logits.end());
    }

   private:
    const Seq2SeqModel<T>& model_;
    EncoderState<T> state_;
  };

  std::shared_ptr<const Seq2SeqModel<T>> model_;
};

}  // namespace zett

#endif  // ZETT_SEQ2SEQ_HPP_
