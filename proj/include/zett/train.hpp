// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_TRAIN_HPP_
#define ZETT_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "zett/common.hpp"
#include "zett/seq2seq.hpp"

namespace zett {

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 3e-5;
  double warmup_ratio = 0.2;
  int epochs = 3;
  /// When positive, overrides epochs: train for exactly this many updates,
  /// reshuffling at every epoch boundary.
  int max_steps = 0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Global-norm clip; 0 disables.
  double max_grad_norm = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size <= 0) throw DataError("train config: batch_size must be positive");
    if (!(learning_rate > 0.0)) throw DataError("train config: learning_rate must be positive");
    if (warmup_ratio < 0.0 || warmup_ratio > 1.0)
      throw DataError("train config: warmup_ratio must lie in [0, 1]");
    if (epochs <= 0 && max_steps <= 0) throw DataError("train config: nothing to train");
  }

  nlohmann::json to_json() const {
    return {{"batch_size", batch_size}, {"learning_rate", learning_rate},
            {"warmup_ratio", warmup_ratio}, {"epochs", epochs},
            {"max_steps", max_steps}, {"weight_decay", weight_decay},
            {"beta1", beta1}, {"beta2", beta2}, {"adam_eps", adam_eps},
            {"max_grad_norm", max_grad_norm}, {"seed", seed}};
  }
};

struct TrainPair {
  std::vector<TokenId> input;
  std::vector<TokenId> target;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean batch loss per update
  std::size_t steps = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t total_train_steps(std::size_t n_pairs, const TrainConfig& cfg) {
  if (cfg.max_steps > 0) return static_cast<std::size_t>(cfg.max_steps);
  const std::size_t per_epoch =
      (n_pairs + static_cast<std::size_t>(cfg.batch_size) - 1) / static_cast<std::size_t>(cfg.batch_size);
  return per_epoch * static_cast<std::size_t>(cfg.epochs);
}

/// Linear warm-up to the base rate at step round(warmup_ratio * total), then
/// linear decay reaching 0 after the last step. `step` is 1-based.
inline double learning_rate_at(std::size_t step, std::size_t total, const TrainConfig& cfg) {
  const auto warm = static_cast<std::size_t>(std::llround(cfg.warmup_ratio * static_cast<double>(total)));
  const double base = cfg.learning_rate;
  if (warm > 0 && step <= warm) return base * static_cast<double>(step) / static_cast<double>(warm);
  if (total <= warm) return base;
  return base * static_cast<double>(total - std::min(step, total)) / static_cast<double>(total - warm);
}

/// Adam moments with decoupled weight decay.
template <typename T>
class AdamW {
 public:
  AdamW(std::size_t n, const TrainConfig& cfg) : m_(n, T(0)), v_(n, T(0)), cfg_(cfg) {}

  void step(std::span<T> params, std::span<const T> grad, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(cfg_.adam_eps);
    const T decay = static_cast<T>(lr * cfg_.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (T(1) - b1) * grad[i];
      v_[i] = b2 * v_[i] + (T(1) - b2) * grad[i] * grad[i];
      params[i] -= step_size * m_[i] / (std::sqrt(v_[i] * inv_bc2) + eps) + decay * params[i];
    }
  }

 private:
  std::vector<T> m_, v_;
  TrainConfig cfg_;
  std::uint64_t t_ = 0;
};

/// Mini-batch AdamW training under teacher forcing. Pair order is reshuffled
/// every epoch with SplitMix64::substream(seed, "train-shuffle", epoch).
/// Per-example gradients are computed into separate buffers and summed in
/// batch order, so the result does not depend on `threads`.
template <typename T>
TrainResult train(Seq2SeqModel<T>& model, const std::vector<TrainPair>& data,
                  const TrainConfig& cfg, unsigned threads = 1,
                  const std::function<void(std::size_t, double)>& on_step = {}) {
  cfg.validate();
  if (data.empty()) throw DataError("train: empty dataset");
  const std::size_t n = data.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t total = total_train_steps(n, cfg);
  const std::size_t np = model.num_params();

  AdamW<T> opt(np, cfg);
  std::vector<T> grad(np);
  const std::size_t slots = threads > 1 ? std::min(batch, n) : 1;
  std::vector<std::vector<T>> scratch(slots, std::vector<T>(np));
  std::vector<double> losses(batch);

  TrainResult result;
  std::vector<std::size_t> order;
  std::size_t cursor = n;  // forces a shuffle on the first step
  std::uint64_t epoch = 0;
  for (std::size_t step = 1; step <= total; ++step) {
    std::vector<std::size_t> idx;
    while (idx.size() < batch) {
      if (cursor >= n) {
        if (!idx.empty() && cfg.max_steps <= 0) break;  // epoch-bound batches
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng = SplitMix64::substream(cfg.seed, "train-shuffle", epoch++);
        shuffle(order, rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
      if (cfg.max_steps <= 0 && cursor >= n) break;
    }

    std::fill(grad.begin(), grad.end(), T(0));
    const auto example_grad = [&](std::size_t k, std::vector<T>& buf) {
      std::fill(buf.begin(), buf.end(), T(0));
      SplitMix64 drop = SplitMix64::substream(cfg.seed, "dropout", (step - 1) * batch + k);
      const TrainPair& p = data[idx[k]];
      losses[k] = model.loss_and_grad(p.input, p.target, buf, &drop);
    };
    if (slots == 1) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        example_grad(k, scratch[0]);
        for (std::size_t i = 0; i < np; ++i) grad[i] += scratch[0][i];
      }
    } else {
      for (std::size_t b0 = 0; b0 < idx.size(); b0 += slots) {
        const std::size_t cnt = std::min(slots, idx.size() - b0);
        parallel_for(cnt, threads, [&](std::size_t j) { example_grad(b0 + j, scratch[j]); });
        for (std::size_t j = 0; j < cnt; ++j)
          for (std::size_t i = 0; i < np; ++i) grad[i] += scratch[j][i];
      }
    }

    double mean_loss = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) mean_loss += losses[k];
    mean_loss /= static_cast<double>(idx.size());
    if (!std::isfinite(mean_loss)) {
      std::ostringstream os;
      os << "training diverged at step " << step << "/" << total << ": loss=" << mean_loss
         << ", lr=" << learning_rate_at(step, total, cfg)
         << ", last finite loss=" << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back());
      throw TrainingDiverged(os.str());
    }

    const T inv_b = T(1) / static_cast<T>(idx.size());
    double norm2 = 0.0;
    for (auto& gv : grad) {
      gv *= inv_b;
      norm2 += static_cast<double>(gv) * static_cast<double>(gv);
    }
    if (cfg.max_grad_norm > 0.0) {
      const double norm = std::sqrt(norm2);
      if (norm > cfg.max_grad_norm) {
        const T s = static_cast<T>(cfg.max_grad_norm / norm);
        for (auto& gv : grad) gv *= s;
      }
    }
    opt.step(model.params(), grad, learning_rate_at(step, total, cfg));
    result.loss_curve.push_back(mean_loss);
    if (on_step) on_step(step, mean_loss);
  }
  result.steps = total;
  return result;
}

}  // namespace zett

#endif  // ZETT_TRAIN_HPP_
