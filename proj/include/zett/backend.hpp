// Copyright 2026 The zett Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ZETT_BACKEND_HPP_
#define ZETT_BACKEND_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "zett/tokenizer.hpp"

namespace zett {

/// Incremental scoring state bound to one input sequence. Sessions are not
/// shared between threads.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;
  /// log P(next | input, prefix) for every vocabulary id.
  virtual std::vector<double> next_token_logprobs(std::span<const TokenId> prefix) = 0;
};

/// Anything that can supply conditional next-token distributions over the
/// shared vocabulary. The micro transformer is one implementation; tests
/// plug in scripted tables.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;

  virtual std::size_t vocab_size() const = 0;

  /// Longest input the backend accepts; callers truncate the context to fit.
  virtual std::size_t max_input_len() const { return static_cast<std::size_t>(-1); }
  /// Longest output sequence the backend can score.
  virtual std::size_t max_output_len() const { return static_cast<std::size_t>(-1); }

  virtual std::vector<double> next_token_logprobs(std::span<const TokenId> input,
                                                  std::span<const TokenId> prefix) const = 0;

  /// Sum of per-step log-probabilities of `output`, sentinels included.
  virtual double sequence_logprob(std::span<const TokenId> input,
                                  std::span<const TokenId> output) const {
    double total = 0.0;
    for (std::size_t t = 0; t < output.size(); ++t)
      total += next_token_logprobs(input, output.first(t))[static_cast<std::size_t>(output[t])];
    return total;
  }

  virtual std::unique_ptr<DecodeSession> open(std::span<const TokenId> input) const;
};

namespace detail {
class ForwardingSession final : public DecodeSession {
 public:
  ForwardingSession(const ScoringBackend& b, std::span<const TokenId> input)
      : backend_(b), input_(input.begin(), input.end()) {}
  std::vector<double> next_token_logprobs(std::span<const TokenId> prefix) override {
    return backend_.next_token_logprobs(input_, prefix);
  }

 private:
  const ScoringBackend& backend_;
  std::vector<TokenId> input_;
};
}  // namespace detail

inline std::unique_ptr<DecodeSession> ScoringBackend::open(std::span<const TokenId> input) const {
  return std::make_unique<detail::ForwardingSession>(*this, input);
}

/// Score of `output` given `input`: the plain sum of token log-probabilities,
/// no length normalization. With include_structural = false the sentinel and
/// terminator steps are left out of the sum (sensitivity analysis only).
inline double sequence_logprob(const ScoringBackend& backend, std::span<const TokenId> input,
                               std::span<const TokenId> output, bool include_structural = true) {
  if (output.empty()) return 0.0;
  if (include_structural) return backend.sequence_logprob(input, output);
  auto session = backend.open(input);
  double total = 0.0;
  for (std::size_t t = 0; t < output.size(); ++t) {
    if (tok::is_structural(output[t])) continue;
    total += session->next_token_logprobs(output.first(t))[static_cast<std::size_t>(output[t])];
  }
  return total;
}

/// Numerically stable log-softmax in double precision.
template <typename It>
std::vector<double> log_softmax(It first, It last) {
  std::vector<double> out(first, last);
  if (out.empty()) return out;
  double mx = out[0];
  for (double v : out) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : out) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : out) v -= lse;
  return out;
}

}  // namespace zett

#endif  // ZETT_BACKEND_HPP_
