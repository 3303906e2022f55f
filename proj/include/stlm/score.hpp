#pragma once

#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "stlm/errors.hpp"
#include "stlm/model.hpp"
#include "stlm/unified.hpp"

namespace stlm {

struct ScoreResult {
  double total_logprob = 0.0;  // sum over every continuation token
  int token_count = 0;         // |continuation|
  int norm_token_count = 0;    // leading modality marker excluded

  double normalized() const {
    return norm_token_count > 0 ? total_logprob / norm_token_count
                                : total_logprob;
  }
};

// Exact teacher-forced log-likelihood of `continuation` after `prefix`,
// summed over continuation tokens only. The prefix must be non-empty: an
// autoregressive model has no distribution for an unconditioned first token,
// and in practice every sequence starts with a modality marker.
inline ScoreResult log_likelihood_ids(const TransformerLm& model, std::span<const int> prefix,
                                      std::span<const int> continuation) {
  ScoreResult result;
  result.token_count = static_cast<int>(continuation.size());
  result.norm_token_count = result.token_count;
  if (continuation.empty()) return result;
  if (prefix.empty()) fail_data("log_likelihood: prefix must be non-empty");
  if (prefix.size() + continuation.size() > static_cast<std::size_t>(model.config().context_len)) {
    fail_data("log_likelihood: prefix plus continuation exceeds context length");
  }
  if (model.layout().is_marker_id(continuation[0])) result.norm_token_count -= 1;

  std::vector<int> ids(prefix.begin(), prefix.end());
  ids.insert(ids.end(), continuation.begin(), continuation.end());
  auto cache = model.forward(ids);
  for (std::size_t i = prefix.size(); i < ids.size(); ++i) {
    Eigen::RowVectorXd p = cache.logits.row(static_cast<Eigen::Index>(i - 1));
    softmax_row_inplace(p);
    result.total_logprob += std::log(std::max(p(ids[i]), 1e-300));
  }
  return result;
}

inline ScoreResult log_likelihood(const TransformerLm& model, const UnifiedSequence& prefix,
                                  const UnifiedSequence& continuation) {
  const auto p = model.layout().encode(prefix);
  const auto c = model.layout().encode(continuation);
  return log_likelihood_ids(model, p, c);
}

}  // namespace stlm
