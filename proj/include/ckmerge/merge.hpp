#pragma once

/**
 * Convex combinations of checkpoints.
 *
 * The merged value of every element is accumulated in double and rounded to
 * float exactly once, so the rounding error does not grow with the number of
 * checkpoints in a soup. Tensors are processed one at a time; outputs keep
 * lexicographic name order.
 *
 * Only model parameters are merged. Optimizer state never enters a
 * Checkpoint in this library, because averaging is undefined for it.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ckmerge/checkpoint.hpp"
#include "ckmerge/errors.hpp"

namespace ckmerge {

struct MergeWeights {
  std::vector<double> weights;

  // All weights nonnegative and summing to 1 within 1e-9.
  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw WeightError("merge weight " + std::to_string(w) + " is negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw WeightError("merge weights sum to " + std::to_string(sum) + ", expected 1");
  }

  static MergeWeights uniform(std::size_t n) {
    return MergeWeights{std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }
};

// out = lambda * curr + (1 - lambda) * prev, element-wise.
// lambda = 1 reproduces curr bit-for-bit and lambda = 0 reproduces prev.
inline Checkpoint pairwise_merge(const Checkpoint& prev, const Checkpoint& curr, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DomainError("merging weight " + std::to_string(lambda) + " outside [0, 1]");
  require_compat(prev, curr);

  Checkpoint out;
  const double l = lambda;
  const double one_minus = 1.0 - lambda;
  auto ip = prev.tensors.begin();
  for (const auto& [name, tc] : curr.tensors) {
    const Tensor& tp = ip->second;
    Tensor merged;
    merged.shape = tc.shape;
    merged.data.resize(tc.data.size());
    for (std::size_t i = 0; i < tc.data.size(); ++i) {
      merged.data[i] = static_cast<float>(l * static_cast<double>(tc.data[i]) +
                                          one_minus * static_cast<double>(tp.data[i]));
    }
    out.tensors.emplace(name, std::move(merged));
    ++ip;
  }
  return out;
}

// Weighted soup over borrowed checkpoints: element-wise sum of w[i] * ckpts[i].
inline Checkpoint soup(const std::vector<const Checkpoint*>& ckpts, const MergeWeights& w) {
  if (ckpts.empty()) throw EmptyInputError("soup of zero checkpoints");
  if (w.weights.size() != ckpts.size())
    throw WeightError("weight count " + std::to_string(w.weights.size()) +
                      " does not match checkpoint count " + std::to_string(ckpts.size()));
  w.validate();
  for (std::size_t i = 1; i < ckpts.size(); ++i) require_compat(*ckpts[0], *ckpts[i]);

  Checkpoint out;
  for (const auto& [name, t0] : ckpts[0]->tensors) {
    Tensor merged;
    merged.shape = t0.shape;
    std::vector<double> acc(t0.data.size(), 0.0);
    for (std::size_t c = 0; c < ckpts.size(); ++c) {
      const Tensor& t = ckpts[c]->tensors.at(name);
      const double wc = w.weights[c];
      for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i] += wc * static_cast<double>(t.data[i]);
    }
    merged.data.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) merged.data[i] = static_cast<float>(acc[i]);
    out.tensors.emplace(name, std::move(merged));
  }
  return out;
}

inline Checkpoint soup(const std::vector<Checkpoint>& ckpts, const MergeWeights& w) {
  std::vector<const Checkpoint*> ptrs;
  ptrs.reserve(ckpts.size());
  for (const Checkpoint& c : ckpts) ptrs.push_back(&c);
  return soup(ptrs, w);
}

inline Checkpoint uniform_soup(const std::vector<const Checkpoint*>& ckpts) {
  if (ckpts.empty()) throw EmptyInputError("uniform soup of zero checkpoints");
  return soup(ckpts, MergeWeights::uniform(ckpts.size()));
}

inline Checkpoint uniform_soup(const std::vector<Checkpoint>& ckpts) {
  if (ckpts.empty()) throw EmptyInputError("uniform soup of zero checkpoints");
  return soup(ckpts, MergeWeights::uniform(ckpts.size()));
}

// ============================================================================
// Greedy soup
// ============================================================================

struct SoupDecision {
  std::size_t checkpoint_index;
  double dev_score;  // score of the candidate soup including this checkpoint
  bool accepted;
};

struct SoupTrace {
  std::vector<SoupDecision> considered;
  std::vector<std::size_t> final_members;
};

using CheckpointEvaluator = std::function<double(const Checkpoint&)>;

// Visits checkpoints in order. A candidate joins iff the uniform average of
// the accepted members plus the candidate strictly improves the evaluator
// score; ties reject, so the decision sequence is deterministic.
inline std::pair<Checkpoint, SoupTrace> greedy_soup(const std::vector<Checkpoint>& ckpts,
                                                    const CheckpointEvaluator& evaluator) {
  if (ckpts.empty()) throw EmptyInputError("greedy soup of zero checkpoints");
  for (std::size_t i = 1; i < ckpts.size(); ++i) require_compat(ckpts[0], ckpts[i]);

  SoupTrace trace;
  std::vector<std::size_t> members;
  Checkpoint current;
  double current_score = 0.0;

  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    std::vector<const Checkpoint*> candidate_members;
    candidate_members.reserve(members.size() + 1);
    for (std::size_t m : members) candidate_members.push_back(&ckpts[m]);
    candidate_members.push_back(&ckpts[i]);
    Checkpoint candidate = uniform_soup(candidate_members);
    const double score = evaluator(candidate);

    const bool accepted = members.empty() || score > current_score;
    trace.considered.push_back({i, score, accepted});
    if (accepted) {
      members.push_back(i);
      current = std::move(candidate);
      current_score = score;
    }
  }
  trace.final_members = members;
  return {std::move(current), std::move(trace)};
}

}  // namespace ckmerge
