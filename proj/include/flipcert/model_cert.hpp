#ifndef FLIPCERT_MODEL_CERT_HPP
#define FLIPCERT_MODEL_CERT_HPP

#include <vector>

#include "flipcert/core.hpp"

namespace flipcert {

/// Exact minimum number of label flips that change a binary score-sum
/// prediction sign(sum_i y_i q_i). Greedy over the descending sorted
/// signed contributions a_i = sign(p) y_i q_i: the answer is the
/// smallest k whose prefix sum reaches S/2, where S = sum_i a_i > 0.
/// The boundary P_k = S/2 counts as a successful attack.
/// Throws NumericError when the margin is exactly zero.
FlipCount binary_exact_min_flips(const SignedLabels& labels,
                                 const TestKernelRow& q, double tol = 0.0);

/// Lower bound on the minimum flips retargeting a one-vs-all score
/// prediction to `target`: the exact optimum of the pairwise
/// relaxation that only requires target's score to overtake the
/// current prediction's score. Returns 0 when target is already
/// predicted, infinity when no flip set can close the gap.
FlipCount targeted_flips_lower(const OneHotLabels& labels,
                               const TestKernelRow& q, int target,
                               double tol = 0.0);

/// Upper bound on the same quantity: iterative greedy that flips the
/// maximum-damage sample each round until `target` is actually
/// predicted. Returns the number of flips performed (a feasible attack,
/// hence a valid upper bound); infinity if damages dry up or the
/// iteration cap of n flips is exhausted.
FlipCount targeted_flips_upper(const OneHotLabels& labels,
                               const TestKernelRow& q, int target,
                               double tol = 0.0);

struct StandaloneCertificate {
  int predicted = 0;
  FlipCount radius;
};

/// Exact certified radius of a stand-alone one-vs-all score model:
/// min over targets of the pairwise relaxation, minus one. The
/// relaxation preserves the minimum over targets, so this is exact.
StandaloneCertificate standalone_exact_radius(const OneHotLabels& labels,
                                              const TestKernelRow& q,
                                              double tol = 0.0);

/// Votes of each partition's score model: predict(class_scores()).
VoteConfig partition_votes(const std::vector<OneHotLabels>& labels,
                           const std::vector<TestKernelRow>& rows,
                           int num_classes);

/// Per-partition, per-class flip costs: zero at the partition's own
/// vote, otherwise the targeted lower or upper bound per `kind`.
FlipCostMatrix flip_cost_matrix(const std::vector<OneHotLabels>& labels,
                                const std::vector<TestKernelRow>& rows,
                                int num_classes, BoundKind kind,
                                double tol = 0.0);

}  // namespace flipcert

#endif  // FLIPCERT_MODEL_CERT_HPP
