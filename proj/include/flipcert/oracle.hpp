#ifndef FLIPCERT_ORACLE_HPP
#define FLIPCERT_ORACLE_HPP

#include <Eigen/Dense>

#include "flipcert/core.hpp"
#include "flipcert/kernels.hpp"

namespace flipcert {

// Brute-force reference implementations. Intentionally exponential and
// hard-capped to tiny instances; they exist to validate the greedy and
// knapsack paths, never to certify real data.

/// Hamming-ball search for the minimum number of sign flips that make
/// the binary score sum non-positive (ties count as a change). n <= 20.
FlipCount oracle_binary_min_flips(const SignedLabels& labels,
                                  const TestKernelRow& q);

/// Breadth-first search over relabelings at Hamming distance 0, 1, ...:
/// the first distance at which predict(class_scores(.)) equals `target`.
/// Requires n <= 12 and K <= 4; `max_budget` < 0 means up to n flips.
FlipCount oracle_targeted_min_flips(const OneHotLabels& labels,
                                    const TestKernelRow& q, int target,
                                    int max_budget = -1);

/// Exhaustive minimum of the ensemble attack: over all K^Np vote
/// configurations whose majority (smaller-index ties) is `target`,
/// the cheapest total flip cost. Requires K^Np <= 5e6.
FlipCount oracle_ensemble_p1(const FlipCostMatrix& rho,
                             const VoteConfig& votes, int target);

/// Box-constrained SVM dual solved by projected coordinate descent in
/// fixed index order to 1e-10 stationarity (max projected gradient).
/// Requires n <= 200; throws NumericError on non-convergence.
Eigen::VectorXd oracle_svm_dual(const TrainKernel& kernel,
                                const SignedLabels& labels, double svm_c);

}  // namespace flipcert

#endif  // FLIPCERT_ORACLE_HPP
