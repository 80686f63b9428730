#include "flipcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flipcert {

namespace {

constexpr int kBinaryCap = 20;
constexpr int kTargetedSampleCap = 12;
constexpr int kTargetedClassCap = 4;
constexpr double kEnsembleConfigCap = 5e6;
constexpr int kDualSampleCap = 200;
constexpr double kDualStationarityTol = 1e-10;
constexpr int kDualMaxSweeps = 200000;

// Advances `comb` to the next k-combination of {0, ..., n-1} in
// lexicographic order; false when exhausted.
bool next_combination(std::vector<int>& comb, int n) {
  const int k = static_cast<int>(comb.size());
  for (int i = k - 1; i >= 0; --i) {
    if (comb[i] < n - k + i) {
      ++comb[i];
      for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

FlipCount oracle_binary_min_flips(const SignedLabels& labels,
                                  const TestKernelRow& q) {
  const int n = labels.size();
  if (n != q.size())
    throw ValidationError("label count does not match kernel-row length");
  if (n > kBinaryCap)
    throw ValidationError("instance too large for the binary oracle");

  double margin = 0.0;
  for (int i = 0; i < n; ++i) margin += labels.sign(i) * q.values[i];
  if (margin == 0.0)
    throw NumericError("ambiguous prediction: zero binary margin");
  const double sign = margin > 0.0 ? 1.0 : -1.0;

  std::vector<double> contributions(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    contributions[i] = sign * labels.sign(i) * q.values[i];
    total += contributions[i];
  }

  FlipCount best = FlipCount::inf();
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    double flipped = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) flipped += contributions[i];
    // Flipping the subset turns the margin into total - 2 * flipped;
    // zero counts as a change (adversary wins ties).
    if (total - 2.0 * flipped <= 0.0)
      best = std::min(best,
                      FlipCount(static_cast<std::uint64_t>(std::popcount(mask))));
  }
  return best;
}

FlipCount oracle_targeted_min_flips(const OneHotLabels& labels,
                                    const TestKernelRow& q, int target,
                                    int max_budget) {
  const int n = labels.size();
  const int k = labels.num_classes();
  if (n > kTargetedSampleCap || k > kTargetedClassCap)
    throw ValidationError("instance too large for the targeted oracle");
  if (target < 0 || target >= k)
    throw ValidationError("target class out of range");
  if (n != q.size())
    throw ValidationError("label count does not match kernel-row length");
  if (max_budget < 0) max_budget = n;

  std::vector<int> relabeled(n);
  for (int i = 0; i < n; ++i) relabeled[i] = labels.label(i);

  auto predicts_target = [&]() {
    ClassScores scores = ClassScores::Zero(k);
    for (int i = 0; i < n; ++i) scores[relabeled[i]] += q.values[i];
    return predict(scores) == target;
  };

  if (predicts_target()) return FlipCount(0);

  for (int dist = 1; dist <= std::min(n, max_budget); ++dist) {
    std::vector<int> comb(dist);
    std::iota(comb.begin(), comb.end(), 0);
    do {
      // Odometer over the (k-1)^dist ways to relabel the chosen samples.
      std::vector<int> choice(dist, 0);
      for (;;) {
        for (int j = 0; j < dist; ++j) {
          const int original = labels.label(comb[j]);
          relabeled[comb[j]] =
              choice[j] >= original ? choice[j] + 1 : choice[j];
        }
        const bool hit = predicts_target();
        for (int j = 0; j < dist; ++j)
          relabeled[comb[j]] = labels.label(comb[j]);
        if (hit) return FlipCount(static_cast<std::uint64_t>(dist));

        int pos = dist - 1;
        while (pos >= 0 && choice[pos] == k - 2) choice[pos--] = 0;
        if (pos < 0) break;
        ++choice[pos];
      }
    } while (next_combination(comb, n));
  }
  return FlipCount::inf();
}

FlipCount oracle_ensemble_p1(const FlipCostMatrix& rho,
                             const VoteConfig& votes, int target) {
  const int np = votes.num_partitions();
  const int k = votes.num_classes();
  if (rho.num_partitions() != np || rho.num_classes() != k)
    throw ValidationError("flip-cost matrix does not match vote configuration");
  if (target < 0 || target >= k)
    throw ValidationError("target class out of range");

  double configs = 1.0;
  for (int i = 0; i < np; ++i) configs *= k;
  if (configs > kEnsembleConfigCap)
    throw ValidationError("instance too large for the ensemble oracle");

  FlipCount best = FlipCount::inf();
  std::vector<int> config(np, 0);
  std::vector<int> counts(k);
  for (;;) {
    FlipCount cost(0);
    for (int i = 0; i < np; ++i) cost += rho.at(i, config[i]);
    if (cost < best) {
      std::fill(counts.begin(), counts.end(), 0);
      for (int v : config) ++counts[v];
      int majority = 0;
      for (int c = 1; c < k; ++c)
        if (counts[c] > counts[majority]) majority = c;
      if (majority == target) best = cost;
    }

    int pos = np - 1;
    while (pos >= 0 && config[pos] == k - 1) config[pos--] = 0;
    if (pos < 0) break;
    ++config[pos];
  }
  return best;
}

Eigen::VectorXd oracle_svm_dual(const TrainKernel& kernel,
                                const SignedLabels& labels, double svm_c) {
  const int n = kernel.size();
  if (labels.size() != n)
    throw ValidationError("label count does not match kernel size");
  if (n > kDualSampleCap)
    throw ValidationError("instance too large for the dual oracle");
  if (!(svm_c > 0)) throw ValidationError("C must be positive");

  const Eigen::MatrixXd& q = kernel.matrix();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);

  auto gradient = [&](int i) {
    double weighted = 0.0;
    for (int j = 0; j < n; ++j)
      weighted += labels.sign(j) * alpha[j] * q(i, j);
    return labels.sign(i) * weighted - 1.0;
  };

  for (int sweep = 0; sweep < kDualMaxSweeps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const double g = gradient(i);
      if (q(i, i) > 0.0) {
        alpha[i] = std::clamp(alpha[i] - g / q(i, i), 0.0, svm_c);
      } else if (g < 0.0) {
        alpha[i] = svm_c;  // objective linear and decreasing in alpha_i
      } else if (g > 0.0) {
        alpha[i] = 0.0;
      }
    }

    double stationarity = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = gradient(i);
      double projected = g;
      if (alpha[i] <= 0.0) projected = std::min(g, 0.0);
      if (alpha[i] >= svm_c) projected = std::max(g, 0.0);
      stationarity = std::max(stationarity, std::abs(projected));
    }
    if (stationarity <= kDualStationarityTol) return alpha;
  }
  throw NumericError("coordinate descent on the SVM dual did not converge");
}

}  // namespace flipcert
