#include "flipcert/model_cert.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace flipcert {

namespace {

// Smallest k whose prefix sum over the descending-sorted positive gains
// satisfies `reached`; infinity once the positive gains are exhausted.
// Sorting is stable, so equal gains keep smaller sample indices first.
template <typename Pred>
FlipCount greedy_prefix_flips(std::vector<double> gains, Pred reached) {
  if (reached(0.0)) return FlipCount(0);
  std::stable_sort(gains.begin(), gains.end(), std::greater<double>());
  double prefix = 0.0;
  for (std::size_t k = 0; k < gains.size(); ++k) {
    if (gains[k] <= 0.0) break;
    prefix += gains[k];
    if (reached(prefix)) return FlipCount(k + 1);
  }
  return FlipCount::inf();
}

void check_target(int target, int num_classes) {
  if (target < 0 || target >= num_classes)
    throw ValidationError("target class out of range");
}

}  // namespace

FlipCount binary_exact_min_flips(const SignedLabels& labels,
                                 const TestKernelRow& q, double tol) {
  const int n = labels.size();
  if (n != q.size())
    throw ValidationError("label count does not match kernel-row length");

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
  const double threshold = total / 2.0 - tol;
  return greedy_prefix_flips(std::move(contributions),
                             [&](double sum) { return sum >= threshold; });
}

FlipCount targeted_flips_lower(const OneHotLabels& labels,
                               const TestKernelRow& q, int target,
                               double tol) {
  check_target(target, labels.num_classes());
  const ClassScores scores = class_scores(labels, q);
  const int c_star = predict(scores);
  if (target == c_star) return FlipCount(0);

  const double gap = scores[c_star] - scores[target];
  std::vector<double> gains(labels.size());
  for (int i = 0; i < labels.size(); ++i) {
    const double qi = q.values[i];
    const int lbl = labels.label(i);
    if (lbl == c_star) {
      // Retargeting a current-prediction sample to `target` closes the
      // gap by 2 q_i; no other destination does better.
      gains[i] = qi > 0.0 ? 2.0 * qi : 0.0;
    } else if (lbl == target) {
      // A target-labeled sample only helps if its kernel weight is
      // negative, by flipping it onto the current prediction.
      gains[i] = qi < 0.0 ? -2.0 * qi : 0.0;
    } else {
      gains[i] = std::abs(qi);
    }
  }

  const double needed = gap - tol;
  if (target < c_star)
    return greedy_prefix_flips(std::move(gains),
                               [&](double sum) { return sum >= needed; });
  return greedy_prefix_flips(std::move(gains),
                             [&](double sum) { return sum > needed; });
}

FlipCount targeted_flips_upper(const OneHotLabels& labels,
                               const TestKernelRow& q, int target,
                               double tol) {
  check_target(target, labels.num_classes());
  const int n = labels.size();
  if (n != q.size())
    throw ValidationError("label count does not match kernel-row length");
  const int k = labels.num_classes();

  std::vector<int> current(n);
  for (int i = 0; i < n; ++i) current[i] = labels.label(i);

  auto rescore = [&]() {
    ClassScores scores = ClassScores::Zero(k);
    for (int i = 0; i < n; ++i) scores[current[i]] += q.values[i];
    return scores;
  };

  ClassScores scores = rescore();
  std::uint64_t flips = 0;
  for (;;) {
    if (target_reached(scores, target, tol)) return FlipCount(flips);
    if (flips == static_cast<std::uint64_t>(n)) return FlipCount::inf();

    const int c_star = predict(scores);
    double runner_up = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != c_star) runner_up = std::max(runner_up, scores[c]);
    const double lead = scores[c_star] - runner_up;

    int best_index = -1;
    double best_damage = 0.0;
    for (int i = 0; i < n; ++i) {
      const double qi = q.values[i];
      double damage = 0.0;
      if (current[i] == c_star && qi > 0.0) {
        damage = std::min(2.0 * qi, qi + lead);
      } else if (current[i] == target && qi < 0.0) {
        damage = std::min(-2.0 * qi, -qi + lead);
      } else if (current[i] != c_star && current[i] != target && qi > 0.0) {
        damage = qi;
      }
      if (damage > best_damage) {
        best_damage = damage;
        best_index = i;
      }
    }
    if (best_index < 0) return FlipCount::inf();

    current[best_index] = current[best_index] == target ? c_star : target;
    ++flips;
    scores = rescore();
  }
}

StandaloneCertificate standalone_exact_radius(const OneHotLabels& labels,
                                              const TestKernelRow& q,
                                              double tol) {
  const ClassScores scores = class_scores(labels, q);
  const int c_star = predict(scores);
  FlipCount best = FlipCount::inf();
  for (int c = 0; c < labels.num_classes(); ++c) {
    if (c == c_star) continue;
    best = std::min(best, targeted_flips_lower(labels, q, c, tol));
  }
  return StandaloneCertificate{c_star, best.radius_from_min_flips()};
}

VoteConfig partition_votes(const std::vector<OneHotLabels>& labels,
                           const std::vector<TestKernelRow>& rows,
                           int num_classes) {
  if (labels.size() != rows.size() || labels.empty())
    throw ValidationError("need one kernel row per partition");
  std::vector<int> votes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].num_classes() != num_classes)
      throw ValidationError("partition class count mismatch");
    votes[i] = predict(class_scores(labels[i], rows[i]));
  }
  return VoteConfig(std::move(votes), num_classes);
}

FlipCostMatrix flip_cost_matrix(const std::vector<OneHotLabels>& labels,
                                const std::vector<TestKernelRow>& rows,
                                int num_classes, BoundKind kind, double tol) {
  if (kind != BoundKind::lower && kind != BoundKind::upper)
    throw ValidationError("flip-cost matrix kind must be lower or upper");
  if (labels.size() != rows.size() || labels.empty())
    throw ValidationError("need one kernel row per partition");

  FlipCostMatrix rho(static_cast<int>(labels.size()), num_classes, kind);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int vote = predict(class_scores(labels[i], rows[i]));
    for (int c = 0; c < num_classes; ++c) {
      if (c == vote) {
        rho.at(static_cast<int>(i), c) = FlipCount(0);
      } else if (kind == BoundKind::lower) {
        rho.at(static_cast<int>(i), c) =
            targeted_flips_lower(labels[i], rows[i], c, tol);
      } else {
        rho.at(static_cast<int>(i), c) =
            targeted_flips_upper(labels[i], rows[i], c, tol);
      }
    }
  }
  return rho;
}

}  // namespace flipcert
