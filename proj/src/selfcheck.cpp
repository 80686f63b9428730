#include "flipcert/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "flipcert/core.hpp"
#include "flipcert/ensemble_cert.hpp"
#include "flipcert/kernels.hpp"
#include "flipcert/model_cert.hpp"
#include "flipcert/oracle.hpp"

namespace flipcert {

namespace {

using Rng = std::mt19937_64;

Eigen::VectorXd uniform_vector(Rng& rng, int n, double lo = -1.0,
                               double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

SignedLabels random_signs(Rng& rng, int n) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<int> signs(n);
  for (int i = 0; i < n; ++i) signs[i] = coin(rng) ? 1 : -1;
  return SignedLabels(std::move(signs));
}

void record_failure(CheckResult& result, const std::string& note) {
  ++result.failures;
  if (result.note.empty()) result.note = note;
}

}  // namespace

CheckResult check_binary_exact(std::uint64_t seed, int trials, int max_n) {
  CheckResult result;
  result.name = "binary exact vs Hamming-ball oracle";
  Rng rng(seed);
  std::uniform_int_distribution<int> size_dist(1, max_n);

  for (int t = 0; t < trials; ++t) {
    const int n = size_dist(rng);
    const SignedLabels labels = random_signs(rng, n);
    TestKernelRow row = make_kernel_row(uniform_vector(rng, n));
    for (;;) {  // instances must have a nonzero margin
      double margin = 0.0;
      for (int i = 0; i < n; ++i) margin += labels.sign(i) * row.values[i];
      if (margin != 0.0) break;
      row = make_kernel_row(uniform_vector(rng, n));
    }
    ++result.trials;
    try {
      const FlipCount greedy = binary_exact_min_flips(labels, row);
      const FlipCount reference = oracle_binary_min_flips(labels, row);
      if (greedy != reference) {
        std::ostringstream msg;
        msg << "trial " << t << ": greedy " << greedy.to_string()
            << " != oracle " << reference.to_string();
        record_failure(result, msg.str());
      }
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }
  return result;
}

CheckResult check_targeted_sandwich(std::uint64_t seed, int trials, int max_n,
                                    int max_classes) {
  CheckResult result;
  result.name = "targeted lower <= oracle <= upper, min equality";
  Rng rng(seed);
  std::uniform_int_distribution<int> size_dist(1, max_n);
  std::uniform_int_distribution<int> class_dist(2, max_classes);

  for (int t = 0; t < trials; ++t) {
    const int n = size_dist(rng);
    const int k = class_dist(rng);
    std::uniform_int_distribution<int> label_dist(0, k - 1);
    Eigen::VectorXi raw(n);
    for (int i = 0; i < n; ++i) raw[i] = label_dist(rng);
    const OneHotLabels labels(raw, k);
    const TestKernelRow row = make_kernel_row(uniform_vector(rng, n));
    ++result.trials;

    try {
      const int c_star = predict(class_scores(labels, row));
      FlipCount min_lower = FlipCount::inf();
      FlipCount min_oracle = FlipCount::inf();
      bool bad = false;
      for (int target = 0; target < k && !bad; ++target) {
        if (target == c_star) continue;
        const FlipCount lower = targeted_flips_lower(labels, row, target);
        const FlipCount upper = targeted_flips_upper(labels, row, target);
        const FlipCount reference =
            oracle_targeted_min_flips(labels, row, target);
        if (!(lower <= reference && reference <= upper)) {
          std::ostringstream msg;
          msg << "trial " << t << " target " << target << ": sandwich "
              << lower.to_string() << " <= " << reference.to_string()
              << " <= " << upper.to_string() << " violated";
          record_failure(result, msg.str());
          bad = true;
        }
        min_lower = std::min(min_lower, lower);
        min_oracle = std::min(min_oracle, reference);
      }
      if (bad) continue;
      if (min_lower != min_oracle) {
        std::ostringstream msg;
        msg << "trial " << t << ": min lower " << min_lower.to_string()
            << " != min oracle " << min_oracle.to_string();
        record_failure(result, msg.str());
        continue;
      }
      const StandaloneCertificate cert = standalone_exact_radius(labels, row);
      if (cert.radius != min_oracle.radius_from_min_flips()) {
        std::ostringstream msg;
        msg << "trial " << t << ": stand-alone radius " << cert.radius.to_string()
            << " != oracle radius "
            << min_oracle.radius_from_min_flips().to_string();
        record_failure(result, msg.str());
      }
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }
  return result;
}

namespace {

FlipCostMatrix random_costs(Rng& rng, const VoteConfig& votes, int max_cost,
                            bool allow_zero, bool allow_inf) {
  std::uniform_int_distribution<int> cost_dist(allow_zero ? 0 : 1,
                                               max_cost + (allow_inf ? 1 : 0));
  FlipCostMatrix rho(votes.num_partitions(), votes.num_classes(),
                     BoundKind::exact);
  for (int i = 0; i < votes.num_partitions(); ++i) {
    for (int c = 0; c < votes.num_classes(); ++c) {
      if (c == votes.votes()[i]) {
        rho.at(i, c) = FlipCount(0);
        continue;
      }
      const int value = cost_dist(rng);
      rho.at(i, c) = value > max_cost
                         ? FlipCount::inf()
                         : FlipCount(static_cast<std::uint64_t>(value));
    }
  }
  return rho;
}

FlipCostMatrix unit_costs(const VoteConfig& votes) {
  FlipCostMatrix rho(votes.num_partitions(), votes.num_classes(),
                     BoundKind::exact);
  for (int i = 0; i < votes.num_partitions(); ++i)
    for (int c = 0; c < votes.num_classes(); ++c)
      rho.at(i, c) = FlipCount(c == votes.votes()[i] ? 0 : 1);
  return rho;
}

VoteConfig random_votes(Rng& rng, int max_partitions, int max_classes) {
  std::uniform_int_distribution<int> np_dist(1, max_partitions);
  std::uniform_int_distribution<int> k_dist(2, max_classes);
  const int np = np_dist(rng);
  const int k = k_dist(rng);
  std::uniform_int_distribution<int> vote_dist(0, k - 1);
  std::vector<int> votes(np);
  for (int i = 0; i < np; ++i) votes[i] = vote_dist(rng);
  return VoteConfig(std::move(votes), k);
}

}  // namespace

CheckResult check_ensemble_equivalence(std::uint64_t seed, int trials,
                                       int max_partitions, int max_classes) {
  CheckResult result;
  result.name = "knapsack relaxation vs exhaustive ensemble attack";
  Rng rng(seed);

  for (int t = 0; t < trials; ++t) {
    const VoteConfig votes = random_votes(rng, max_partitions, max_classes);
    const FlipCostMatrix rho =
        random_costs(rng, votes, 3, /*allow_zero=*/true, /*allow_inf=*/true);
    ++result.trials;

    try {
      const int c_star = votes.majority();
      FlipCount min_p1 = FlipCount::inf();
      FlipCount min_p2 = FlipCount::inf();
      bool bad = false;
      for (int target = 0; target < votes.num_classes() && !bad; ++target) {
        if (target == c_star) continue;
        const FlipCount p2 = mckp_p2(rho, votes, target);
        const FlipCount p1 = oracle_ensemble_p1(rho, votes, target);
        if (p2 > p1) {
          std::ostringstream msg;
          msg << "trial " << t << " target " << target << ": relaxation "
              << p2.to_string() << " exceeds exhaustive " << p1.to_string();
          record_failure(result, msg.str());
          bad = true;
        }
        min_p1 = std::min(min_p1, p1);
        min_p2 = std::min(min_p2, p2);
      }
      if (!bad && min_p1 != min_p2) {
        std::ostringstream msg;
        msg << "trial " << t << ": min exhaustive " << min_p1.to_string()
            << " != min relaxation " << min_p2.to_string();
        record_failure(result, msg.str());
      }
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }
  return result;
}

CheckResult check_blackbox_consistency(std::uint64_t seed, int trials,
                                       int max_partitions, int max_classes) {
  CheckResult result;
  result.name = "vote-formula consistency and dominance";
  Rng rng(seed);

  for (int t = 0; t < trials; ++t) {
    const VoteConfig votes = random_votes(rng, max_partitions, max_classes);
    ++result.trials;
    try {
      const FlipCount blackbox = ssdpa_radius(votes);

      const FlipCostMatrix ones = unit_costs(votes);
      const FlipCount collapsed = ensemble_radius(ones, votes).radius;
      if (collapsed != blackbox) {
        std::ostringstream msg;
        msg << "trial " << t << ": unit costs give " << collapsed.to_string()
            << " but vote formula gives " << blackbox.to_string();
        record_failure(result, msg.str());
        continue;
      }

      const FlipCostMatrix random =
          random_costs(rng, votes, 6, /*allow_zero=*/false, /*allow_inf=*/true);
      const FlipCount dominated = ensemble_radius(random, votes).radius;
      if (dominated < blackbox) {
        std::ostringstream msg;
        msg << "trial " << t << ": costs >= 1 give " << dominated.to_string()
            << " below the vote formula " << blackbox.to_string();
        record_failure(result, msg.str());
      }
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }
  return result;
}

CheckResult check_small_c_duals(std::uint64_t seed, int trials, int max_n) {
  CheckResult result;
  result.name = "pinned SVM duals in the small-C regime";
  Rng rng(seed);
  std::uniform_int_distribution<int> size_dist(1, max_n);
  std::uniform_real_distribution<double> fraction_dist(0.3, 0.95);
  bool violation_with_free_dual = false;

  {
    // Deterministic non-vacuity witness: condition fails and the dual
    // settles strictly inside the box.
    Eigen::MatrixXd q(2, 2);
    q << 2.0, 1.0, 1.0, 2.0;
    const TrainKernel kernel = TrainKernel::from_gram(q);
    const SignedLabels labels(std::vector<int>{1, 1});
    ++result.trials;
    try {
      if (check_small_c(kernel, 1.0)) {
        record_failure(result, "witness: small-C condition unexpectedly holds");
      } else {
        const Eigen::VectorXd alpha = oracle_svm_dual(kernel, labels, 1.0);
        if ((alpha.array() - 1.0).abs().maxCoeff() > 1e-8)
          violation_with_free_dual = true;
        else
          record_failure(result, "witness: dual pinned despite violation");
      }
    } catch (const Error& e) {
      record_failure(result, std::string("witness error: ") + e.what());
    }
  }

  for (int t = 0; t < trials; ++t) {
    const int n = size_dist(rng);
    Eigen::MatrixXd g(n, 2 * n);
    std::uniform_real_distribution<double> entry_dist(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2 * n; ++j) g(i, j) = entry_dist(rng);
    const TrainKernel kernel =
        TrainKernel::from_gram(Eigen::MatrixXd(g * g.transpose()));
    const SignedLabels labels = random_signs(rng, n);
    const double max_row_sum =
        kernel.matrix().cwiseAbs().rowwise().sum().maxCoeff();
    ++result.trials;

    try {
      const double c_small = fraction_dist(rng) / max_row_sum;
      if (!check_small_c(kernel, c_small)) {
        record_failure(result, "small-C condition fails for C below threshold");
        continue;
      }
      const Eigen::VectorXd alpha = oracle_svm_dual(kernel, labels, c_small);
      const double deviation = (alpha.array() - c_small).abs().maxCoeff();
      if (deviation > 1e-8) {
        std::ostringstream msg;
        msg << "trial " << t << ": dual deviates from C by " << deviation;
        record_failure(result, msg.str());
        continue;
      }

      if (t % 4 == 0 && n <= 30) {
        const double c_large = 3.0 / max_row_sum;
        if (check_small_c(kernel, c_large)) {
          record_failure(result, "small-C condition holds for C above threshold");
          continue;
        }
        const Eigen::VectorXd free = oracle_svm_dual(kernel, labels, c_large);
        if ((free.array() - c_large).abs().maxCoeff() > 1e-8)
          violation_with_free_dual = true;
      }
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }

  if (!violation_with_free_dual)
    record_failure(result,
                   "vacuous run: no violating instance freed any dual variable");
  return result;
}

CheckResult check_effective_kernel(std::uint64_t seed, int trials, int max_m) {
  CheckResult result;
  result.name = "effective-kernel multiply-back residuals";
  Rng rng(seed);
  std::uniform_int_distribution<int> size_dist(1, max_m);
  const double lambdas[] = {1e-3, 0.1, 1.0, 100.0};

  for (int t = 0; t < trials; ++t) {
    const int m = size_dist(rng);
    const double lambda = lambdas[t % 4];
    Eigen::MatrixXd g(m, m);
    std::uniform_real_distribution<double> entry_dist(-1.0, 1.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) g(i, j) = entry_dist(rng);
    const TrainKernel kernel =
        TrainKernel::from_gram(Eigen::MatrixXd(g * g.transpose()));
    const TestKernelRow row = make_kernel_row(uniform_vector(rng, m));
    ++result.trials;

    try {
      const TestKernelRow effective = effective_kernel(kernel, row, lambda);
      Eigen::MatrixXd system = kernel.matrix();
      system.diagonal().array() += lambda;
      const double residual =
          (row.values - system * effective.values).cwiseAbs().maxCoeff();
      const double bound = 1e-10 * (1.0 + row.values.cwiseAbs().maxCoeff());
      if (residual > bound) {
        std::ostringstream msg;
        msg << "trial " << t << " (m=" << m << ", lambda=" << lambda
            << "): residual " << residual << " > " << bound;
        record_failure(result, msg.str());
      }
      if (!effective.effective)
        record_failure(result, "solver did not tag the row as effective");
    } catch (const Error& e) {
      record_failure(result, std::string("trial error: ") + e.what());
    }
  }
  return result;
}

std::vector<CheckResult> run_all_checks(std::uint64_t seed, int trials) {
  std::vector<CheckResult> results;
  results.push_back(check_binary_exact(seed, trials));
  results.push_back(check_targeted_sandwich(seed + 1, trials));
  results.push_back(check_ensemble_equivalence(seed + 2, trials));
  results.push_back(check_blackbox_consistency(seed + 3, trials));
  results.push_back(check_small_c_duals(seed + 4, trials));
  results.push_back(check_effective_kernel(seed + 5, trials));
  return results;
}

}  // namespace flipcert
