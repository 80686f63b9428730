#ifndef FLIPCERT_SELFCHECK_HPP
#define FLIPCERT_SELFCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace flipcert {

/// Outcome of one randomized property check against a brute-force
/// reference. `failures` counts trials whose property did not hold;
/// `note` carries the first mismatch for diagnosis.
struct CheckResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  std::string note;

  bool passed() const { return failures == 0; }
};

/// Exact binary certificate == Hamming-ball oracle on random signed
/// instances (n <= max_n, kernel entries uniform in [-1, 1], nonzero
/// margin).
CheckResult check_binary_exact(std::uint64_t seed, int trials, int max_n = 12);

/// For every target class: lower bound <= brute-force optimum <= upper
/// bound, and the minimum of the lower bound over targets equals the
/// brute-force minimum exactly. Also cross-checks the stand-alone
/// radius against the oracle minimum.
CheckResult check_targeted_sandwich(std::uint64_t seed, int trials,
                                    int max_n = 8, int max_classes = 3);

/// min over targets of the exhaustive ensemble attack equals the
/// knapsack relaxation's minimum, and the relaxation never exceeds the
/// exhaustive value per target. Random flip costs in {0..3, inf}.
CheckResult check_ensemble_equivalence(std::uint64_t seed, int trials,
                                       int max_partitions = 6,
                                       int max_classes = 4);

/// With all off-vote flip costs equal to one, the knapsack certificate
/// collapses to the black-box vote formula exactly; with random costs
/// >= 1 it dominates it.
CheckResult check_blackbox_consistency(std::uint64_t seed, int trials,
                                       int max_partitions = 50,
                                       int max_classes = 10);

/// Whenever the small-C condition holds on a random PSD kernel, the
/// coordinate-descent dual sits at C * 1 within 1e-8 for any labeling;
/// also verifies non-vacuity (a violating instance with some
/// alpha_i != C).
CheckResult check_small_c_duals(std::uint64_t seed, int trials, int max_n = 50);

/// Effective-kernel solves on random PSD systems satisfy the multiply-
/// back residual bound 1e-10 * (1 + max|q|) for lambda in
/// {1e-3, 0.1, 1, 100}.
CheckResult check_effective_kernel(std::uint64_t seed, int trials,
                                   int max_m = 100);

/// Runs every check with `trials` trials each.
std::vector<CheckResult> run_all_checks(std::uint64_t seed, int trials);

}  // namespace flipcert

#endif  // FLIPCERT_SELFCHECK_HPP
