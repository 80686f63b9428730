#ifndef FLIPCERT_CORE_HPP
#define FLIPCERT_CORE_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flipcert {

// Error taxonomy; the CLI maps these onto process exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed inputs: manifests, dimensions, label ranges, bad arguments.
struct ValidationError : Error {
  using Error::Error;
};

// The SVM certificate was requested outside the regime where it is valid.
struct SmallCViolation : Error {
  using Error::Error;
};

// Numerical breakdown: singular systems, residuals out of bounds,
// non-finite scores, non-convergence.
struct NumericError : Error {
  using Error::Error;
};

/// A count of training-label flips, extended with infinity for
/// unreachable targets. Infinity is a dedicated sentinel so that
/// knapsack capacities stay small; it is never a large finite number.
class FlipCount {
 public:
  constexpr FlipCount() = default;
  constexpr explicit FlipCount(std::uint64_t n) : rep_(n) {}

  static constexpr FlipCount inf() { return FlipCount(kInf); }

  constexpr bool is_inf() const { return rep_ == kInf; }
  constexpr bool finite() const { return rep_ != kInf; }

  /// Finite value; calling this on infinity is a logic error.
  constexpr std::uint64_t value() const { return rep_; }

  // Infinity compares greater than every finite count.
  friend constexpr auto operator<=>(FlipCount, FlipCount) = default;

  friend constexpr FlipCount operator+(FlipCount a, FlipCount b) {
    if (a.is_inf() || b.is_inf()) return inf();
    return FlipCount(a.rep_ + b.rep_);
  }
  FlipCount& operator+=(FlipCount o) { return *this = *this + o; }

  /// min_flips - 1 as a certified radius; infinity stays infinite and
  /// zero is clamped at zero.
  constexpr FlipCount radius_from_min_flips() const {
    if (is_inf()) return inf();
    return FlipCount(rep_ == 0 ? 0 : rep_ - 1);
  }

  std::string to_string() const {
    return is_inf() ? "inf" : std::to_string(rep_);
  }

 private:
  static constexpr std::uint64_t kInf = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t rep_ = 0;
};

enum class BoundKind { exact, lower, upper };
enum class LossKind { svm, regression };

/// Training data: features (n x d), integer labels in [0, K).
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_classes = 0;

  int num_samples() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Checks the Dataset invariants (n >= 1, d >= 1, K >= 2, labels in
/// range, finite features) and returns the assembled value.
Dataset validate_dataset(Eigen::MatrixXd features, Eigen::VectorXi labels,
                         int num_classes);

/// Loads a dataset described by a JSON manifest with fields
/// {n, d, K, features, labels, dtype:"f64le", layout:"row-major"}.
/// The feature file holds exactly n*d little-endian 64-bit floats in
/// row-major order; the label file holds n newline-delimited integers.
/// Relative paths resolve against the manifest's directory.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// One-vs-all label encoding: conceptually an n x K 0/1 matrix whose
/// rows each sum to one, stored as class indices.
class OneHotLabels {
 public:
  OneHotLabels(Eigen::VectorXi labels, int num_classes);

  /// Builds from an explicit 0/1 matrix, rejecting rows that do not
  /// sum to exactly one.
  static OneHotLabels from_matrix(const Eigen::MatrixXd& onehot);

  int label(int i) const { return labels_[i]; }
  int size() const { return static_cast<int>(labels_.size()); }
  int num_classes() const { return num_classes_; }
  const Eigen::VectorXi& labels() const { return labels_; }

 private:
  Eigen::VectorXi labels_;
  int num_classes_;
};

/// Binary labels in {-1, +1}.
class SignedLabels {
 public:
  explicit SignedLabels(std::vector<int> labels);
  int sign(int i) const { return labels_[i]; }
  int size() const { return static_cast<int>(labels_.size()); }

 private:
  std::vector<int> labels_;
};

/// Kernel values between one test sample and a partition's training
/// samples. `effective` distinguishes raw kernel rows from
/// regression-effective rows (Q + lambda I)^{-1} q.
struct TestKernelRow {
  Eigen::VectorXd values;
  bool effective = false;

  int size() const { return static_cast<int>(values.size()); }
};

/// Validates finiteness and wraps a vector as a kernel row.
TestKernelRow make_kernel_row(Eigen::VectorXd values, bool effective = false);

using ClassScores = Eigen::VectorXd;

/// p_c = sum of kernel-row entries over samples labeled c.
ClassScores class_scores(const OneHotLabels& labels, const TestKernelRow& q);

/// Smallest class index attaining the maximum score.
int predict(const ClassScores& scores);

/// Adversary-wins comparison between a target class and a reference
/// class: equal scores count for the smaller class index, so the target
/// overtakes on equality exactly when its index is smaller. `tol`
/// loosens the comparison in the adversary's favor for noisy kernels.
bool overtakes(double target_score, int target, double ref_score, int ref,
               double tol = 0.0);

/// True when `target` would be the prediction under the adversary-wins
/// rule; with tol = 0 this coincides with predict(scores) == target.
bool target_reached(const ClassScores& scores, int target, double tol = 0.0);

/// Votes of the base classifiers of a partition ensemble, plus derived
/// per-class counts.
class VoteConfig {
 public:
  VoteConfig(std::vector<int> votes, int num_classes);

  const std::vector<int>& votes() const { return votes_; }
  const std::vector<int>& counts() const { return counts_; }
  int num_partitions() const { return static_cast<int>(votes_.size()); }
  int num_classes() const { return num_classes_; }

  /// Majority class, ties to the smaller index.
  int majority() const;

 private:
  std::vector<int> votes_;
  std::vector<int> counts_;
  int num_classes_;
};

/// rho[i][c]: minimum label flips inside partition i that retarget base
/// classifier i's vote to class c (0 at the current vote, infinity when
/// unreachable). `kind` records whether entries are exact values or
/// lower/upper bounds.
class FlipCostMatrix {
 public:
  FlipCostMatrix(int num_partitions, int num_classes, BoundKind kind);

  FlipCount& at(int partition, int cls) {
    return costs_[static_cast<std::size_t>(partition) * num_classes_ + cls];
  }
  FlipCount at(int partition, int cls) const {
    return costs_[static_cast<std::size_t>(partition) * num_classes_ + cls];
  }

  int num_partitions() const { return num_partitions_; }
  int num_classes() const { return num_classes_; }
  BoundKind kind() const { return kind_; }

  /// Every row must hold a zero at the partition's current vote.
  void require_zero_at_votes(const VoteConfig& votes) const;

 private:
  int num_partitions_;
  int num_classes_;
  BoundKind kind_;
  std::vector<FlipCount> costs_;
};

/// Certification parameters. The tie policy is fixed to adversary-wins;
/// `score_tol` (default 0: exact comparisons) exists for ingested noisy
/// kernels only.
struct CertConfig {
  double svm_c = 1.0;
  double lambda = 0.0;
  LossKind loss = LossKind::svm;
  double score_tol = 0.0;

  void validate() const;
};

/// Per-test-sample certification result. Radii count label flips; the
/// lower radius is always a sound certificate, the upper radius bounds
/// the exact radius from above, and the two coincide for exact modes.
struct CertificateOutcome {
  int index = 0;
  int predicted = 0;
  FlipCount radius_lower;
  FlipCount radius_upper;
  bool correct = false;
  std::optional<FlipCount> blackbox_radius;
};

}  // namespace flipcert

#endif  // FLIPCERT_CORE_HPP
