#ifndef FLIPCERT_KERNELS_HPP
#define FLIPCERT_KERNELS_HPP

#include <filesystem>
#include <memory>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "flipcert/core.hpp"

namespace flipcert {

/// Symmetric PSD kernel matrix over one partition's training samples.
class TrainKernel {
 public:
  /// Wraps a Gram-style matrix produced in-process: checks squareness,
  /// finiteness, and symmetry (1e-9 relative to the largest entry),
  /// then symmetrizes exactly.
  static TrainKernel from_gram(Eigen::MatrixXd q);

  /// Ingestion route for external matrices: from_gram checks plus a PSD
  /// check by attempting a factorization of Q + 1e-12 I.
  static TrainKernel ingest(Eigen::MatrixXd q);

  const Eigen::MatrixXd& matrix() const { return q_; }
  int size() const { return static_cast<int>(q_.rows()); }

 private:
  explicit TrainKernel(Eigen::MatrixXd q) : q_(std::move(q)) {}
  Eigen::MatrixXd q_;
};

/// Closed-form kernel of an infinitely wide one-hidden-layer linear
/// network: Theta(x, x') = 2 <x, x'>. The scale constant is cosmetic
/// for certification (all certificates are invariant to positive
/// scaling) and fixed here for reproducibility.
TrainKernel linear_ntk_train(const Eigen::MatrixXd& features);

/// Row of the same kernel between one test point and the partition's
/// training samples: entries 2 <x_i, t>.
TestKernelRow linear_ntk_row(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& test_point);

/// True iff max_i sum_j |Q_ij| <= 1/C. In that regime every SVM dual
/// variable equals C for any labeling, so certification may ignore the
/// training problem entirely.
bool check_small_c(const TrainKernel& kernel, double svm_c);

/// Factors (Q + lambda I) once and maps raw kernel rows to
/// regression-effective rows z = (Q + lambda I)^{-1} q. Solutions are
/// refined until the residual satisfies
///   ||(Q + lambda I) z - q||_inf <= 1e-10 * (1 + ||q||_inf).
class RidgeSolver {
 public:
  RidgeSolver(const TrainKernel& kernel, double lambda);

  TestKernelRow solve(const TestKernelRow& raw_row) const;

 private:
  Eigen::MatrixXd system_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// One-shot form of RidgeSolver for a single row.
TestKernelRow effective_kernel(const TrainKernel& kernel,
                               const TestKernelRow& raw_row, double lambda);

/// Kernel source selection: the closed-form linear kernel, or a
/// precomputed kernel ingested from a manifest.
struct KernelSpec {
  enum class Kind { linear, precomputed };

  Kind kind = Kind::linear;
  std::filesystem::path manifest;

  /// Parses "linear" or "precomputed:PATH".
  static KernelSpec parse(const std::string& text);

  std::string to_string() const;
};

/// Full-training-set kernel loaded from a manifest with fields
/// {m, n_test, train_kernel, test_rows}; the kernel file is m x m and
/// the test-row file n_test x m, both raw little-endian f64 row-major.
struct PrecomputedKernel {
  Eigen::MatrixXd train;      // validated PSD on load
  Eigen::MatrixXd test_rows;  // one row per test sample
};

PrecomputedKernel load_precomputed(const std::filesystem::path& manifest_path);

}  // namespace flipcert

#endif  // FLIPCERT_KERNELS_HPP
