#ifndef FLIPCERT_PIPELINE_HPP
#define FLIPCERT_PIPELINE_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flipcert/core.hpp"
#include "flipcert/kernels.hpp"

namespace flipcert {

/// Assignment of training samples to partitions. Derived from features
/// only, so any relabeling attack leaves it unchanged.
struct Partitioning {
  std::vector<int> assignment;  // sample -> partition in [0, Np)
  int num_partitions = 0;
};

/// Sorts samples by the raw little-endian byte representation of their
/// feature rows (ties by original index) and assigns sorted rank s to
/// partition s mod Np. Deterministic and label-independent.
Partitioning partition_data(const Dataset& train, int num_partitions);

enum class CertifyMode { whitebox, blackbox, both, standalone };

CertifyMode parse_mode(const std::string& text);
std::string mode_to_string(CertifyMode mode);

/// Prepares per-partition kernels once, then certifies test samples
/// against them. Immutable after construction; certify() is safe to
/// call concurrently.
class Certifier {
 public:
  Certifier(const Dataset& train, int num_partitions, CertConfig config,
            const KernelSpec& kernel_spec, CertifyMode mode);

  /// Certifies one test sample. Under a precomputed kernel spec,
  /// `test_index` selects the kernel row; under the linear kernel the
  /// row is computed from `test_features`.
  CertificateOutcome certify(int test_index,
                             const Eigen::VectorXd& test_features,
                             int true_label) const;

  const Partitioning& partitioning() const { return partitioning_; }
  int num_test_rows() const;  // -1 when not precomputed

 private:
  struct Partition {
    std::vector<int> indices;
    Eigen::MatrixXd features;  // empty under precomputed kernels
    std::unique_ptr<RidgeSolver> solver;  // regression loss only
  };

  std::vector<TestKernelRow> make_rows(int test_index,
                                       const Eigen::VectorXd& test_features) const;

  CertConfig config_;
  CertifyMode mode_;
  int num_classes_;
  Partitioning partitioning_;
  std::vector<Partition> partitions_;
  std::vector<OneHotLabels> labels_;  // one per partition
  std::optional<PrecomputedKernel> precomputed_;
};

/// Evaluation output: per-sample certificates plus the run settings
/// needed to interpret them.
struct RobustnessReport {
  CertifyMode mode = CertifyMode::whitebox;
  int num_partitions = 0;
  LossKind loss = LossKind::svm;
  double svm_c = 0.0;
  double lambda = 0.0;
  std::string kernel;
  std::vector<CertificateOutcome> outcomes;
};

/// Runs partitioning, kernel preparation, and per-sample certification
/// over (at most `limit`) test samples, fanning out across `threads`
/// workers. Output is identical regardless of thread count.
RobustnessReport evaluate(const Dataset& train, const Dataset& test,
                          int num_partitions, const CertConfig& config,
                          const KernelSpec& kernel_spec, CertifyMode mode,
                          int threads = 1, int limit = -1);

/// Certified-accuracy curves and median certified robustness.
struct ReportMetrics {
  double clean_accuracy = 0.0;
  int num_evaluated = 0;
  int num_correct = 0;
  std::uint64_t max_radius = 0;  // largest finite radius on the curves
  std::vector<double> curve_lower;     // index r = flips
  std::vector<double> curve_upper;
  std::vector<double> curve_blackbox;  // empty when unavailable
  std::optional<FlipCount> mcr_lower;  // nullopt when no correct samples
  std::optional<FlipCount> mcr_upper;
  std::optional<FlipCount> mcr_blackbox;
};

ReportMetrics compute_metrics(const RobustnessReport& report);

void write_results_json(const RobustnessReport& report,
                        const std::filesystem::path& path);
RobustnessReport read_results_json(const std::filesystem::path& path);

void write_curve_csv(const ReportMetrics& metrics,
                     const std::filesystem::path& path);
void write_summary_json(const RobustnessReport& report,
                        const ReportMetrics& metrics,
                        const std::filesystem::path& path);

}  // namespace flipcert

#endif  // FLIPCERT_PIPELINE_HPP
