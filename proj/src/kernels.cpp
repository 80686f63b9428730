#include "flipcert/kernels.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flipcert {

namespace {

constexpr double kSymmetryRelTol = 1e-9;
constexpr double kPsdJitter = 1e-12;
constexpr double kResidualTol = 1e-10;
constexpr int kMaxRefinements = 3;

void check_square_finite(const Eigen::MatrixXd& q) {
  if (q.rows() < 1 || q.rows() != q.cols())
    throw ValidationError("kernel matrix must be square and non-empty");
  if (!q.allFinite()) throw ValidationError("non-finite kernel entry");
}

void check_symmetric(const Eigen::MatrixXd& q) {
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  const double asym = (q - q.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryRelTol * scale)
    throw ValidationError("kernel matrix is not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
}

double decode_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

Eigen::MatrixXd read_f64le_matrix(const std::filesystem::path& path,
                                  std::int64_t rows, std::int64_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open kernel file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string raw = std::move(buf).str();
  if (raw.size() != static_cast<std::size_t>(rows) * cols * 8)
    throw ValidationError("SizeMismatch: kernel file " + path.string() +
                          " holds " + std::to_string(raw.size() / 8) +
                          " values, expected " + std::to_string(rows * cols));
  Eigen::MatrixXd m(rows, cols);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j)
      m(i, j) = decode_f64le(bytes + (i * cols + j) * 8);
  if (!m.allFinite()) throw ValidationError("non-finite kernel entry");
  return m;
}

}  // namespace

TrainKernel TrainKernel::from_gram(Eigen::MatrixXd q) {
  check_square_finite(q);
  check_symmetric(q);
  Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
  return TrainKernel(std::move(sym));
}

TrainKernel TrainKernel::ingest(Eigen::MatrixXd q) {
  TrainKernel kernel = from_gram(std::move(q));
  Eigen::MatrixXd shifted = kernel.q_;
  shifted.diagonal().array() += kPsdJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw ValidationError(
        "kernel matrix is not positive semidefinite (factorization failed)");
  return kernel;
}

TrainKernel linear_ntk_train(const Eigen::MatrixXd& features) {
  if (features.rows() < 1) throw ValidationError("empty feature matrix");
  if (!features.allFinite()) throw ValidationError("non-finite feature value");
  const auto m = features.rows();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(features, 2.0);
  gram.triangularView<Eigen::StrictlyUpper>() =
      gram.transpose().triangularView<Eigen::StrictlyUpper>();
  return TrainKernel::from_gram(std::move(gram));
}

TestKernelRow linear_ntk_row(const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& test_point) {
  if (features.cols() != test_point.size())
    throw ValidationError("test point dimension does not match features");
  if (!test_point.allFinite())
    throw ValidationError("non-finite test feature value");
  return make_kernel_row(2.0 * (features * test_point), /*effective=*/false);
}

bool check_small_c(const TrainKernel& kernel, double svm_c) {
  if (!(svm_c > 0)) throw ValidationError("C must be positive");
  const double max_row_sum = kernel.matrix().cwiseAbs().rowwise().sum().maxCoeff();
  return max_row_sum <= 1.0 / svm_c;
}

RidgeSolver::RidgeSolver(const TrainKernel& kernel, double lambda) {
  if (!(lambda >= 0)) throw ValidationError("lambda must be non-negative");
  system_ = kernel.matrix();
  system_.diagonal().array() += lambda;
  llt_.compute(system_);
  if (llt_.info() != Eigen::Success)
    throw NumericError(
        "cannot factor (Q + lambda I); system is singular or not PSD");
}

TestKernelRow RidgeSolver::solve(const TestKernelRow& raw_row) const {
  if (raw_row.size() != system_.rows())
    throw ValidationError("kernel-row length does not match partition size");
  const Eigen::VectorXd& q = raw_row.values;
  const double bound = kResidualTol * (1.0 + q.cwiseAbs().maxCoeff());

  Eigen::VectorXd z = llt_.solve(q);
  for (int pass = 0; pass < kMaxRefinements; ++pass) {
    Eigen::VectorXd residual = q - system_ * z;
    if (residual.cwiseAbs().maxCoeff() <= bound)
      return make_kernel_row(std::move(z), /*effective=*/true);
    z += llt_.solve(residual);
  }
  const double final_residual = (q - system_ * z).cwiseAbs().maxCoeff();
  if (final_residual > bound)
    throw NumericError("effective-kernel solve residual " +
                       std::to_string(final_residual) +
                       " exceeds bound " + std::to_string(bound));
  return make_kernel_row(std::move(z), /*effective=*/true);
}

TestKernelRow effective_kernel(const TrainKernel& kernel,
                               const TestKernelRow& raw_row, double lambda) {
  return RidgeSolver(kernel, lambda).solve(raw_row);
}

KernelSpec KernelSpec::parse(const std::string& text) {
  if (text == "linear") return KernelSpec{Kind::linear, {}};
  const std::string prefix = "precomputed:";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size())
    return KernelSpec{Kind::precomputed, text.substr(prefix.size())};
  throw ValidationError("unknown kernel spec \"" + text +
                        "\"; expected \"linear\" or \"precomputed:PATH\"");
}

std::string KernelSpec::to_string() const {
  return kind == Kind::linear ? "linear"
                              : "precomputed:" + manifest.string();
}

PrecomputedKernel load_precomputed(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in)
      throw ValidationError("cannot open kernel manifest: " +
                            manifest_path.string());
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("invalid kernel manifest JSON: " +
                            std::string(e.what()));
    }
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!manifest.contains(key))
      throw ValidationError(std::string("kernel manifest missing field: ") + key);
    return manifest.at(key);
  };
  const std::int64_t m = require("m").get<std::int64_t>();
  const std::int64_t n_test = require("n_test").get<std::int64_t>();
  if (m < 1 || n_test < 1)
    throw ValidationError("kernel manifest must declare m >= 1, n_test >= 1");

  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
  };

  Eigen::MatrixXd train =
      read_f64le_matrix(resolve(require("train_kernel").get<std::string>()), m, m);
  // Validation only; partition submatrices of a PSD matrix stay PSD.
  TrainKernel::ingest(train);
  Eigen::MatrixXd test_rows = read_f64le_matrix(
      resolve(require("test_rows").get<std::string>()), n_test, m);
  return PrecomputedKernel{std::move(train), std::move(test_rows)};
}

}  // namespace flipcert
