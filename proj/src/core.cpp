#include "flipcert/core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flipcert {

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

double decode_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

}  // namespace

Dataset validate_dataset(Eigen::MatrixXd features, Eigen::VectorXi labels,
                         int num_classes) {
  const auto n = features.rows();
  if (n < 1 || features.cols() < 1)
    throw ValidationError("dataset must have n >= 1 samples and d >= 1 features");
  if (num_classes < 2) throw ValidationError("num_classes must be at least 2");
  if (labels.size() != n)
    throw ValidationError("SizeMismatch: label count " +
                          std::to_string(labels.size()) +
                          " does not match sample count " + std::to_string(n));
  if (!features.allFinite())
    throw ValidationError("non-finite feature value in dataset");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw ValidationError("LabelOutOfRange: label " +
                            std::to_string(labels[i]) + " at sample " +
                            std::to_string(i) + " with K = " +
                            std::to_string(num_classes));
  }
  return Dataset{std::move(features), std::move(labels), num_classes};
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in)
      throw ValidationError("cannot open manifest: " + manifest_path.string());
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("invalid manifest JSON: " + std::string(e.what()));
    }
  }

  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!manifest.contains(key))
      throw ValidationError(std::string("manifest missing field: ") + key);
    return manifest.at(key);
  };

  const std::int64_t n = require("n").get<std::int64_t>();
  const std::int64_t d = require("d").get<std::int64_t>();
  const int k = require("K").get<int>();
  if (require("dtype").get<std::string>() != "f64le")
    throw ValidationError("unsupported dtype; expected \"f64le\"");
  if (require("layout").get<std::string>() != "row-major")
    throw ValidationError("unsupported layout; expected \"row-major\"");
  if (n < 1 || d < 1) throw ValidationError("manifest must declare n >= 1, d >= 1");

  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
  };

  const std::string raw =
      read_file_bytes(resolve(require("features").get<std::string>()));
  const std::size_t expected = static_cast<std::size_t>(n) * d * 8;
  if (raw.size() != expected)
    throw ValidationError("SizeMismatch: feature file holds " +
                          std::to_string(raw.size() / 8) + " values, expected " +
                          std::to_string(n * d));

  Eigen::MatrixXd features(n, d);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < d; ++j)
      features(i, j) = decode_f64le(bytes + (i * d + j) * 8);

  Eigen::VectorXi labels(n);
  {
    std::ifstream in(resolve(require("labels").get<std::string>()));
    if (!in) throw ValidationError("cannot open label file");
    std::string line;
    std::int64_t count = 0;
    while (std::getline(in, line)) {
      if (line.empty() && in.eof()) break;
      if (count >= n)
        throw ValidationError("SizeMismatch: label file has more than " +
                              std::to_string(n) + " lines");
      std::size_t pos = 0;
      int value = 0;
      try {
        value = std::stoi(line, &pos);
      } catch (const std::exception&) {
        throw ValidationError("invalid label line: \"" + line + "\"");
      }
      if (pos != line.size())
        throw ValidationError("invalid label line: \"" + line + "\"");
      labels[count++] = value;
    }
    if (count != n)
      throw ValidationError("SizeMismatch: label file holds " +
                            std::to_string(count) + " labels, expected " +
                            std::to_string(n));
  }

  return validate_dataset(std::move(features), std::move(labels), k);
}

OneHotLabels::OneHotLabels(Eigen::VectorXi labels, int num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  if (num_classes_ < 2) throw ValidationError("num_classes must be at least 2");
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_)
      throw ValidationError("LabelOutOfRange in one-hot construction");
  }
}

OneHotLabels OneHotLabels::from_matrix(const Eigen::MatrixXd& onehot) {
  const auto n = onehot.rows();
  const auto k = onehot.cols();
  Eigen::VectorXi labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    int hits = 0;
    int cls = -1;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double v = onehot(i, c);
      if (v == 1.0) {
        ++hits;
        cls = static_cast<int>(c);
      } else if (v != 0.0) {
        throw ValidationError("one-hot matrix entries must be exactly 0 or 1");
      }
    }
    if (hits != 1)
      throw ValidationError("one-hot row " + std::to_string(i) +
                            " does not sum to exactly 1");
    labels[i] = cls;
  }
  return OneHotLabels(std::move(labels), static_cast<int>(k));
}

SignedLabels::SignedLabels(std::vector<int> labels) : labels_(std::move(labels)) {
  for (int v : labels_)
    if (v != 1 && v != -1)
      throw ValidationError("signed labels must be exactly +1 or -1");
}

TestKernelRow make_kernel_row(Eigen::VectorXd values, bool effective) {
  if (!values.allFinite())
    throw ValidationError("non-finite value in kernel row");
  return TestKernelRow{std::move(values), effective};
}

ClassScores class_scores(const OneHotLabels& labels, const TestKernelRow& q) {
  if (labels.size() != q.size())
    throw ValidationError("label count does not match kernel-row length");
  ClassScores scores = ClassScores::Zero(labels.num_classes());
  for (int i = 0; i < labels.size(); ++i) scores[labels.label(i)] += q.values[i];
  return scores;
}

int predict(const ClassScores& scores) {
  if (scores.size() < 2) throw ValidationError("need at least two class scores");
  if (!scores.allFinite()) throw NumericError("non-finite class score");
  int best = 0;
  for (int c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return best;
}

bool overtakes(double target_score, int target, double ref_score, int ref,
               double tol) {
  if (target == ref) return true;
  if (target < ref) return target_score >= ref_score - tol;
  return target_score > ref_score - tol;
}

bool target_reached(const ClassScores& scores, int target, double tol) {
  if (target < 0 || target >= scores.size())
    throw ValidationError("target class out of range");
  for (int c = 0; c < scores.size(); ++c)
    if (c != target && !overtakes(scores[target], target, scores[c], c, tol))
      return false;
  return true;
}

VoteConfig::VoteConfig(std::vector<int> votes, int num_classes)
    : votes_(std::move(votes)), num_classes_(num_classes) {
  if (votes_.empty()) throw ValidationError("empty vote vector");
  if (num_classes_ < 2) throw ValidationError("num_classes must be at least 2");
  counts_.assign(num_classes_, 0);
  for (int v : votes_) {
    if (v < 0 || v >= num_classes_)
      throw ValidationError("vote out of class range");
    ++counts_[v];
  }
}

int VoteConfig::majority() const {
  int best = 0;
  for (int c = 1; c < num_classes_; ++c)
    if (counts_[c] > counts_[best]) best = c;
  return best;
}

FlipCostMatrix::FlipCostMatrix(int num_partitions, int num_classes,
                               BoundKind kind)
    : num_partitions_(num_partitions),
      num_classes_(num_classes),
      kind_(kind),
      costs_(static_cast<std::size_t>(num_partitions) * num_classes) {
  if (num_partitions < 1 || num_classes < 2)
    throw ValidationError("flip-cost matrix needs >= 1 partition and >= 2 classes");
}

void FlipCostMatrix::require_zero_at_votes(const VoteConfig& votes) const {
  if (votes.num_partitions() != num_partitions_ ||
      votes.num_classes() != num_classes_)
    throw ValidationError("vote configuration does not match flip-cost matrix");
  for (int i = 0; i < num_partitions_; ++i)
    if (at(i, votes.votes()[i]) != FlipCount(0))
      throw ValidationError("malformed flip-cost matrix: row " +
                            std::to_string(i) +
                            " has no zero at the current vote");
}

void CertConfig::validate() const {
  if (!(svm_c > 0)) throw ValidationError("C must be positive");
  if (!(lambda >= 0)) throw ValidationError("lambda must be non-negative");
  if (!(score_tol >= 0)) throw ValidationError("score tolerance must be non-negative");
}

}  // namespace flipcert
