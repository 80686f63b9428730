#include "flipcert/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "flipcert/ensemble_cert.hpp"
#include "flipcert/model_cert.hpp"

namespace flipcert {

namespace {

// Lexicographic comparison of two feature rows by their little-endian
// byte representation.
bool row_bytes_less(const Eigen::MatrixXd& x, int a, int b) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto bits_a = std::bit_cast<std::uint64_t>(x(a, j));
    const auto bits_b = std::bit_cast<std::uint64_t>(x(b, j));
    if (bits_a == bits_b) continue;
    for (int byte = 0; byte < 8; ++byte) {
      const auto ba = (bits_a >> (8 * byte)) & 0xff;
      const auto bb = (bits_b >> (8 * byte)) & 0xff;
      if (ba != bb) return ba < bb;
    }
  }
  return false;
}

nlohmann::json flips_to_json(FlipCount f) {
  if (f.is_inf()) return nlohmann::json("inf");
  return nlohmann::json(f.value());
}

FlipCount flips_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return FlipCount::inf();
    throw ValidationError("invalid radius value in results file");
  }
  return FlipCount(j.get<std::uint64_t>());
}

std::string loss_to_string(LossKind loss) {
  return loss == LossKind::svm ? "svm" : "regression";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "svm") return LossKind::svm;
  if (s == "regression") return LossKind::regression;
  throw ValidationError("unknown loss kind: " + s);
}

double certified_accuracy(const std::vector<CertificateOutcome>& outcomes,
                          std::uint64_t r, FlipCount CertificateOutcome::*radius) {
  if (outcomes.empty()) return 0.0;
  int hits = 0;
  for (const auto& o : outcomes)
    if (o.correct && o.*radius >= FlipCount(r)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double certified_accuracy_blackbox(
    const std::vector<CertificateOutcome>& outcomes, std::uint64_t r) {
  if (outcomes.empty()) return 0.0;
  int hits = 0;
  for (const auto& o : outcomes)
    if (o.correct && o.blackbox_radius && *o.blackbox_radius >= FlipCount(r))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

// Lower median: the largest radius r such that at least half of the
// values are >= r; with infinities, this is infinite exactly when more
// than half of the values are infinite.
std::optional<FlipCount> lower_median(std::vector<FlipCount> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

Partitioning partition_data(const Dataset& train, int num_partitions) {
  const int n = train.num_samples();
  if (num_partitions < 1 || num_partitions > n)
    throw ValidationError("number of partitions must lie in [1, n]");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (row_bytes_less(train.features, a, b)) return true;
    if (row_bytes_less(train.features, b, a)) return false;
    return a < b;
  });

  Partitioning part;
  part.num_partitions = num_partitions;
  part.assignment.resize(n);
  for (int rank = 0; rank < n; ++rank)
    part.assignment[order[rank]] = rank % num_partitions;
  return part;
}

CertifyMode parse_mode(const std::string& text) {
  if (text == "whitebox") return CertifyMode::whitebox;
  if (text == "blackbox") return CertifyMode::blackbox;
  if (text == "both") return CertifyMode::both;
  if (text == "standalone") return CertifyMode::standalone;
  throw ValidationError("unknown mode: " + text);
}

std::string mode_to_string(CertifyMode mode) {
  switch (mode) {
    case CertifyMode::whitebox: return "whitebox";
    case CertifyMode::blackbox: return "blackbox";
    case CertifyMode::both: return "both";
    case CertifyMode::standalone: return "standalone";
  }
  throw ValidationError("invalid mode");
}

Certifier::Certifier(const Dataset& train, int num_partitions,
                     CertConfig config, const KernelSpec& kernel_spec,
                     CertifyMode mode)
    : config_(config),
      mode_(mode),
      num_classes_(train.num_classes),
      partitioning_(partition_data(train, num_partitions)) {
  config_.validate();
  if (mode == CertifyMode::standalone && num_partitions != 1)
    throw ValidationError("standalone mode requires exactly one partition");

  if (kernel_spec.kind == KernelSpec::Kind::precomputed) {
    precomputed_ = load_precomputed(kernel_spec.manifest);
    if (precomputed_->train.rows() != train.num_samples())
      throw ValidationError(
          "precomputed kernel size does not match training set");
  }

  partitions_.resize(num_partitions);
  for (int i = 0; i < train.num_samples(); ++i)
    partitions_[partitioning_.assignment[i]].indices.push_back(i);

  labels_.reserve(partitions_.size());
  for (auto& part : partitions_) {
    const int m = static_cast<int>(part.indices.size());
    Eigen::VectorXi labels(m);
    for (int r = 0; r < m; ++r) labels[r] = train.labels[part.indices[r]];
    labels_.emplace_back(std::move(labels), num_classes_);

    std::optional<TrainKernel> kernel;
    if (precomputed_) {
      Eigen::MatrixXd sub(m, m);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
          sub(r, c) = precomputed_->train(part.indices[r], part.indices[c]);
      kernel = TrainKernel::from_gram(std::move(sub));
    } else {
      part.features.resize(m, train.dim());
      for (int r = 0; r < m; ++r)
        part.features.row(r) = train.features.row(part.indices[r]);
      kernel = linear_ntk_train(part.features);
    }

    if (config_.loss == LossKind::svm) {
      // The scalable SVM certificate is only valid when every dual
      // variable is pinned at C regardless of labels.
      if (!check_small_c(*kernel, config_.svm_c))
        throw SmallCViolation(
            "small-C condition fails on a partition kernel: need "
            "max row abs sum <= 1/C");
    } else {
      part.solver = std::make_unique<RidgeSolver>(*kernel, config_.lambda);
    }
  }
}

int Certifier::num_test_rows() const {
  return precomputed_ ? static_cast<int>(precomputed_->test_rows.rows()) : -1;
}

std::vector<TestKernelRow> Certifier::make_rows(
    int test_index, const Eigen::VectorXd& test_features) const {
  std::vector<TestKernelRow> rows;
  rows.reserve(partitions_.size());
  for (const auto& part : partitions_) {
    TestKernelRow raw;
    if (precomputed_) {
      if (test_index < 0 || test_index >= precomputed_->test_rows.rows())
        throw ValidationError("test index outside precomputed kernel rows");
      const int m = static_cast<int>(part.indices.size());
      Eigen::VectorXd values(m);
      for (int r = 0; r < m; ++r)
        values[r] = precomputed_->test_rows(test_index, part.indices[r]);
      raw = make_kernel_row(std::move(values));
    } else {
      raw = linear_ntk_row(part.features, test_features);
    }
    rows.push_back(config_.loss == LossKind::regression ? part.solver->solve(raw)
                                                        : std::move(raw));
  }
  return rows;
}

CertificateOutcome Certifier::certify(int test_index,
                                      const Eigen::VectorXd& test_features,
                                      int true_label) const {
  const std::vector<TestKernelRow> rows = make_rows(test_index, test_features);

  CertificateOutcome outcome;
  outcome.index = test_index;

  if (mode_ == CertifyMode::standalone) {
    const StandaloneCertificate cert =
        standalone_exact_radius(labels_[0], rows[0], config_.score_tol);
    outcome.predicted = cert.predicted;
    outcome.radius_lower = cert.radius;
    outcome.radius_upper = cert.radius;
    outcome.correct = outcome.predicted == true_label;
    return outcome;
  }

  const VoteConfig votes = partition_votes(labels_, rows, num_classes_);
  outcome.predicted = votes.majority();
  outcome.correct = outcome.predicted == true_label;

  if (mode_ == CertifyMode::blackbox) {
    const FlipCount radius = ssdpa_radius(votes);
    outcome.radius_lower = radius;
    outcome.radius_upper = radius;
    outcome.blackbox_radius = radius;
    return outcome;
  }

  const FlipCostMatrix rho_lower = flip_cost_matrix(
      labels_, rows, num_classes_, BoundKind::lower, config_.score_tol);
  const FlipCostMatrix rho_upper = flip_cost_matrix(
      labels_, rows, num_classes_, BoundKind::upper, config_.score_tol);
  outcome.radius_lower = ensemble_radius(rho_lower, votes).radius;
  outcome.radius_upper = ensemble_radius(rho_upper, votes).radius;
  if (mode_ == CertifyMode::both) outcome.blackbox_radius = ssdpa_radius(votes);
  return outcome;
}

RobustnessReport evaluate(const Dataset& train, const Dataset& test,
                          int num_partitions, const CertConfig& config,
                          const KernelSpec& kernel_spec, CertifyMode mode,
                          int threads, int limit) {
  if (train.num_classes != test.num_classes)
    throw ValidationError("train and test class counts differ");
  if (kernel_spec.kind == KernelSpec::Kind::linear &&
      train.dim() != test.dim())
    throw ValidationError("train and test feature dimensions differ");
  if (threads < 1) throw ValidationError("thread count must be positive");

  const Certifier certifier(train, num_partitions, config, kernel_spec, mode);
  int n_eval = test.num_samples();
  if (limit >= 0) n_eval = std::min(n_eval, limit);
  if (certifier.num_test_rows() >= 0 && certifier.num_test_rows() < n_eval)
    throw ValidationError("precomputed kernel has fewer test rows than needed");

  std::vector<CertificateOutcome> outcomes(n_eval);
  std::atomic<int> cursor{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int i = cursor.fetch_add(1);
      if (i >= n_eval || failed.load()) return;
      try {
        outcomes[i] =
            certifier.certify(i, test.features.row(i), test.labels[i]);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int workers = std::min(threads, n_eval > 0 ? n_eval : 1);
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  RobustnessReport report;
  report.mode = mode;
  report.num_partitions = num_partitions;
  report.loss = config.loss;
  report.svm_c = config.svm_c;
  report.lambda = config.lambda;
  report.kernel = kernel_spec.to_string();
  report.outcomes = std::move(outcomes);
  return report;
}

ReportMetrics compute_metrics(const RobustnessReport& report) {
  ReportMetrics metrics;
  metrics.num_evaluated = static_cast<int>(report.outcomes.size());

  bool have_blackbox = !report.outcomes.empty();
  std::vector<FlipCount> lower, upper, blackbox;
  std::uint64_t max_radius = 0;
  for (const auto& o : report.outcomes) {
    if (!o.blackbox_radius) have_blackbox = false;
    if (!o.correct) continue;
    ++metrics.num_correct;
    lower.push_back(o.radius_lower);
    upper.push_back(o.radius_upper);
    if (o.blackbox_radius) blackbox.push_back(*o.blackbox_radius);
    for (FlipCount f : {o.radius_lower, o.radius_upper}) {
      if (f.finite()) max_radius = std::max(max_radius, f.value());
    }
    if (o.blackbox_radius && o.blackbox_radius->finite())
      max_radius = std::max(max_radius, o.blackbox_radius->value());
  }
  metrics.clean_accuracy =
      metrics.num_evaluated == 0
          ? 0.0
          : static_cast<double>(metrics.num_correct) / metrics.num_evaluated;
  metrics.max_radius = max_radius;

  for (std::uint64_t r = 0; r <= max_radius; ++r) {
    metrics.curve_lower.push_back(certified_accuracy(
        report.outcomes, r, &CertificateOutcome::radius_lower));
    metrics.curve_upper.push_back(certified_accuracy(
        report.outcomes, r, &CertificateOutcome::radius_upper));
    if (have_blackbox)
      metrics.curve_blackbox.push_back(
          certified_accuracy_blackbox(report.outcomes, r));
  }

  metrics.mcr_lower = lower_median(std::move(lower));
  metrics.mcr_upper = lower_median(std::move(upper));
  if (have_blackbox) metrics.mcr_blackbox = lower_median(std::move(blackbox));
  return metrics;
}

void write_results_json(const RobustnessReport& report,
                        const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["header"] = {
      {"mode", mode_to_string(report.mode)},
      {"Np", report.num_partitions},
      {"loss", loss_to_string(report.loss)},
      {"C", report.svm_c},
      {"lambda", report.lambda},
      {"kernel", report.kernel},
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& o : report.outcomes) {
    nlohmann::json row = {
        {"index", o.index},
        {"predicted", o.predicted},
        {"correct", o.correct},
        {"radius_lb", flips_to_json(o.radius_lower)},
        {"radius_ub", flips_to_json(o.radius_upper)},
    };
    if (o.blackbox_radius)
      row["blackbox_radius"] = flips_to_json(*o.blackbox_radius);
    rows.push_back(std::move(row));
  }
  doc["results"] = std::move(rows);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write results file: " + path.string());
  out << doc.dump(2) << '\n';
}

RobustnessReport read_results_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open results file: " + path.string());
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("invalid results JSON: " + std::string(e.what()));
    }
  }
  RobustnessReport report;
  try {
    const auto& header = doc.at("header");
    report.mode = parse_mode(header.at("mode").get<std::string>());
    report.num_partitions = header.at("Np").get<int>();
    report.loss = loss_from_string(header.at("loss").get<std::string>());
    report.svm_c = header.at("C").get<double>();
    report.lambda = header.at("lambda").get<double>();
    report.kernel = header.at("kernel").get<std::string>();
    for (const auto& row : doc.at("results")) {
      CertificateOutcome o;
      o.index = row.at("index").get<int>();
      o.predicted = row.at("predicted").get<int>();
      o.correct = row.at("correct").get<bool>();
      o.radius_lower = flips_from_json(row.at("radius_lb"));
      o.radius_upper = flips_from_json(row.at("radius_ub"));
      if (row.contains("blackbox_radius"))
        o.blackbox_radius = flips_from_json(row.at("blackbox_radius"));
      report.outcomes.push_back(o);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid results JSON: " + std::string(e.what()));
  }
  return report;
}

void write_curve_csv(const ReportMetrics& metrics,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write curve file: " + path.string());
  out << "r,cert_acc_lb,cert_acc_ub,cert_acc_blackbox\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < metrics.curve_lower.size(); ++r) {
    out << r << ',' << fmt(metrics.curve_lower[r]) << ','
        << fmt(metrics.curve_upper[r]) << ',';
    if (r < metrics.curve_blackbox.size()) out << fmt(metrics.curve_blackbox[r]);
    out << '\n';
  }
}

void write_summary_json(const RobustnessReport& report,
                        const ReportMetrics& metrics,
                        const std::filesystem::path& path) {
  auto mcr_json = [](const std::optional<FlipCount>& mcr) {
    if (!mcr) return nlohmann::json(nullptr);
    return flips_to_json(*mcr);
  };
  nlohmann::json doc = {
      {"mode", mode_to_string(report.mode)},
      {"Np", report.num_partitions},
      {"loss", loss_to_string(report.loss)},
      {"C", report.svm_c},
      {"lambda", report.lambda},
      {"kernel", report.kernel},
      {"n_evaluated", metrics.num_evaluated},
      {"n_correct", metrics.num_correct},
      {"clean_accuracy", metrics.clean_accuracy},
      {"mcr_lb", mcr_json(metrics.mcr_lower)},
      {"mcr_ub", mcr_json(metrics.mcr_upper)},
      {"mcr_blackbox", mcr_json(metrics.mcr_blackbox)},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write summary file: " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace flipcert
