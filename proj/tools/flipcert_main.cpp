#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flipcert/core.hpp"
#include "flipcert/pipeline.hpp"
#include "flipcert/selfcheck.hpp"

namespace {

struct CertifyArgs {
  std::string train;
  std::string test;
  int partitions = 1;
  std::string loss = "svm";
  double svm_c = 1.0;
  double lambda = 0.0;
  double score_tol = 0.0;
  std::string kernel = "linear";
  std::string mode = "whitebox";
  std::string out;
  int threads = 1;
  int limit = -1;
};

struct MetricsArgs {
  std::string in;
  std::string curve;
  std::string summary;
};

struct OracleCheckArgs {
  std::uint64_t seed = 1;
  int trials = 200;
};

std::string optional_flips(const std::optional<flipcert::FlipCount>& f) {
  return f ? f->to_string() : "n/a";
}

int run_certify(const CertifyArgs& args) {
  using namespace flipcert;
  const Dataset train = load_dataset(args.train);
  const Dataset test = load_dataset(args.test);

  CertConfig config;
  config.svm_c = args.svm_c;
  config.lambda = args.lambda;
  config.score_tol = args.score_tol;
  if (args.loss == "svm")
    config.loss = LossKind::svm;
  else if (args.loss == "regression")
    config.loss = LossKind::regression;
  else
    throw ValidationError("loss must be svm or regression");

  const KernelSpec spec = KernelSpec::parse(args.kernel);
  const CertifyMode mode = parse_mode(args.mode);

  const RobustnessReport report = evaluate(
      train, test, args.partitions, config, spec, mode, args.threads, args.limit);
  write_results_json(report, args.out);

  const ReportMetrics metrics = compute_metrics(report);
  std::cout << "certified " << metrics.num_evaluated << " samples ("
            << metrics.num_correct << " correct, clean accuracy "
            << metrics.clean_accuracy << ")\n"
            << "median certified robustness: lb="
            << optional_flips(metrics.mcr_lower)
            << " ub=" << optional_flips(metrics.mcr_upper)
            << " blackbox=" << optional_flips(metrics.mcr_blackbox) << "\n"
            << "results written to " << args.out << "\n";
  return 0;
}

int run_metrics(const MetricsArgs& args) {
  using namespace flipcert;
  const RobustnessReport report = read_results_json(args.in);
  const ReportMetrics metrics = compute_metrics(report);
  if (!args.curve.empty()) write_curve_csv(metrics, args.curve);
  if (!args.summary.empty()) write_summary_json(report, metrics, args.summary);
  std::cout << "n=" << metrics.num_evaluated
            << " clean_accuracy=" << metrics.clean_accuracy
            << " mcr_lb=" << optional_flips(metrics.mcr_lower)
            << " mcr_ub=" << optional_flips(metrics.mcr_upper)
            << " mcr_blackbox=" << optional_flips(metrics.mcr_blackbox) << "\n";
  return 0;
}

int run_oracle_check(const OracleCheckArgs& args) {
  const auto results = flipcert::run_all_checks(args.seed, args.trials);
  bool any_failed = false;
  for (const auto& r : results) {
    std::cout << (r.passed() ? "[ok]   " : "[FAIL] ") << r.name << ": trials="
              << r.trials << " failures=" << r.failures;
    if (!r.note.empty()) std::cout << " (" << r.note << ")";
    std::cout << "\n";
    any_failed = any_failed || !r.passed();
  }
  return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flipcert: certified robustness against training-label flips"};
  app.require_subcommand(1);

  CertifyArgs certify_args;
  auto* certify = app.add_subcommand(
      "certify", "certify test samples against label-flipping attacks");
  certify->add_option("--train", certify_args.train, "training-set manifest")
      ->required();
  certify->add_option("--test", certify_args.test, "test-set manifest")
      ->required();
  certify
      ->add_option("--partitions", certify_args.partitions,
                   "number of ensemble partitions")
      ->required();
  certify->add_option("--loss", certify_args.loss, "svm or regression");
  certify->add_option("--C", certify_args.svm_c, "SVM regularization C");
  certify->add_option("--lambda", certify_args.lambda,
                      "ridge regularization lambda");
  certify->add_option("--kernel", certify_args.kernel,
                      "linear or precomputed:PATH");
  certify->add_option("--mode", certify_args.mode,
                      "whitebox, blackbox, both, or standalone");
  certify->add_option("--out", certify_args.out, "output results.json")
      ->required();
  certify->add_option("--threads", certify_args.threads, "worker threads");
  certify->add_option("--limit", certify_args.limit,
                      "certify only the first N test samples");
  certify->add_option("--score-tol", certify_args.score_tol,
                      "score comparison tolerance for noisy kernels");

  MetricsArgs metrics_args;
  auto* metrics = app.add_subcommand(
      "metrics", "compute certified-accuracy curves from results.json");
  metrics->add_option("--in", metrics_args.in, "results.json path")->required();
  metrics->add_option("--curve", metrics_args.curve, "output curve.csv");
  metrics->add_option("--summary", metrics_args.summary, "output summary.json");

  OracleCheckArgs oracle_args;
  auto* oracle = app.add_subcommand(
      "oracle-check", "run the property suite against brute-force oracles");
  oracle->add_option("--seed", oracle_args.seed, "random seed");
  oracle->add_option("--trials", oracle_args.trials, "trials per property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (certify->parsed()) return run_certify(certify_args);
    if (metrics->parsed()) return run_metrics(metrics_args);
    return run_oracle_check(oracle_args);
  } catch (const flipcert::SmallCViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const flipcert::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const flipcert::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
