// Acceptance suite: runs every exit criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flipcert/core.hpp"
#include "flipcert/ensemble_cert.hpp"
#include "flipcert/pipeline.hpp"
#include "flipcert/selfcheck.hpp"
#include "test_util.hpp"

using namespace flipcert;

namespace {

constexpr std::uint64_t kSeed = 20250810;

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void report(int id, const std::string& label, bool pass,
            const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": "
            << label;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!pass) ++g_failures;
}

void run_check(int id, const std::string& label, CheckResult result,
               double started_elapsed, double budget_seconds) {
  std::ostringstream detail;
  detail << result.trials << " trials, " << result.failures << " failures, "
         << started_elapsed << "s";
  bool pass = result.passed();
  if (budget_seconds > 0 && started_elapsed > budget_seconds) {
    pass = false;
    detail << ", over the " << budget_seconds << "s budget";
  }
  if (!result.note.empty()) detail << "; " << result.note;
  report(id, label, pass, detail.str());
}

std::string fmt_flips(const std::optional<FlipCount>& f) {
  return f ? f->to_string() : "n/a";
}

void criterion_trend() {
  const auto start = std::chrono::steady_clock::now();
  const Dataset train = testutil::gaussian_pair(kSeed + 100, 400, 4, 3.0);
  const Dataset test = testutil::gaussian_pair(kSeed + 101, 200, 4, 3.0);

  CertConfig config;
  config.loss = LossKind::regression;
  config.lambda = 1.0;
  const KernelSpec linear = KernelSpec::parse("linear");

  std::ostringstream detail;
  bool pass = true;

  std::map<int, ReportMetrics> metrics;
  std::map<int, RobustnessReport> reports;
  for (int np : {1, 5, 10, 20}) {
    reports[np] =
        evaluate(train, test, np, config, linear, CertifyMode::both, 2);
    metrics[np] = compute_metrics(reports[np]);
  }

  for (int np : {1, 5, 10, 20}) {
    const auto& m = metrics[np];
    detail << "Np=" << np << " lb=" << fmt_flips(m.mcr_lower)
           << " bb=" << fmt_flips(m.mcr_blackbox) << "; ";
    if (!m.mcr_lower || !m.mcr_blackbox) {
      pass = false;
      detail << "missing MCR; ";
      continue;
    }
    if (*m.mcr_lower < *m.mcr_blackbox) {
      pass = false;
      detail << "white-box MCR below black-box at Np=" << np << "; ";
    }
    if ((np == 5 || np == 10) && !(*m.mcr_lower > *m.mcr_blackbox)) {
      pass = false;
      detail << "no strict improvement at Np=" << np << "; ";
    }
  }

  // Collapse radius of the best black-box ensemble: the smallest r at
  // which its certified accuracy reaches zero.
  std::uint64_t collapse = 0;
  for (int np : {5, 10, 20}) {
    std::uint64_t worst = 0;
    for (const auto& o : reports[np].outcomes)
      if (o.correct && o.blackbox_radius && o.blackbox_radius->finite())
        worst = std::max(worst, o.blackbox_radius->value() + 1);
    collapse = std::max(collapse, worst);
  }

  const RobustnessReport standalone = evaluate(
      train, test, 1, config, linear, CertifyMode::standalone, 2);
  int surviving = 0;
  for (const auto& o : standalone.outcomes)
    if (o.correct && o.radius_lower >= FlipCount(collapse)) ++surviving;
  const double acc_at_collapse =
      static_cast<double>(surviving) / standalone.outcomes.size();
  detail << "blackbox collapse r=" << collapse << ", standalone acc there "
         << acc_at_collapse;
  if (!(acc_at_collapse > 0.0)) {
    pass = false;
    detail << "; standalone accuracy hit zero";
  }

  const double elapsed = seconds_since(start);
  detail << ", " << elapsed << "s";
  if (elapsed > 120.0) {
    pass = false;
    detail << ", over the 120s budget";
  }
  report(8, "white-box trend on the synthetic two-Gaussian set", pass,
         detail.str());
}

void criterion_determinism(const std::string& cli_path) {
  testutil::TempDir dir;
  const Dataset train = testutil::gaussian_pair(kSeed + 200, 30, 3, 3.0);
  const Dataset test = testutil::gaussian_pair(kSeed + 201, 10, 3, 3.0);
  const auto train_manifest =
      testutil::write_dataset(dir.path(), "train", train.features,
                              std::vector<int>(train.labels.data(),
                                               train.labels.data() + 30),
                              2);
  const auto test_manifest =
      testutil::write_dataset(dir.path(), "test", test.features,
                              std::vector<int>(test.labels.data(),
                                               test.labels.data() + 10),
                              2);

  auto run = [&](const std::string& out) {
    const std::string cmd = "\"" + cli_path + "\" certify --train \"" +
                            train_manifest.string() + "\" --test \"" +
                            test_manifest.string() +
                            "\" --partitions 3 --loss regression --lambda 1 "
                            "--kernel linear --mode both --out \"" +
                            (dir.path() / out).string() + "\" > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  const int first = run("a.json");
  const int second = run("b.json");

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
  };
  const std::string a = slurp(dir.path() / "a.json");
  const std::string b = slurp(dir.path() / "b.json");

  const bool pass = first == 0 && second == 0 && !a.empty() && a == b;
  std::ostringstream detail;
  detail << "exit codes " << first << "/" << second << ", " << a.size()
         << " bytes, byte-identical: " << (a == b ? "yes" : "no");
  report(9, "two certify runs produce byte-identical results", pass,
         detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli_path = argc > 1 ? argv[1] : "";

  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_binary_exact(kSeed, 500, 12);
    run_check(1, "binary certificate exactness", std::move(r),
              seconds_since(start), 30.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_targeted_sandwich(kSeed + 1, 300, 8, 3);
    run_check(2, "targeted bound sandwich and min equality", std::move(r),
              seconds_since(start), 60.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_ensemble_equivalence(kSeed + 2, 300, 6, 4);
    run_check(3, "knapsack relaxation equals exhaustive minimum", std::move(r),
              seconds_since(start), 60.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_blackbox_consistency(kSeed + 3, 1000, 50, 10);
    run_check(4, "vote-formula consistency and dominance", std::move(r),
              seconds_since(start), 0.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_small_c_duals(kSeed + 4, 100, 50);
    run_check(5, "pinned duals in the small-C regime", std::move(r),
              seconds_since(start), 0.0);
  }
  {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r = check_effective_kernel(kSeed + 5, 100, 100);
    run_check(6, "effective-kernel residual bound", std::move(r),
              seconds_since(start), 0.0);
  }
  {
    // Independent long-double evaluation of the closed form.
    const long double p = 1e-6L;
    const long double q = 0.1L;
    const long double reference =
        std::log(4.0L * p * (1.0L - p)) /
        (2.0L * (1.0L - 2.0L * q) * std::log(q / (1.0L - q)));
    const double at_half = rs_targeted_radius(0.5, 0.1);
    const double at_small = rs_targeted_radius(1e-6, 0.1);
    const bool pass = at_half == 0.0 &&
                      std::abs(at_small - static_cast<double>(reference)) <= 1e-6 &&
                      rs_certified_flips(1e-6, 0.1) == 3;
    std::ostringstream detail;
    detail << "r(0.5)=" << at_half << ", r(1e-6)=" << at_small
           << ", reference=" << static_cast<double>(reference);
    report(7, "smoothed-classifier radius spot values", pass, detail.str());
  }

  try {
    criterion_trend();
  } catch (const std::exception& e) {
    report(8, "white-box trend on the synthetic two-Gaussian set", false,
           std::string("exception: ") + e.what());
  }

  if (cli_path.empty()) {
    report(9, "two certify runs produce byte-identical results", false,
           "no CLI path supplied");
  } else {
    try {
      criterion_determinism(cli_path);
    } catch (const std::exception& e) {
      report(9, "two certify runs produce byte-identical results", false,
             std::string("exception: ") + e.what());
    }
  }

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all acceptance criteria passed\n";
  return 0;
}
