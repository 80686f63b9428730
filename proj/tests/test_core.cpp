#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "flipcert/core.hpp"
#include "test_util.hpp"

using namespace flipcert;

TEST_CASE("flip counts order and saturate") {
  CHECK(FlipCount(3) < FlipCount(4));
  CHECK(FlipCount(4) < FlipCount::inf());
  CHECK(FlipCount::inf() == FlipCount::inf());
  CHECK((FlipCount(2) + FlipCount(5)) == FlipCount(7));
  CHECK((FlipCount(2) + FlipCount::inf()).is_inf());
  CHECK(FlipCount(3).radius_from_min_flips() == FlipCount(2));
  CHECK(FlipCount(0).radius_from_min_flips() == FlipCount(0));
  CHECK(FlipCount::inf().radius_from_min_flips().is_inf());
  CHECK(FlipCount(7).to_string() == "7");
  CHECK(FlipCount::inf().to_string() == "inf");
}

TEST_CASE("dataset validation") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 1, 2, 3, 4, 5;
  Eigen::VectorXi y(3);
  y << 0, 1, 0;

  CHECK(validate_dataset(x, y, 2).num_samples() == 3);

  Eigen::VectorXi bad = y;
  bad[1] = 5;
  CHECK_THROWS_AS(validate_dataset(x, bad, 2), ValidationError);
  CHECK_THROWS_AS(validate_dataset(x, y.head(2), 2), ValidationError);
  CHECK_THROWS_AS(validate_dataset(x, y, 1), ValidationError);

  Eigen::MatrixXd nan = x;
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(validate_dataset(nan, y, 2), ValidationError);
}

TEST_CASE("dataset manifest loading") {
  testutil::TempDir dir;
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 1.5, -2.0, 0.25, 3.0, -1.0;

  SUBCASE("well-formed files load") {
    const auto manifest =
        testutil::write_dataset(dir.path(), "train", x, {0, 1, 0}, 2);
    const Dataset data = load_dataset(manifest);
    CHECK(data.num_samples() == 3);
    CHECK(data.dim() == 2);
    CHECK(data.num_classes == 2);
    CHECK(data.features(1, 0) == doctest::Approx(-2.0));
    CHECK(data.labels[1] == 1);
  }

  SUBCASE("label out of range is rejected") {
    const auto manifest =
        testutil::write_dataset(dir.path(), "bad", x, {0, 5, 0}, 2);
    CHECK_THROWS_WITH_AS(load_dataset(manifest),
                         doctest::Contains("LabelOutOfRange"), ValidationError);
  }

  SUBCASE("short feature file is rejected") {
    const auto manifest =
        testutil::write_dataset(dir.path(), "short", x, {0, 1, 0}, 2);
    testutil::write_f64le(dir.path() / "short_x.bin",
                          std::vector<double>(5, 0.0));  // n*d - 1 values
    CHECK_THROWS_WITH_AS(load_dataset(manifest),
                         doctest::Contains("SizeMismatch"), ValidationError);
  }

  SUBCASE("wrong dtype is rejected") {
    testutil::write_dataset(dir.path(), "dtype", x, {0, 1, 0}, 2);
    testutil::write_text(dir.path() / "dtype.json",
                         "{\"n\": 3, \"d\": 2, \"K\": 2, \"features\": "
                         "\"dtype_x.bin\", \"labels\": \"dtype_y.txt\", "
                         "\"dtype\": \"f32le\", \"layout\": \"row-major\"}");
    CHECK_THROWS_AS(load_dataset(dir.path() / "dtype.json"), ValidationError);
  }

  SUBCASE("label file with excess lines is rejected") {
    const auto manifest =
        testutil::write_dataset(dir.path(), "excess", x, {0, 1, 0}, 2);
    testutil::write_text(dir.path() / "excess_y.txt", "0\n1\n0\n1\n");
    CHECK_THROWS_AS(load_dataset(manifest), ValidationError);
  }
}

TEST_CASE("one-hot labels") {
  const auto labels = testutil::onehot({0, 1, 0}, 2);
  CHECK(labels.label(2) == 0);
  CHECK(labels.num_classes() == 2);

  Eigen::MatrixXd onehot(2, 3);
  onehot << 0, 1, 0, 1, 0, 0;
  const auto parsed = OneHotLabels::from_matrix(onehot);
  CHECK(parsed.label(0) == 1);
  CHECK(parsed.label(1) == 0);

  Eigen::MatrixXd two_hot(1, 3);
  two_hot << 1, 1, 0;
  CHECK_THROWS_AS(OneHotLabels::from_matrix(two_hot), ValidationError);
  Eigen::MatrixXd fractional(1, 3);
  fractional << 0.5, 0.5, 0;
  CHECK_THROWS_AS(OneHotLabels::from_matrix(fractional), ValidationError);
}

TEST_CASE("signed labels reject other values") {
  CHECK_NOTHROW(testutil::signs({1, -1, 1}));
  CHECK_THROWS_AS(SignedLabels(std::vector<int>{1, 0}), ValidationError);
}

TEST_CASE("class scores") {
  SUBCASE("direct summation") {
    const auto scores =
        class_scores(testutil::onehot({0, 1, 0}, 2), testutil::row({0.5, 0.4, 0.2}));
    CHECK(scores[0] == doctest::Approx(0.7));
    CHECK(scores[1] == doctest::Approx(0.4));
  }
  SUBCASE("zero kernel row gives zero scores") {
    const auto scores =
        class_scores(testutil::onehot({0, 1, 0}, 2), testutil::row({0, 0, 0}));
    CHECK(scores.isZero(0.0));
  }
  SUBCASE("one sample per class") {
    const auto scores = class_scores(testutil::onehot({0, 1, 2}, 3),
                                     testutil::row({0.5, 0.4, 0.2}));
    CHECK(scores[0] == 0.5);
    CHECK(scores[1] == 0.4);
    CHECK(scores[2] == 0.2);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(
        class_scores(testutil::onehot({0, 1}, 2), testutil::row({1.0})),
        ValidationError);
  }
}

TEST_CASE("predict breaks ties toward the smaller index") {
  Eigen::VectorXd p(3);
  p << 0.5, 0.5, 0.2;
  CHECK(predict(p) == 0);
  Eigen::VectorXd q(2);
  q << -1, 3;
  CHECK(predict(q) == 1);
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
  CHECK(predict(zeros) == 0);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict(bad), NumericError);
}

TEST_CASE("prediction is invariant under positive power-of-two scaling") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd scores(4);
    for (int i = 0; i < 4; ++i) scores[i] = dist(rng);
    for (double scale : {0.25, 2.0, 1024.0}) {
      const Eigen::VectorXd scaled = scale * scores;
      CHECK(predict(scaled) == predict(scores));
    }
  }
}

TEST_CASE("class_scores commutes with power-of-two scaling") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXi labels(6);
    Eigen::VectorXd q(6);
    for (int i = 0; i < 6; ++i) {
      labels[i] = static_cast<int>(rng() % 3);
      q[i] = dist(rng);
    }
    const OneHotLabels onehot(labels, 3);
    const auto base = class_scores(onehot, make_kernel_row(q));
    const auto scaled = class_scores(onehot, make_kernel_row(4.0 * q));
    CHECK((scaled - 4.0 * base).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("target_reached matches predict at zero tolerance") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    Eigen::VectorXd scores(k);
    for (int i = 0; i < k; ++i) scores[i] = dist(rng);
    if (trial % 3 == 0) scores[1] = scores[0];  // exercise exact ties
    const int winner = predict(scores);
    for (int c = 0; c < k; ++c)
      CHECK(target_reached(scores, c) == (c == winner));
  }
}

TEST_CASE("vote configuration") {
  const VoteConfig votes({0, 2, 0, 1}, 3);
  CHECK(votes.counts() == std::vector<int>{2, 1, 1});
  CHECK(votes.majority() == 0);
  CHECK(VoteConfig({1, 0}, 2).majority() == 0);  // tie to smaller index
  CHECK_THROWS_AS(VoteConfig({}, 2), ValidationError);
  CHECK_THROWS_AS(VoteConfig({3}, 2), ValidationError);
}

TEST_CASE("flip-cost matrix requires zeros at the current votes") {
  const VoteConfig votes({0, 1}, 2);
  FlipCostMatrix rho(2, 2, BoundKind::lower);
  rho.at(0, 1) = FlipCount(2);
  rho.at(1, 0) = FlipCount(3);
  CHECK_NOTHROW(rho.require_zero_at_votes(votes));
  rho.at(1, 1) = FlipCount(1);
  CHECK_THROWS_AS(rho.require_zero_at_votes(votes), ValidationError);
}

TEST_CASE("certification config validation") {
  CertConfig config;
  config.svm_c = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.svm_c = 0.5;
  config.lambda = -1.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config.lambda = 0.0;
  CHECK_NOTHROW(config.validate());
}
