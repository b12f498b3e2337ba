#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "specgnn/metrics.hpp"

using namespace specgnn;
using Catch::Approx;

TEST_CASE("perfect predictions score 1.0 everywhere") {
  const std::vector<int> labels = {0, 1, 2, 1, 0};
  const MetricsReport r = compute_metrics(labels, labels, 3);
  CHECK(r.weighted_acc == Approx(1.0));
  CHECK(r.weighted_f1 == Approx(1.0));
  for (int c = 0; c < 3; ++c) {
    CHECK(r.per_class_acc[c] == Approx(1.0));
    CHECK(r.per_class_f1[c] == Approx(1.0));
  }
  CHECK(r.confusion.diagonal().sum() == 5);
}

TEST_CASE("two-class confusion hand computation") {
  // confusion [[1,1],[0,2]]
  const std::vector<int> labels = {0, 0, 1, 1};
  const std::vector<int> preds = {0, 1, 1, 1};
  const MetricsReport r = compute_metrics(labels, preds, 2);
  CHECK(r.confusion(0, 0) == 1);
  CHECK(r.confusion(0, 1) == 1);
  CHECK(r.confusion(1, 0) == 0);
  CHECK(r.confusion(1, 1) == 2);
  CHECK(r.per_class_f1[0] == Approx(2.0 / 3.0));
  CHECK(r.per_class_f1[1] == Approx(0.8));
  CHECK(r.weighted_f1 ==
        Approx((2.0 * (2.0 / 3.0) + 2.0 * 0.8) / 4.0).margin(1e-12));
  CHECK(r.weighted_f1 == Approx(0.7333).margin(1e-4));
  // weighted accuracy is overall accuracy
  CHECK(r.weighted_acc == Approx(0.75));
}

TEST_CASE("row sums of the confusion matrix equal class supports") {
  const std::vector<int> labels = {0, 2, 2, 1, 2, 0};
  const std::vector<int> preds = {1, 2, 0, 1, 2, 0};
  const MetricsReport r = compute_metrics(labels, preds, 3);
  CHECK(r.confusion.row(0).sum() == 2);
  CHECK(r.confusion.row(1).sum() == 1);
  CHECK(r.confusion.row(2).sum() == 3);
}

TEST_CASE("an empty class contributes zero weight") {
  // class 2 never appears in labels
  const std::vector<int> labels = {0, 0, 1, 1};
  const std::vector<int> preds = {0, 2, 1, 1};
  const MetricsReport r = compute_metrics(labels, preds, 3);
  CHECK(r.per_class_f1[2] == 0.0);
  CHECK(r.per_class_acc[2] == 0.0);
  // weighted metrics only average over supported classes
  const double f1_0 = r.per_class_f1[0];
  const double f1_1 = r.per_class_f1[1];
  CHECK(r.weighted_f1 == Approx((2 * f1_0 + 2 * f1_1) / 4.0).margin(1e-12));
}

TEST_CASE("metrics input validation") {
  CHECK_THROWS_AS(compute_metrics({0, 1}, {0}, 2), InvalidInput);
  CHECK_THROWS_AS(compute_metrics({0, 2}, {0, 0}, 2), InvalidInput);
  CHECK_THROWS_AS(compute_metrics({0, 0}, {0, -1}, 2), InvalidInput);
}
