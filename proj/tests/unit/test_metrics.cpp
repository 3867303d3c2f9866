#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "cxrnet/report.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace cxrnet;
using testing::ScoredSet;

TEST_CASE("confusion matrix") {
  const std::vector<double> scores{1.0, 1.0, 0.0, 0.0, 0.0};
  const std::vector<int> labels{1, 1, 0, 0, 0};
  const ConfusionMatrix cm = confusion_at_threshold(scores, labels);
  CHECK(cm == ConfusionMatrix{3, 0, 0, 2});
  CHECK(cm.accuracy() == 1.0);

  // Ties at the threshold are predicted positive.
  const std::vector<double> tie{0.5, 0.5};
  const std::vector<int> tie_labels{0, 1};
  CHECK(confusion_at_threshold(tie, tie_labels) == ConfusionMatrix{0, 1, 0, 1});
  CHECK(confusion_at_threshold(tie, tie_labels, 0.6) == ConfusionMatrix{1, 0, 1, 0});

  // Input order does not matter.
  ScoredSet s = testing::benchmark_fixture(13, 39);
  const ConfusionMatrix before = confusion_at_threshold(s.scores, s.labels);
  std::reverse(s.scores.begin(), s.scores.end());
  std::reverse(s.labels.begin(), s.labels.end());
  CHECK(confusion_at_threshold(s.scores, s.labels) == before);

  const std::vector<double> none;
  const std::vector<int> no_labels;
  CHECK_THROWS_AS(confusion_at_threshold(none, no_labels), InputError);
  const std::vector<int> short_labels{1};
  CHECK_THROWS_AS(confusion_at_threshold(tie, short_labels), InputError);
  const std::vector<int> bad_labels{0, 2};
  CHECK_THROWS_AS(confusion_at_threshold(tie, bad_labels), InputError);
  CHECK_THROWS_AS(ConfusionMatrix{}.accuracy(), InputError);
}

TEST_CASE("benchmark accuracies") {
  struct Row {
    std::size_t fp, fn;
    const char* want;
  };
  for (const Row& row : {Row{31, 32, "89.90"}, Row{13, 39, "91.67"}, Row{15, 38, "91.51"}}) {
    const ScoredSet s = testing::benchmark_fixture(row.fp, row.fn);
    const ConfusionMatrix cm = confusion_at_threshold(s.scores, s.labels);
    CAPTURE(row.want);
    CHECK(cm.total() == 624);
    CHECK(cm.fp == row.fp);
    CHECK(cm.fn == row.fn);
    CHECK(testing::percent_2dp(cm.accuracy()) == row.want);
    CHECK(cm.accuracy() == static_cast<double>(624 - row.fp - row.fn) / 624.0);
  }
}

TEST_CASE("per-class precision, recall and F1") {
  const ConfusionMatrix cm{221, 13, 39, 351};
  const ClassMetrics pneu = precision_recall_f1(cm, Label::pneumonia);
  const ClassMetrics norm = precision_recall_f1(cm, Label::normal);

  const double p1 = 351.0 / (351.0 + 13.0), r1 = 351.0 / (351.0 + 39.0);
  const double p0 = 221.0 / (221.0 + 39.0), r0 = 221.0 / (221.0 + 13.0);
  CHECK(pneu.precision == doctest::Approx(p1).epsilon(1e-15));
  CHECK(pneu.recall == doctest::Approx(r1).epsilon(1e-15));
  CHECK(pneu.f1 == doctest::Approx(2 * p1 * r1 / (p1 + r1)).epsilon(1e-15));
  CHECK(norm.precision == doctest::Approx(p0).epsilon(1e-15));
  CHECK(norm.recall == doctest::Approx(r0).epsilon(1e-15));
  CHECK(norm.f1 == doctest::Approx(2 * p0 * r0 / (p0 + r0)).epsilon(1e-15));
  CHECK_FALSE(pneu.degenerate);
  CHECK_FALSE(norm.degenerate);

  const ClassMetrics perfect = precision_recall_f1({5, 0, 0, 7}, Label::pneumonia);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const ClassMetrics none = precision_recall_f1({5, 0, 3, 0}, Label::pneumonia);
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  CHECK(none.degenerate);
}

TEST_CASE("ROC curve") {
  SUBCASE("separated") {
    const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    CHECK(roc_curve_auc(s, y).auc == 1.0);
  }
  SUBCASE("all tied") {
    const std::vector<double> s(6, 0.4);
    const std::vector<int> y{1, 0, 1, 0, 0, 1};
    const Curve roc = roc_curve_auc(s, y);
    CHECK(roc.auc == 0.5);
    CHECK(roc.points.size() == 2);
  }
  SUBCASE("one discordant pair") {
    const std::vector<double> s{0.8, 0.4, 0.6, 0.2};
    const std::vector<int> y{1, 1, 0, 0};
    CHECK(roc_curve_auc(s, y).auc == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(testing::pairwise_concordance(s, y) == 0.75);
  }
  SUBCASE("errors") {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<int> y{1, 1};
    CHECK_THROWS_AS(roc_curve_auc(s, y), InputError);
    const std::vector<double> nan{0.1, std::numeric_limits<double>::quiet_NaN()};
    const std::vector<int> mixed{0, 1};
    CHECK_THROWS_AS(roc_curve_auc(nan, mixed), InputError);
  }
}

TEST_CASE("ROC AUC equals pairwise concordance") {
  Prng prng(21);
  for (int instance = 0; instance < 100; ++instance) {
    const auto n = static_cast<std::size_t>(2 + prng.below(199));
    const ScoredSet s = testing::random_scored_set(prng, n);
    if (std::count(s.labels.begin(), s.labels.end(), 1) == 0) continue;
    const Curve roc = roc_curve_auc(s.scores, s.labels);
    CAPTURE(instance);
    CHECK(std::abs(roc.auc - testing::pairwise_concordance(s.scores, s.labels)) <= 1e-12);

    // Endpoints and monotonicity.
    CHECK(roc.points.front().x == 0.0);
    CHECK(roc.points.front().y == 0.0);
    CHECK(roc.points.back().x == 1.0);
    CHECK(roc.points.back().y == 1.0);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      CHECK(roc.points[i].x >= roc.points[i - 1].x);
      CHECK(roc.points[i].y >= roc.points[i - 1].y);
      CHECK(roc.points[i].threshold < roc.points[i - 1].threshold);
    }

    // Strictly monotone transforms keep the AUC.
    std::vector<double> squashed;
    for (double v : s.scores) squashed.push_back(std::exp(3.0 * v) - 7.0);
    CHECK(std::abs(roc_curve_auc(squashed, s.labels).auc - roc.auc) <= 1e-12);
  }
}

TEST_CASE("PR curve") {
  SUBCASE("three points by hand") {
    const std::vector<double> s{0.9, 0.6, 0.3};
    const std::vector<int> y{1, 0, 1};
    const Curve pr = pr_curve_auc(s, y);
    CHECK(pr.auc == doctest::Approx(19.0 / 24.0).epsilon(1e-15));
    CHECK(average_precision(s, y) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    const testing::BrutePr brute = testing::brute_force_pr(s, y);
    CHECK(std::abs(pr.auc - brute.auc) <= 1e-9);
    REQUIRE(pr.points.size() == brute.points.size());
    for (std::size_t i = 0; i < pr.points.size(); ++i) {
      CHECK(pr.points[i].x == brute.points[i].first);
      CHECK(pr.points[i].y == brute.points[i].second);
    }
  }
  SUBCASE("separated") {
    const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> y{1, 1, 0, 0};
    CHECK(pr_curve_auc(s, y).auc == 1.0);
  }
  SUBCASE("duplicating a pair keeps the thresholds") {
    std::vector<double> s{0.9, 0.6, 0.3, 0.6};
    std::vector<int> y{1, 0, 1, 1};
    const Curve before = pr_curve_auc(s, y);
    s.push_back(0.6);
    y.push_back(0);
    const Curve after = pr_curve_auc(s, y);
    REQUIRE(before.points.size() == after.points.size());
    for (std::size_t i = 0; i < before.points.size(); ++i) {
      CHECK(before.points[i].threshold == after.points[i].threshold);
    }
  }
  SUBCASE("random instances against the brute-force sweep") {
    Prng prng(22);
    for (int instance = 0; instance < 100; ++instance) {
      const auto n = static_cast<std::size_t>(2 + prng.below(199));
      const ScoredSet s = testing::random_scored_set(prng, n);
      CAPTURE(instance);
      CHECK(std::abs(pr_curve_auc(s.scores, s.labels).auc -
                     testing::brute_force_pr(s.scores, s.labels).auc) <= 1e-9);
    }
  }
  SUBCASE("no positives") {
    const std::vector<double> s{0.1, 0.2};
    const std::vector<int> y{0, 0};
    CHECK_THROWS_AS(pr_curve_auc(s, y), InputError);
  }
}

TEST_CASE("report serialization") {
  const ScoredSet s = testing::benchmark_fixture(13, 39);
  const EvaluationReport r = make_report(s.scores, s.labels);
  CHECK(r.accuracy == static_cast<double>(r.confusion.tn + r.confusion.tp) /
                          static_cast<double>(r.confusion.total()));

  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["total"] == 624);
  CHECK(j["confusion"]["fp"] == 13);
  CHECK(j["confusion"]["fn"] == 39);
  CHECK(j["accuracy"].get<double>() == r.accuracy);
  CHECK(j["roc_auc"].get<double>() == r.roc.auc);
  CHECK(j["pr_auc"].get<double>() == r.pr.auc);
  CHECK(j["classes"]["PNEUMONIA"]["recall"].get<double>() == r.pneumonia.recall);

  const std::string roc = roc_csv(r.roc);
  CHECK(roc.rfind("threshold,fpr,tpr\ninf,0,0\n", 0) == 0);
  CHECK(std::count(roc.begin(), roc.end(), '\n') ==
        static_cast<std::ptrdiff_t>(r.roc.points.size() + 1));
  CHECK(pr_csv(r.pr).rfind("threshold,recall,precision\ninf,0,1\n", 0) == 0);
}

TEST_CASE("scores file") {
  Scores scores;
  scores.probabilities = {0.1, 0.123456789012345678, 0.99};
  scores.labels = {0, 1, 1};
  const std::string text = scores_csv(scores);
  const Scores back = parse_scores_csv(text);
  CHECK(back.probabilities == scores.probabilities);
  CHECK(back.labels == scores.labels);

  CHECK_THROWS_AS(parse_scores_csv(""), FormatError);
  CHECK_THROWS_AS(parse_scores_csv("a,b,c\n0,1,0.5\n"), FormatError);
  CHECK_THROWS_AS(parse_scores_csv("index,label,score\n"), FormatError);
  CHECK_THROWS_AS(parse_scores_csv("index,label,score\n0,1\n"), FormatError);
  CHECK_THROWS_AS(parse_scores_csv("index,label,score\n0,x,0.5\n"), FormatError);
  CHECK_THROWS_AS(parse_scores_csv("index,label,score\n0,1,0.5z\n"), FormatError);

  testing::TempDir dir("report");
  write_report_files(dir.path(), make_report(scores.probabilities, scores.labels));
  for (const char* name : {"report.json", "roc.csv", "pr.csv"}) {
    CHECK(std::filesystem::exists(dir.path() / name));
  }
  CHECK_THROWS_AS(read_text_file(dir.path() / "absent"), FormatError);
}
