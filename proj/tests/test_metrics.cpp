#include <catch2/catch_amalgamated.hpp>

#include "conreader/common.hpp"
#include "conreader/metrics.hpp"

using namespace conreader;
using namespace conreader::metrics;

namespace {

// independent step-wise oracle: build precision/recall arrays by prefix, then
// accumulate rectangle areas where recall moves
double aupr_bruteforce(const std::vector<uint8_t>& tp, int n_gold) {
  if (n_gold <= 0) return tp.empty() ? 1.0 : 0.0;
  double area = 0.0;
  double prev_recall = 0.0;
  int hits = 0;
  for (size_t k = 1; k <= tp.size(); ++k) {
    hits += tp[k - 1] ? 1 : 0;
    const double precision = static_cast<double>(hits) / static_cast<double>(k);
    const double recall = static_cast<double>(hits) / n_gold;
    if (recall > prev_recall) area += precision * (recall - prev_recall);
    prev_recall = recall;
  }
  return area;
}

}  // namespace

TEST_CASE("jaccard fixtures") {
  REQUIRE(jaccard("This Agreement", "This Agreement") == 1.0);
  REQUIRE(jaccard("a b c", "b c d") == Catch::Approx(0.5));
  REQUIRE(jaccard("alpha beta", "gamma delta") == 0.0);
  REQUIRE(jaccard("", "") == 1.0);
  REQUIRE(jaccard("A b C", "a B c") == 1.0);  // case-insensitive
}

TEST_CASE("soft f1 fixtures") {
  REQUIRE(soft_f1("same words here", "same words here") == 1.0);
  REQUIRE(soft_f1("a b", "b c") == Catch::Approx(0.5));
  REQUIRE(soft_f1("x y", "p q") == 0.0);
  REQUIRE(soft_f1("", "") == 1.0);
  REQUIRE(soft_f1("", "gold text") == 0.0);
  REQUIRE(soft_f1("pred text", "") == 0.0);
}

TEST_CASE("true positive rules") {
  REQUIRE(is_true_positive("the governing law of delaware", {"the governing law of delaware"},
                           MatchMode::conventional));
  // strict substring with low jaccard: only a TP in zero-shot mode
  const std::string gold =
      "Section 4.8 Choice of Law. This Agreement will be governed by and construed and enforced "
      "in accordance with the internal laws of the State of California, and each party submits "
      "to personal jurisdiction in Los Angeles for any action arising out of this Agreement";
  const std::string pred = "the State of California";
  REQUIRE(jaccard(pred, gold) < 0.5);
  REQUIRE(is_true_positive(pred, {gold}, MatchMode::zero_shot));
  REQUIRE_FALSE(is_true_positive(pred, {gold}, MatchMode::conventional));
}

TEST_CASE("injective matching consumes golds") {
  const std::vector<std::string> golds = {"alpha beta gamma", "alpha beta delta"};
  const std::vector<std::string> preds = {"alpha beta gamma", "alpha beta gamma",
                                          "alpha beta delta"};
  const auto tp = assign_true_positives(preds, golds, MatchMode::conventional);
  REQUIRE(tp == std::vector<uint8_t>{1, 1, 0});  // second pred eats the other gold
  int total = 0;
  for (auto f : tp) total += f;
  REQUIRE(total <= static_cast<int>(golds.size()));
}

TEST_CASE("aupr fixtures") {
  REQUIRE(aupr({1}, 1) == 1.0);
  REQUIRE(aupr({0, 1}, 1) == Catch::Approx(0.5));
  REQUIRE(aupr({1, 0, 1}, 2) == Catch::Approx(1.0 * 0.5 + (2.0 / 3.0) * 0.5));
  REQUIRE(aupr({1, 0, 1}, 2) == Catch::Approx(0.8333333333).margin(1e-9));
  REQUIRE(aupr({}, 0) == 1.0);
  REQUIRE(aupr({0, 0}, 0) == 0.0);
}

TEST_CASE("precision at recall fixtures") {
  REQUIRE(precision_at_recall({1, 1, 1}, 3, 0.8) == 1.0);
  REQUIRE(precision_at_recall({1, 0, 0}, 3, 0.8) == 0.0);  // recall never reaches 0.8
  REQUIRE(precision_at_recall({1, 1, 0, 1, 0}, 3, 0.8) == Catch::Approx(0.75));
  REQUIRE_THROWS_AS(precision_at_recall({1}, 1, 0.0), ConfigError);
}

TEST_CASE("aupr matches brute force on random ranked lists") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(0, 40);
    std::vector<uint8_t> tp(static_cast<size_t>(n));
    int hits = 0;
    for (auto& f : tp) {
      f = rng.bernoulli(0.4) ? 1 : 0;
      hits += f;
    }
    const int n_gold = hits + rng.uniform_int(0, 10);
    REQUIRE(aupr(tp, n_gold) == Catch::Approx(aupr_bruteforce(tp, n_gold)).margin(1e-9));
  }
}

TEST_CASE("aupr monotonicity properties") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(1, 20);
    std::vector<uint8_t> tp(static_cast<size_t>(n));
    int hits = 0;
    for (auto& f : tp) {
      f = rng.bernoulli(0.5) ? 1 : 0;
      hits += f;
    }
    const int n_gold = std::max(1, hits + rng.uniform_int(0, 4));
    const double base = aupr(tp, n_gold);
    REQUIRE(base >= 0.0);
    REQUIRE(base <= 1.0);
    auto with_fp = tp;
    with_fp.push_back(0);  // appending an FP below all ranked items
    REQUIRE(aupr(with_fp, n_gold) <= base + 1e-12);
    if (hits < n_gold) {
      std::vector<uint8_t> with_tp = {1};
      with_tp.insert(with_tp.end(), tp.begin(), tp.end());
      REQUIRE(aupr(with_tp, n_gold) >= base - 1e-12);
    }
  }
}

TEST_CASE("pooled scoring and documented tie order") {
  QueryResult q1;
  q1.query_id = "a";
  q1.clause_type = 0;
  q1.gold_texts = {"alpha beta gamma one", "delta epsilon two"};
  q1.spans = {{"alpha beta gamma one", 0.9, 1}, {"unrelated words here", 0.5, 2}};
  QueryResult q2;
  q2.query_id = "b";
  q2.clause_type = 1;
  q2.gold_texts = {"zeta eta theta three"};
  q2.spans = {{"zeta eta theta three", 0.7, 1}};

  std::vector<const QueryResult*> qs = {&q1, &q2};
  const auto pooled = pool_and_score(qs, MatchMode::conventional);
  REQUIRE(pooled.n_gold == 3);
  // ranked: 0.9 TP, 0.7 TP, 0.5 FP
  REQUIRE(pooled.tp_flags == std::vector<uint8_t>{1, 1, 0});
  REQUIRE(pooled.aupr == Catch::Approx(aupr({1, 1, 0}, 3)));

  // permuting equal-confidence predictions leaves the score unchanged
  QueryResult q3 = q1;
  q3.spans = {{"unrelated words here", 0.5, 2}, {"alpha beta gamma one", 0.9, 1}};
  std::vector<const QueryResult*> qs2 = {&q3, &q2};
  REQUIRE(pool_and_score(qs2, MatchMode::conventional).aupr ==
          Catch::Approx(pooled.aupr).margin(1e-9));
}

TEST_CASE("hand-built six prediction micro fixture") {
  // two queries, three golds; ranked pool: TP .9, FP .8, TP .7, FP .6, TP .5, FP .4
  QueryResult q1;
  q1.query_id = "m1";
  q1.gold_texts = {"gold one text alpha", "gold two text beta"};
  q1.spans = {{"gold one text alpha", 0.9, 1},
              {"spurious words nothing", 0.8, 2},
              {"gold two text beta", 0.5, 3}};
  QueryResult q2;
  q2.query_id = "m2";
  q2.gold_texts = {"gold three text gamma"};
  q2.spans = {{"gold three text gamma", 0.7, 1},
              {"also wrong stuff", 0.6, 2},
              {"more wrong stuff", 0.4, 3}};
  std::vector<const QueryResult*> qs = {&q1, &q2};
  const auto pooled = pool_and_score(qs, MatchMode::conventional);
  REQUIRE(pooled.tp_flags == std::vector<uint8_t>{1, 0, 1, 0, 1, 0});
  // hand computation: 1/1*1/3 + 2/3*1/3 + 3/5*1/3
  const double expected = (1.0 + 2.0 / 3.0 + 3.0 / 5.0) / 3.0;
  REQUIRE(pooled.aupr == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("report micro equals per type macro for a single type") {
  QueryResult q;
  q.query_id = "only";
  q.clause_type = 0;
  q.gold_texts = {"the single gold span"};
  q.spans = {{"the single gold span", 0.8, 1}};
  const auto rows = report({q}, MatchMode::conventional, Grouping::per_type, {"Governing Law"});
  double micro = -1.0, macro = -2.0;
  int type_rows = 0;
  for (const auto& r : rows) {
    if (r.scope == "micro" && r.metric == "aupr") micro = r.value;
    if (r.scope == "macro" && r.metric == "aupr") macro = r.value;
    if (r.scope.rfind("type:", 0) == 0) ++type_rows;
  }
  REQUIRE(micro == macro);
  REQUIRE(type_rows == 1);
}

TEST_CASE("dataset soft f1 uses null calibration") {
  QueryResult q;
  q.query_id = "n";
  q.gold_texts = {};
  q.spans = {{"some words", 0.1, 1}};
  q.null_confidence = 0.9;  // null wins -> empty answer -> perfect on empty gold
  REQUIRE(dataset_soft_f1({&q}) == 1.0);
  q.null_confidence = 0.01;
  REQUIRE(dataset_soft_f1({&q}) == 0.0);
}
