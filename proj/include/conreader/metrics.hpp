#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "conreader/common.hpp"

namespace conreader::metrics {

inline double jaccard(std::string_view a, std::string_view b) {
  const auto wa = split_alnum_words(a);
  const auto wb = split_alnum_words(b);
  std::set<std::string> sa(wa.begin(), wa.end());
  std::set<std::string> sb(wb.begin(), wb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& w : sa) inter += sb.count(w);
  const size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Word-level bag-overlap F1 between one prediction and one gold text.
inline double soft_f1(std::string_view pred, std::string_view gold) {
  const auto wp = split_alnum_words(pred);
  const auto wg = split_alnum_words(gold);
  if (wp.empty() && wg.empty()) return 1.0;
  if (wp.empty() || wg.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& w : wg) counts[w]++;
  int overlap = 0;
  for (const auto& w : wp) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(wp.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(wg.size());
  return 2.0 * p * r / (p + r);
}

enum class MatchMode { conventional, zero_shot };

inline bool span_matches(std::string_view pred, std::string_view gold, MatchMode mode) {
  if (jaccard(pred, gold) >= 0.5) return true;
  if (mode == MatchMode::zero_shot) {
    const std::string lp = to_lower(pred);
    const std::string lg = to_lower(gold);
    if (!lp.empty() && lg.find(lp) != std::string::npos) return true;
  }
  return false;
}

// Injective TP assignment for one query: predictions must already be ordered
// highest-confidence first; each gold can absorb at most one prediction.
inline std::vector<uint8_t> assign_true_positives(const std::vector<std::string>& preds_by_conf,
                                                  const std::vector<std::string>& golds,
                                                  MatchMode mode) {
  std::vector<uint8_t> tp(preds_by_conf.size(), 0);
  std::vector<uint8_t> used(golds.size(), 0);
  for (size_t i = 0; i < preds_by_conf.size(); ++i) {
    int best = -1;
    double best_j = -1.0;
    for (size_t g = 0; g < golds.size(); ++g) {
      if (used[g]) continue;
      if (!span_matches(preds_by_conf[i], golds[g], mode)) continue;
      const double j = jaccard(preds_by_conf[i], golds[g]);
      if (j > best_j) {
        best_j = j;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      tp[i] = 1;
      used[static_cast<size_t>(best)] = 1;
    }
  }
  return tp;
}

inline bool is_true_positive(const std::string& pred, const std::vector<std::string>& golds,
                             MatchMode mode) {
  for (const auto& g : golds)
    if (span_matches(pred, g, mode)) return true;
  return false;
}

// Step-wise area under the precision-recall curve: at each rank where a TP
// occurs, add precision(rank) * (1/n_gold).
inline double aupr(const std::vector<uint8_t>& tp_by_rank, int n_gold) {
  if (n_gold <= 0) return tp_by_rank.empty() ? 1.0 : 0.0;
  double area = 0.0;
  int tp = 0;
  for (size_t i = 0; i < tp_by_rank.size(); ++i) {
    if (tp_by_rank[i]) {
      ++tp;
      area += (static_cast<double>(tp) / static_cast<double>(i + 1)) /
              static_cast<double>(n_gold);
    }
  }
  return area;
}

// Interpolated variant: precision at each recall step is the max precision at
// any deeper threshold.
inline double aupr_interpolated(const std::vector<uint8_t>& tp_by_rank, int n_gold) {
  if (n_gold <= 0) return tp_by_rank.empty() ? 1.0 : 0.0;
  const size_t n = tp_by_rank.size();
  std::vector<double> prec(n);
  int tp = 0;
  for (size_t i = 0; i < n; ++i) {
    if (tp_by_rank[i]) ++tp;
    prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = n; i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double area = 0.0;
  tp = 0;
  for (size_t i = 0; i < n; ++i)
    if (tp_by_rank[i]) {
      ++tp;
      area += prec[i] / static_cast<double>(n_gold);
    }
  return area;
}

// Best precision over thresholds whose recall reaches r; 0 when recall never
// gets there.
inline double precision_at_recall(const std::vector<uint8_t>& tp_by_rank, int n_gold,
                                  double r = 0.8) {
  if (r <= 0.0 || r > 1.0) throw ConfigError("precision_at_recall: r must be in (0, 1]");
  if (n_gold <= 0) return 0.0;
  double best = 0.0;
  int tp = 0;
  bool reached = false;
  for (size_t i = 0; i < tp_by_rank.size(); ++i) {
    if (tp_by_rank[i]) ++tp;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_gold);
    if (recall + 1e-12 >= r) {
      reached = true;
      best = std::max(best, static_cast<double>(tp) / static_cast<double>(i + 1));
    }
  }
  return reached ? best : 0.0;
}

struct PrPoint {
  double recall;
  double precision;
  double confidence;
};

inline std::vector<PrPoint> pr_curve(const std::vector<uint8_t>& tp_by_rank,
                                     const std::vector<double>& confidences, int n_gold) {
  std::vector<PrPoint> pts;
  int tp = 0;
  for (size_t i = 0; i < tp_by_rank.size(); ++i) {
    if (tp_by_rank[i]) ++tp;
    pts.push_back({n_gold > 0 ? static_cast<double>(tp) / n_gold : 0.0,
                   static_cast<double>(tp) / static_cast<double>(i + 1),
                   i < confidences.size() ? confidences[i] : 0.0});
  }
  return pts;
}

// ---- dataset-level report ----

struct ScoredSpan {
  std::string text;
  double confidence = 0.0;
  int rank = 0;  // original rank within its query, for tie ordering
};

struct QueryResult {
  std::string query_id;
  int clause_type = -1;
  std::vector<std::string> gold_texts;
  std::vector<ScoredSpan> spans;    // non-null predictions
  double null_confidence = 0.0;
};

struct PooledScores {
  double aupr = 0.0;
  double p_at_r = 0.0;
  int n_gold = 0;
  int n_pred = 0;
  std::vector<uint8_t> tp_flags;
  std::vector<double> confidences;
};

inline PooledScores pool_and_score(const std::vector<const QueryResult*>& queries,
                                   MatchMode mode, double recall_target = 0.8,
                                   bool interpolated = false) {
  struct Row {
    double conf;
    const std::string* qid;
    int rank;
    uint8_t tp;
  };
  std::vector<Row> rows;
  int n_gold = 0;
  for (const QueryResult* q : queries) {
    n_gold += static_cast<int>(q->gold_texts.size());
    std::vector<ScoredSpan> ordered = q->spans;
    std::sort(ordered.begin(), ordered.end(), [](const ScoredSpan& a, const ScoredSpan& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.rank < b.rank;
    });
    std::vector<std::string> texts;
    texts.reserve(ordered.size());
    for (const auto& s : ordered) texts.push_back(s.text);
    const auto tp = assign_true_positives(texts, q->gold_texts, mode);
    for (size_t i = 0; i < ordered.size(); ++i)
      rows.push_back({ordered[i].confidence, &q->query_id, ordered[i].rank, tp[i]});
  }
  // documented tie order: confidence desc, then query id, then per-query rank
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    if (*a.qid != *b.qid) return *a.qid < *b.qid;
    return a.rank < b.rank;
  });
  PooledScores out;
  out.n_gold = n_gold;
  out.n_pred = static_cast<int>(rows.size());
  out.tp_flags.reserve(rows.size());
  out.confidences.reserve(rows.size());
  for (const auto& r : rows) {
    out.tp_flags.push_back(r.tp);
    out.confidences.push_back(r.conf);
  }
  out.aupr = interpolated ? aupr_interpolated(out.tp_flags, n_gold) : aupr(out.tp_flags, n_gold);
  out.p_at_r = precision_at_recall(out.tp_flags, n_gold, recall_target);
  return out;
}

// Soft-F1 over a dataset: per query the answer is the top span, or the empty
// string when the null candidate outranks it; score is the best F1 against any
// gold, averaged over queries.
inline double dataset_soft_f1(const std::vector<const QueryResult*>& queries) {
  if (queries.empty()) return 0.0;
  double total = 0.0;
  for (const QueryResult* q : queries) {
    std::string answer;
    double best_conf = -1.0;
    for (const auto& s : q->spans)
      if (s.confidence > best_conf) {
        best_conf = s.confidence;
        answer = s.text;
      }
    if (q->null_confidence > best_conf) answer.clear();
    double best = 0.0;
    if (q->gold_texts.empty()) {
      best = answer.empty() ? 1.0 : soft_f1(answer, "");
    } else {
      for (const auto& g : q->gold_texts) best = std::max(best, soft_f1(answer, g));
    }
    total += best;
  }
  return total / static_cast<double>(queries.size());
}

struct ScoreRow {
  std::string scope;   // "micro", "macro" or "type:<name>"
  std::string metric;  // "aupr", "p_at_0.8r", "soft_f1", "n_gold", "n_pred"
  double value = 0.0;
};

enum class Grouping { micro, per_type };

inline std::vector<ScoreRow> report(const std::vector<QueryResult>& queries, MatchMode mode,
                                    Grouping grouping,
                                    const std::vector<std::string>& type_names = {},
                                    double recall_target = 0.8, bool interpolated = false) {
  std::vector<const QueryResult*> all;
  all.reserve(queries.size());
  for (const auto& q : queries) all.push_back(&q);

  std::vector<ScoreRow> rows;
  const auto micro = pool_and_score(all, mode, recall_target, interpolated);
  rows.push_back({"micro", "aupr", micro.aupr});
  rows.push_back({"micro", "p_at_0.8r", micro.p_at_r});
  rows.push_back({"micro", "soft_f1", dataset_soft_f1(all)});
  rows.push_back({"micro", "n_gold", static_cast<double>(micro.n_gold)});
  rows.push_back({"micro", "n_pred", static_cast<double>(micro.n_pred)});

  if (grouping == Grouping::per_type) {
    std::map<int, std::vector<const QueryResult*>> by_type;
    for (const auto& q : queries)
      if (!q.gold_texts.empty() || q.clause_type >= 0) by_type[q.clause_type].push_back(&q);
    double macro_sum = 0.0;
    int macro_n = 0;
    for (const auto& [type, qs] : by_type) {
      int golds = 0;
      for (const auto* q : qs) golds += static_cast<int>(q->gold_texts.size());
      if (golds == 0) continue;  // one row per type present in gold
      const auto s = pool_and_score(qs, mode, recall_target, interpolated);
      std::string name = (type >= 0 && type < static_cast<int>(type_names.size()))
                             ? type_names[static_cast<size_t>(type)]
                             : ("type-" + std::to_string(type));
      rows.push_back({"type:" + name, "aupr", s.aupr});
      macro_sum += s.aupr;
      ++macro_n;
    }
    rows.push_back({"macro", "aupr", macro_n > 0 ? macro_sum / macro_n : 0.0});
  }
  return rows;
}

}  // namespace conreader::metrics
