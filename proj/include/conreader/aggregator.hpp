#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conreader/autograd.hpp"
#include "conreader/encoder.hpp"

namespace conreader {

struct LcrEntry {
  nn::Var vec;  // 1 x h segment representation
  int segment_index = 0;
};

struct TdrEntry {
  nn::Var vec;  // 1 x h definition representation
  std::string term;
};

// Per-contract stores of segment and definition representations.
struct RelationBuckets {
  std::vector<LcrEntry> lcr;
  std::vector<TdrEntry> tdr;
};

inline int count_occurrences(const std::string& haystack_lower, const std::string& needle_lower) {
  if (needle_lower.empty()) return 0;
  int n = 0;
  size_t pos = 0;
  while ((pos = haystack_lower.find(needle_lower, pos)) != std::string::npos) {
    ++n;
    pos += needle_lower.size();
  }
  return n;
}

// Keep every segment vector except segment m's own, and only definitions
// whose term occurs in the segment text (case-insensitive substring).
inline RelationBuckets filter_buckets(const RelationBuckets& buckets, int m,
                                      const std::string& segment_text) {
  RelationBuckets out;
  for (const auto& e : buckets.lcr)
    if (e.segment_index != m) out.lcr.push_back(e);
  const std::string lower = to_lower(segment_text);
  for (const auto& e : buckets.tdr)
    if (count_occurrences(lower, to_lower(e.term)) > 0) out.tdr.push_back(e);
  return out;
}

struct FilledInput {
  std::vector<nn::Var> rows;  // encoder prefix followed by filled slot vectors
  int prefix_len = 0;         // rows through the second [SEP]
  int filled = 0;
  int slot_count = 0;
  // fused row index -> source label ("lcr:<segment>", "tdr:<term>",
  // "scr:start", "scr:end")
  std::vector<std::pair<int, std::string>> slot_layout;
};

// Write relation vectors into the reserved slots. On overflow the budget goes
// to SCR first, then TDR ordered by term frequency in the segment, then LCR
// ordered by segment distance. Slots keep the sequence order: LCR block, SCR
// halves, TDR block. Unfilled slots are dropped from the fused input, which
// is equivalent to keeping them masked.
inline FilledInput fill_slots(nn::Tape& t, const SegmentEncoding& enc,
                              const RelationBuckets& filtered, int m,
                              const std::string& segment_text,
                              const std::optional<Eigen::RowVectorXd>& scr, int slot_count) {
  if (enc.sep2 < 0) throw ConfigError("fill_slots: encoding lacks separator markers");
  FilledInput out;
  out.slot_count = slot_count;
  out.prefix_len = enc.sep2 + 1;
  out.rows.push_back(t.slice_rows(enc.hidden, 0, out.prefix_len));

  int budget = slot_count;
  const int scr_slots = scr ? std::min(2, budget) : 0;
  budget -= scr_slots;

  std::vector<const TdrEntry*> tdr;
  for (const auto& e : filtered.tdr) tdr.push_back(&e);
  const std::string lower = to_lower(segment_text);
  std::stable_sort(tdr.begin(), tdr.end(), [&](const TdrEntry* a, const TdrEntry* b) {
    return count_occurrences(lower, to_lower(a->term)) >
           count_occurrences(lower, to_lower(b->term));
  });
  if (static_cast<int>(tdr.size()) > budget) tdr.resize(static_cast<size_t>(budget));
  budget -= static_cast<int>(tdr.size());

  std::vector<const LcrEntry*> lcr;
  for (const auto& e : filtered.lcr) lcr.push_back(&e);
  std::stable_sort(lcr.begin(), lcr.end(), [&](const LcrEntry* a, const LcrEntry* b) {
    const int da = std::abs(a->segment_index - m);
    const int db = std::abs(b->segment_index - m);
    if (da != db) return da < db;
    return a->segment_index < b->segment_index;
  });
  if (static_cast<int>(lcr.size()) > budget) lcr.resize(static_cast<size_t>(budget));

  // keep the original bucket order within the LCR block
  std::stable_sort(lcr.begin(), lcr.end(), [](const LcrEntry* a, const LcrEntry* b) {
    return a->segment_index < b->segment_index;
  });

  int row = out.prefix_len;
  for (const auto* e : lcr) {
    out.rows.push_back(e->vec);
    out.slot_layout.emplace_back(row++, "lcr:" + std::to_string(e->segment_index));
  }
  if (scr_slots == 2) {
    const int h = static_cast<int>(scr->size()) / 2;
    out.rows.push_back(t.constant(scr->head(h)));
    out.slot_layout.emplace_back(row++, "scr:start");
    out.rows.push_back(t.constant(scr->tail(h)));
    out.slot_layout.emplace_back(row++, "scr:end");
  }
  for (const auto* e : tdr) {
    out.rows.push_back(e->vec);
    out.slot_layout.emplace_back(row++, "tdr:" + e->term);
  }
  out.filled = row - out.prefix_len;
  return out;
}

struct FusedSegment {
  nn::Var output;  // (prefix_len + filled) x h
  int prefix_len = 0;
  int filled = 0;
  std::vector<std::pair<int, std::string>> slot_layout;
  std::vector<uint8_t> span_candidates;  // content rows plus row 0
  nn::Mat attention;                     // head-averaged fusion attention, for reports
  int query_len = 0;
  int content_len = 0;
  int content_begin() const { return 2 + query_len; }
};

// One randomly initialized transformer layer over content rows and filled
// slots.
inline FusedSegment fuse(nn::Tape& t, const TransformerLayer& fusion, const FilledInput& filled,
                         const SegmentEncoding& enc, bool train, Rng& rng,
                         bool keep_attention = false) {
  nn::Var x = filled.rows.size() == 1 ? filled.rows[0] : t.concat_rows(filled.rows);
  std::vector<uint8_t> key_allowed(static_cast<size_t>(x->val.rows()), 1);
  FusedSegment out;
  out.output = fusion.forward(t, x, key_allowed, train, rng, keep_attention ? &out.attention : nullptr);
  out.prefix_len = filled.prefix_len;
  out.filled = filled.filled;
  out.slot_layout = filled.slot_layout;
  out.query_len = enc.query_len;
  out.content_len = enc.content_len;
  out.span_candidates.assign(static_cast<size_t>(x->val.rows()), 0);
  out.span_candidates[0] = 1;  // null answer position
  for (int i = 0; i < enc.content_len; ++i)
    out.span_candidates[static_cast<size_t>(out.content_begin() + i)] = 1;
  return out;
}

struct SpanHeads {
  nn::Var w_start;  // h x 1
  nn::Var w_end;    // h x 1

  static SpanHeads create(ParamStore& params, int hidden, Rng& rng) {
    SpanHeads h;
    h.w_start = params.add("span.w_start", nn::make_param(hidden, 1, rng));
    h.w_end = params.add("span.w_end", nn::make_param(hidden, 1, rng));
    return h;
  }
};

struct SpanLogits {
  nn::Var start;  // n x 1
  nn::Var end;    // n x 1
};

inline SpanLogits span_logits(nn::Tape& t, const FusedSegment& fused, const SpanHeads& heads) {
  return {t.matmul(fused.output, heads.w_start), t.matmul(fused.output, heads.w_end)};
}

// Probabilities over span candidates; non-candidates get exactly 0.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> span_distributions(const SpanLogits& logits,
                                                                      const FusedSegment& fused) {
  return {nn::masked_softmax_col(logits.start->val.col(0), fused.span_candidates),
          nn::masked_softmax_col(logits.end->val.col(0), fused.span_candidates)};
}

struct SlotAttentionReport {
  std::map<std::string, double> start_weights;
  std::map<std::string, double> end_weights;
  double start_total = 0.0;
  double end_total = 0.0;
};

// Attention mass from the span's start/end rows onto each filled slot,
// labeled by slot source. Requires fuse(..., keep_attention=true).
inline SlotAttentionReport slot_attention_report(const FusedSegment& fused, int s, int e) {
  if (fused.attention.size() == 0)
    throw ConfigError("slot_attention_report: fusion attention was not retained");
  const int n = static_cast<int>(fused.attention.rows());
  if (s < 0 || e < 0 || s >= n || e >= n)
    throw ConfigError("slot_attention_report: position out of range");
  SlotAttentionReport rep;
  for (const auto& [idx, label] : fused.slot_layout) {
    rep.start_weights[label] = fused.attention(s, idx);
    rep.end_weights[label] = fused.attention(e, idx);
    rep.start_total += fused.attention(s, idx);
    rep.end_total += fused.attention(e, idx);
  }
  return rep;
}

}  // namespace conreader
