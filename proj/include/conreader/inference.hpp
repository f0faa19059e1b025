#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "conreader/pipeline.hpp"

namespace conreader {

struct Prediction {
  std::string contract_id;
  std::string query_id;
  int rank = 0;  // 1-based for spans; 0 marks the null record
  int start_char = 0;
  int end_char = 0;
  std::string text;
  double confidence = 0.0;
  bool is_null = false;
  int segment_index = -1;
  int start_token = -1;  // content-relative
  int end_token = -1;
};

struct PredictOptions {
  int top_t = 20;
  int max_span_len = 128;
  bool keep_attention = false;
};

// Whole-memory retrieval for prediction and zero-shot queries; empty memory
// yields nothing and the SCR slots stay zero-filled.
inline std::optional<Retrieved> zero_shot_retrieve(const Eigen::RowVectorXd& cls,
                                                   const ClauseMemory& memory,
                                                   const Retriever& retriever) {
  return retrieve(cls, memory, retriever, MemoryScope::whole);
}

struct PredictRun {
  std::vector<Prediction> predictions;  // ranked spans followed by the null record
  GroupRun group;                       // kept for attention reports
  std::shared_ptr<PreparedExample> prepared;
};

struct SpanCandidate {
  double confidence = 0.0;
  int segment = 0;
  int start = 0;  // content-relative token indices
  int end = 0;
};

// All spans i <= j over content tokens with j - i < max_span_len, scored by
// P_start(i) * P_end(j). ps/pe index the fused rows (candidate 0 is the null).
inline void enumerate_spans(const Eigen::VectorXd& ps, const Eigen::VectorXd& pe,
                            int content_begin, int content_len, int max_span_len, int segment,
                            std::vector<SpanCandidate>& out) {
  for (int i = 0; i < content_len; ++i) {
    const double psi = ps(content_begin + i);
    if (psi <= 0.0) continue;
    const int jmax = std::min(content_len - 1, i + max_span_len - 1);
    for (int j = i; j <= jmax; ++j) {
      const double c = psi * pe(content_begin + j);
      if (c > 0.0) out.push_back({c, segment, i, j});
    }
  }
}

// Non-increasing confidence; ties break lexicographically by (segment, i, j).
inline void rank_spans(std::vector<SpanCandidate>& cands, int top_t) {
  std::sort(cands.begin(), cands.end(), [](const SpanCandidate& a, const SpanCandidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.segment != b.segment) return a.segment < b.segment;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
  if (top_t >= 0 && static_cast<int>(cands.size()) > top_t)
    cands.resize(static_cast<size_t>(top_t));
}

// Enumerate candidate spans per segment, rank globally by
// P_start(i) * P_end(j), and report the null candidate alongside.
inline PredictRun predict_example(const ConReaderModel& model, const Contract& contract,
                                  const PreparedContract& pc, const Example& ex,
                                  const Tokenizer& tok, const PredictOptions& opt) {
  PredictRun out;
  out.prepared = std::make_shared<PreparedExample>(
      prepare_example(contract, pc, ex, tok, model.vocab, model.cfg));
  const PreparedExample& pe = *out.prepared;

  std::vector<int> all(pe.segments.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  GroupInput in = build_group_input(pc, pe, all, all);

  nn::Tape tape;
  Rng rng(0);  // eval mode draws nothing
  out.group = model.run_group(tape, in, /*train=*/false, rng, MemoryScope::whole,
                              opt.keep_attention);

  std::vector<SpanCandidate> cands;
  double null_conf = 1.0;
  bool have_null = false;
  for (const SegmentOutput& seg : out.group.outputs) {
    const auto [ps, pe_dist] = span_distributions(seg.logits, seg.fused);
    const double seg_null = ps(0) * pe_dist(0);
    // the contract-level null confidence: even the least-null segment
    // reports no clause with at least this confidence
    if (!have_null || seg_null < null_conf) null_conf = seg_null;
    have_null = true;
    enumerate_spans(ps, pe_dist, seg.fused.content_begin(), seg.fused.content_len,
                    opt.max_span_len, seg.segment_index, cands);
  }
  rank_spans(cands, opt.top_t);

  int rank = 0;
  for (const auto& c : cands) {
    const Segment& seg = pe.segments[static_cast<size_t>(c.segment)];
    const RawToken& t0 = pc.toks.tokens[static_cast<size_t>(seg.token_begin + c.start)];
    const RawToken& t1 = pc.toks.tokens[static_cast<size_t>(seg.token_begin + c.end)];
    Prediction p;
    p.contract_id = contract.id;
    p.query_id = ex.id;
    p.rank = ++rank;
    p.start_char = t0.start;
    p.end_char = t1.end;
    p.text = contract.text.substr(static_cast<size_t>(t0.start),
                                  static_cast<size_t>(t1.end - t0.start));
    p.confidence = c.confidence;
    p.segment_index = c.segment;
    p.start_token = c.start;
    p.end_token = c.end;
    out.predictions.push_back(std::move(p));
  }
  Prediction null_p;
  null_p.contract_id = contract.id;
  null_p.query_id = ex.id;
  null_p.rank = 0;
  null_p.confidence = have_null ? null_conf : 1.0;
  null_p.is_null = true;
  out.predictions.push_back(std::move(null_p));
  return out;
}

inline std::vector<Prediction> predict_dataset(const ConReaderModel& model, const Dataset& ds,
                                               const Tokenizer& tok, const PredictOptions& opt,
                                               std::ostream* progress = nullptr) {
  ContractCache cache(ds, tok, model.vocab, model.cfg.def_max_len);
  std::vector<Prediction> out;
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    const Example& ex = ds.examples[i];
    const Contract& c = ds.contract_of(ex.contract_id);
    auto run = predict_example(model, c, cache.get(ex.contract_id), ex, tok, opt);
    out.insert(out.end(), run.predictions.begin(), run.predictions.end());
    if (progress && (i + 1) % 50 == 0)
      (*progress) << "predicted " << (i + 1) << "/" << ds.examples.size() << " queries\n";
  }
  return out;
}

}  // namespace conreader
