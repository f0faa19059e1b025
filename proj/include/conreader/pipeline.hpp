#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "conreader/data.hpp"
#include "conreader/definitions.hpp"
#include "conreader/model.hpp"

namespace conreader {

struct PreparedContract {
  TokenizedContract toks;
  std::vector<int> token_ids;
  std::vector<Definition> defs;
  std::vector<std::pair<std::string, std::vector<int>>> def_inputs;
};

inline PreparedContract prepare_contract(const Contract& contract, const Tokenizer& tok,
                                         const Vocab& vocab, int def_max_len,
                                         const DefinitionPatterns& patterns = {}) {
  PreparedContract pc;
  pc.toks.tokens = tok.tokenize(contract.text);
  pc.token_ids = vocab.ids_of(pc.toks.tokens);
  pc.defs = extract_definitions(contract, patterns);
  for (const auto& d : pc.defs)
    pc.def_inputs.emplace_back(d.term, build_definition_input(d, tok, vocab, def_max_len));
  return pc;
}

// Everything derived from one (query, contract) pair: capped query tokens,
// segmentation, per-segment inputs and gold spans.
struct PreparedExample {
  std::vector<int> query_ids;
  std::vector<Segment> segments;
  std::vector<std::vector<int>> segment_inputs;
  std::vector<std::string> segment_texts;
  std::vector<std::vector<ClauseSpan>> golds_by_segment;
  int l_q = -1;
};

inline PreparedExample prepare_example(const Contract& contract, const PreparedContract& pc,
                                       const Example& ex, const Tokenizer& tok,
                                       const Vocab& vocab, const ModelConfig& cfg) {
  PreparedExample pe;
  auto qtoks = tok.tokenize(ex.query.text);
  const int cap = query_token_cap(ex.query.task);
  if (static_cast<int>(qtoks.size()) > cap) qtoks.resize(static_cast<size_t>(cap));
  pe.query_ids = vocab.ids_of(qtoks);
  pe.l_q = ex.query.clause_type;
  pe.segments = segment_contract(contract, pc.toks, static_cast<int>(pe.query_ids.size()),
                                 cfg.max_len, cfg.slot_count, cfg.stride);
  pe.segment_inputs.resize(pe.segments.size());
  pe.segment_texts.resize(pe.segments.size());
  pe.golds_by_segment.resize(pe.segments.size());
  for (size_t i = 0; i < pe.segments.size(); ++i) {
    const Segment& s = pe.segments[i];
    pe.segment_inputs[i].assign(pc.token_ids.begin() + s.token_begin,
                                pc.token_ids.begin() + s.token_end);
    pe.segment_texts[i] = contract.text.substr(static_cast<size_t>(s.char_start),
                                               static_cast<size_t>(s.char_end - s.char_start));
  }
  for (const auto& ans : ex.gold) {
    auto cs = map_gold_span(contract, pc.toks, pe.segments, ans);
    if (cs) pe.golds_by_segment[static_cast<size_t>(cs->segment_index)].push_back(*cs);
  }
  return pe;
}

inline GroupInput build_group_input(const PreparedContract& pc, const PreparedExample& pe,
                                    std::vector<int> encode_set, std::vector<int> wanted) {
  GroupInput in;
  in.query_ids = pe.query_ids;
  in.segment_inputs = pe.segment_inputs;
  in.segment_texts = pe.segment_texts;
  in.definitions = pc.def_inputs;
  in.encode_set = std::move(encode_set);
  in.wanted = std::move(wanted);
  in.l_q = pe.l_q;
  return in;
}

// Cache of prepared contracts keyed by contract id.
class ContractCache {
 public:
  ContractCache(const Dataset& ds, const Tokenizer& tok, const Vocab& vocab, int def_max_len)
      : ds_(ds), tok_(tok), vocab_(vocab), def_max_len_(def_max_len) {}

  const PreparedContract& get(const std::string& contract_id) {
    auto it = cache_.find(contract_id);
    if (it == cache_.end()) {
      const Contract& c = ds_.contract_of(contract_id);
      it = cache_.emplace(contract_id, prepare_contract(c, tok_, vocab_, def_max_len_)).first;
    }
    return it->second;
  }

 private:
  const Dataset& ds_;
  const Tokenizer& tok_;
  const Vocab& vocab_;
  int def_max_len_;
  std::map<std::string, PreparedContract> cache_;
};

// Vocabulary over contract texts and query strings of a dataset.
inline Vocab build_vocab(const Dataset& ds, const Tokenizer& tok) {
  Vocab v;
  for (const auto& c : ds.contracts) v.absorb(tok, c.text);
  for (const auto& ex : ds.examples) v.absorb(tok, ex.query.text);
  return v;
}

}  // namespace conreader
