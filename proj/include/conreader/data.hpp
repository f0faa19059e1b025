#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conreader/common.hpp"
#include "conreader/tokenizer.hpp"

namespace conreader {

enum class Task { CA, CD };

inline std::string task_name(Task t) { return t == Task::CA ? "ca" : "cd"; }
inline Task task_from(const std::string& s) {
  if (s == "ca" || s == "CA") return Task::CA;
  if (s == "cd" || s == "CD") return Task::CD;
  throw ParseError("unknown task: " + s);
}

struct Article {
  std::string title;
  int start = 0;
  int end = 0;
};

struct Contract {
  std::string id;
  std::string text;
  std::vector<Article> articles;  // synthetic corpus only
};

struct CharSpan {
  int start = 0;
  int end = 0;  // [start, end)
  std::string text;
};

struct Query {
  Task task = Task::CA;
  std::string text;
  int clause_type = -1;  // in [0, L) when known
};

struct Example {
  std::string id;
  std::string contract_id;
  Query query;
  std::vector<CharSpan> gold;  // empty means "no clause"
};

// Token window into a tokenized contract. Content tokens are
// tokens[token_begin, token_end).
struct Segment {
  std::string contract_id;
  int index = 0;
  int token_begin = 0;
  int token_end = 0;
  int char_start = 0;
  int char_end = 0;
};

// Token-level gold span, relative to the content tokens of one segment.
struct ClauseSpan {
  int segment_index = 0;
  int start = 0;
  int end = 0;  // inclusive
  std::string text;
};

struct TokenizedContract {
  std::vector<RawToken> tokens;
};

constexpr int kSpecialPositions = 3;  // [CLS] + two [SEP]
constexpr int kMaxQueryTokensCA = 64;
constexpr int kMaxQueryTokensCD = 256;

inline int query_token_cap(Task t) {
  return t == Task::CA ? kMaxQueryTokensCA : kMaxQueryTokensCD;
}

inline int segment_capacity(int max_len, int query_len, int slot_count) {
  return max_len - query_len - slot_count - kSpecialPositions;
}

// Split a tokenized contract into fixed-capacity windows. char spans are
// widened so that consecutive segments tile the whole [0, |text|) range.
inline std::vector<Segment> segment_contract(const Contract& contract,
                                             const TokenizedContract& toks, int query_len,
                                             int max_len = 512, int slot_count = 30,
                                             int stride = 0) {
  const int capacity = segment_capacity(max_len, query_len, slot_count);
  if (capacity <= 0)
    throw ConfigError("segment: no room for content tokens (capacity " +
                      std::to_string(capacity) + ")");
  if (stride <= 0) stride = capacity;
  if (stride > capacity) stride = capacity;

  const int n = static_cast<int>(toks.tokens.size());
  std::vector<Segment> segs;
  int begin = 0;
  int index = 0;
  do {
    Segment s;
    s.contract_id = contract.id;
    s.index = index++;
    s.token_begin = begin;
    s.token_end = std::min(n, begin + capacity);
    if (s.token_end > s.token_begin) {
      s.char_start = toks.tokens[static_cast<size_t>(s.token_begin)].start;
      s.char_end = toks.tokens[static_cast<size_t>(s.token_end - 1)].end;
    } else {
      s.char_start = 0;
      s.char_end = static_cast<int>(contract.text.size());
    }
    segs.push_back(s);
    if (s.token_end >= n) break;
    begin += stride;
  } while (true);

  segs.front().char_start = 0;
  segs.back().char_end = static_cast<int>(contract.text.size());
  for (size_t i = 1; i < segs.size(); ++i)
    if (segs[i].char_start > segs[i - 1].char_end) segs[i].char_start = segs[i - 1].char_end;
  return segs;
}

// Convert a character-offset answer into a token span. A span is assigned to
// the segment containing its first token and clipped to that segment.
inline std::optional<ClauseSpan> map_gold_span(const Contract& contract,
                                               const TokenizedContract& toks,
                                               const std::vector<Segment>& segs,
                                               const CharSpan& ans) {
  if (ans.start < 0 || ans.end > static_cast<int>(contract.text.size()) || ans.start >= ans.end)
    throw ValidationError("answer offsets out of range in contract " + contract.id);
  const int n = static_cast<int>(toks.tokens.size());
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i) {
    const auto& t = toks.tokens[static_cast<size_t>(i)];
    if (t.end > ans.start && t.start < ans.end) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return std::nullopt;  // answer covers no token (whitespace-only)
  for (const auto& s : segs) {
    if (first >= s.token_begin && first < s.token_end) {
      ClauseSpan cs;
      cs.segment_index = s.index;
      cs.start = first - s.token_begin;
      cs.end = std::min(last, s.token_end - 1) - s.token_begin;
      const auto& t0 = toks.tokens[static_cast<size_t>(s.token_begin + cs.start)];
      const auto& t1 = toks.tokens[static_cast<size_t>(s.token_begin + cs.end)];
      cs.text = contract.text.substr(static_cast<size_t>(t0.start),
                                     static_cast<size_t>(t1.end - t0.start));
      return cs;
    }
  }
  return std::nullopt;
}

inline std::string detokenize(const Contract& contract, const TokenizedContract& toks,
                              const Segment& seg, int start, int end) {
  const auto& t0 = toks.tokens[static_cast<size_t>(seg.token_begin + start)];
  const auto& t1 = toks.tokens[static_cast<size_t>(seg.token_begin + end)];
  return contract.text.substr(static_cast<size_t>(t0.start),
                              static_cast<size_t>(t1.end - t0.start));
}

// ---- datasets ----

struct Dataset {
  std::vector<Contract> contracts;
  std::vector<Example> examples;
  std::vector<std::string> type_names;
  std::map<std::string, int> contract_index;

  const Contract& contract_of(const std::string& id) const {
    auto it = contract_index.find(id);
    if (it == contract_index.end()) throw ValidationError("unknown contract id: " + id);
    return contracts[static_cast<size_t>(it->second)];
  }
  void reindex() {
    contract_index.clear();
    for (size_t i = 0; i < contracts.size(); ++i) {
      if (contract_index.count(contracts[i].id))
        throw ValidationError("duplicate contract id: " + contracts[i].id);
      contract_index[contracts[i].id] = static_cast<int>(i);
    }
  }
};

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

inline void validate_answer(const std::string& where, const std::string& context,
                            const CharSpan& ans) {
  if (ans.start < 0 || ans.end > static_cast<int>(context.size()) || ans.start >= ans.end)
    throw ValidationError(where + ": answer offsets [" + std::to_string(ans.start) + ", " +
                          std::to_string(ans.end) + ") outside context of length " +
                          std::to_string(context.size()));
  if (!ans.text.empty() &&
      context.compare(static_cast<size_t>(ans.start),
                      static_cast<size_t>(ans.end - ans.start), ans.text) != 0)
    throw ValidationError(where + ": answer text does not match context at offset " +
                          std::to_string(ans.start));
}

// SQuAD-v2-style file: data -> paragraphs -> qas with is_impossible.
inline Dataset load_squad(const std::string& path) {
  const auto j = parse_json_file(path);
  if (!j.contains("data")) throw ParseError(path + ": missing top-level \"data\"");
  Dataset ds;
  std::map<std::string, int> type_of_query;
  int para_counter = 0;
  for (const auto& doc : j.at("data")) {
    const std::string title = doc.value("title", "");
    for (const auto& para : doc.at("paragraphs")) {
      Contract c;
      c.id = title.empty() ? ("doc-" + std::to_string(para_counter)) : title;
      if (doc.at("paragraphs").size() > 1) c.id += "#" + std::to_string(para_counter);
      ++para_counter;
      c.text = para.at("context").get<std::string>();
      for (const auto& qa : para.at("qas")) {
        Example ex;
        ex.id = qa.contains("id") ? qa.at("id").get<std::string>()
                                  : (c.id + ":" + std::to_string(ds.examples.size()));
        ex.contract_id = c.id;
        ex.query.task = Task::CA;
        ex.query.text = qa.at("question").get<std::string>();
        const bool impossible = qa.value("is_impossible", false);
        if (!impossible) {
          for (const auto& a : qa.at("answers")) {
            CharSpan span;
            span.text = a.at("text").get<std::string>();
            span.start = a.at("answer_start").get<int>();
            span.end = span.start + static_cast<int>(span.text.size());
            validate_answer(path + " qa " + ex.id, c.text, span);
            ex.gold.push_back(span);
          }
        }
        auto it = type_of_query.find(ex.query.text);
        if (it == type_of_query.end())
          it = type_of_query.emplace(ex.query.text, static_cast<int>(type_of_query.size())).first;
        ex.query.clause_type = it->second;
        ds.examples.push_back(std::move(ex));
      }
      ds.contracts.push_back(std::move(c));
    }
  }
  ds.type_names.resize(type_of_query.size());
  for (const auto& [q, t] : type_of_query) ds.type_names[static_cast<size_t>(t)] = q;
  ds.reindex();
  return ds;
}

inline std::vector<Contract> load_contracts_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Contract> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Contract c;
    c.id = j.at("id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    if (j.contains("articles"))
      for (const auto& a : j.at("articles"))
        c.articles.push_back({a.at("title").get<std::string>(), a.at("start").get<int>(),
                              a.at("end").get<int>()});
    out.push_back(std::move(c));
  }
  return out;
}

// Flat JSONL examples, one per line:
// {contract_id, task, query, clause_type, answers: [{start_char, end_char, text}]}
inline Dataset load_jsonl(const std::string& examples_path, const std::string& contracts_path) {
  Dataset ds;
  ds.contracts = load_contracts_jsonl(contracts_path);
  ds.reindex();
  std::ifstream in(examples_path);
  if (!in) throw ParseError("cannot open " + examples_path);
  std::string line;
  int lineno = 0;
  int max_type = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = examples_path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    Example ex;
    ex.contract_id = j.at("contract_id").get<std::string>();
    ex.id = j.contains("id") ? j.at("id").get<std::string>() : ("q-" + std::to_string(lineno));
    ex.query.task = task_from(j.value("task", "ca"));
    ex.query.text = j.at("query").get<std::string>();
    ex.query.clause_type = j.value("clause_type", -1);
    max_type = std::max(max_type, ex.query.clause_type);
    const Contract& c = ds.contract_of(ex.contract_id);
    if (j.contains("answers"))
      for (const auto& a : j.at("answers")) {
        CharSpan span;
        span.start = a.at("start_char").get<int>();
        span.end = a.at("end_char").get<int>();
        span.text = a.value("text", "");
        if (span.text.empty() && span.end <= static_cast<int>(c.text.size()) && span.start >= 0 &&
            span.start < span.end)
          span.text = c.text.substr(static_cast<size_t>(span.start),
                                    static_cast<size_t>(span.end - span.start));
        validate_answer(where, c.text, span);
        ex.gold.push_back(span);
      }
    ds.examples.push_back(std::move(ex));
  }
  // CA query strings double as type names when nothing better is known
  ds.type_names.assign(static_cast<size_t>(max_type + 1), "");
  for (const auto& ex : ds.examples)
    if (ex.query.task == Task::CA && ex.query.clause_type >= 0 &&
        ds.type_names[static_cast<size_t>(ex.query.clause_type)].empty())
      ds.type_names[static_cast<size_t>(ex.query.clause_type)] = ex.query.text;
  for (size_t i = 0; i < ds.type_names.size(); ++i)
    if (ds.type_names[i].empty()) ds.type_names[i] = "type-" + std::to_string(i);
  return ds;
}

// ---- training-pair expansion and balancing ----

struct TrainPair {
  int example_idx = -1;
  int segment_index = 0;
  std::optional<ClauseSpan> gold;  // first gold span inside this segment
  bool extractable() const { return gold.has_value(); }
};

// Downsample non-extractable pairs to roughly ratio * |extractable|.
// Extractable pairs are always kept; relative order is preserved.
inline std::vector<TrainPair> balance_pairs(const std::vector<TrainPair>& pairs, double ratio,
                                            Rng rng) {
  if (ratio <= 0.0) throw ConfigError("balance: ratio must be positive");
  size_t n_ext = 0;
  std::vector<int> neg_idx;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].extractable())
      ++n_ext;
    else
      neg_idx.push_back(static_cast<int>(i));
  }
  const size_t want =
      std::min(neg_idx.size(), static_cast<size_t>(std::llround(ratio * static_cast<double>(n_ext))));
  rng.shuffle(neg_idx);
  neg_idx.resize(want);
  std::set<int> keep_neg(neg_idx.begin(), neg_idx.end());
  std::vector<TrainPair> out;
  out.reserve(n_ext + want);
  for (size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].extractable() || keep_neg.count(static_cast<int>(i)))
      out.push_back(pairs[i]);
  return out;
}

// ---- clause-discovery example construction ----

struct TypedClause {
  std::string contract_id;
  int clause_type = -1;
  CharSpan span;
};

// Per type: sample k clauses, keep one as the target and pair each remaining
// clause (as the seed query) with the target's contract.
inline std::vector<Example> build_cd_examples(const std::vector<TypedClause>& clauses, int k,
                                              Rng rng, int rounds = 1,
                                              std::ostream* warnings = &std::cerr) {
  std::map<int, std::vector<const TypedClause*>> by_type;
  for (const auto& c : clauses) by_type[c.clause_type].push_back(&c);
  std::vector<Example> out;
  for (int round = 0; round < rounds; ++round) {
    for (const auto& [type, list] : by_type) {
      if (static_cast<int>(list.size()) < k) {
        if (round == 0 && warnings)
          (*warnings) << "cd: skipping type " << type << " (" << list.size() << " < k=" << k
                      << " clauses)\n";
        continue;
      }
      std::vector<int> idx(list.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
      rng.shuffle(idx);
      idx.resize(static_cast<size_t>(k));
      const TypedClause* target = list[static_cast<size_t>(idx.back())];
      for (int s = 0; s + 1 < k; ++s) {
        const TypedClause* seed = list[static_cast<size_t>(idx[static_cast<size_t>(s)])];
        Example ex;
        ex.id = "cd-" + std::to_string(out.size());
        ex.contract_id = target->contract_id;
        ex.query.task = Task::CD;
        ex.query.text = seed->span.text;
        ex.query.clause_type = type;
        ex.gold.push_back(target->span);
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

}  // namespace conreader
