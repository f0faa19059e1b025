#pragma once

#include <map>
#include <regex>
#include <string>
#include <vector>

#include "conreader/data.hpp"
#include "conreader/metrics.hpp"
#include "conreader/tokenizer.hpp"

namespace conreader {

struct Definition {
  std::string term;
  std::string body;
  std::string contract_id;
  int char_start = 0;
  int char_end = 0;
};

struct DefinitionPatterns {
  // keyword family joining a term to its definition body
  std::vector<std::string> keywords = {"shall mean", "means", "shall have the meaning"};
  int max_term_chars = 80;
  int max_body_chars = 600;
};

namespace detail {
inline std::string keyword_alternation(const DefinitionPatterns& p) {
  std::string alt;
  for (const auto& k : p.keywords) {
    if (!alt.empty()) alt += "|";
    std::string escaped;
    for (char c : k) {
      if (c == ' ')
        escaped += "\\s+";
      else
        escaped += c;
    }
    alt += escaped;
  }
  return alt;
}

inline std::string strip_leading_article(const std::string& term) {
  for (const char* art : {"The ", "This ", "Each ", "Any ", "Such "}) {
    const size_t n = std::string(art).size();
    if (term.size() > n && term.compare(0, n, art) == 0) return term.substr(n);
  }
  return term;
}
}  // namespace detail

// Rule-based extraction of (term, definition) sentences. Quoted terms are
// preferred; a run of capitalized words directly before a keyword also
// qualifies. Duplicate terms keep the first occurrence.
inline std::vector<Definition> extract_definitions(const Contract& contract,
                                                   const DefinitionPatterns& patterns = {}) {
  const std::string alt = detail::keyword_alternation(patterns);
  const std::regex quoted("\"([^\"\\n]{1,80})\"\\s+(?:" + alt + ")\\s+([^.\\n]+)\\.");
  const std::regex unquoted(
      "([A-Z][A-Za-z'-]*(?:[ ][A-Z][A-Za-z'-]*){0,4})[ ](?:" + alt + ")\\s+([^.\\n]+)\\.");

  struct Hit {
    size_t pos;
    Definition def;
  };
  std::vector<Hit> hits;
  auto scan = [&](const std::regex& re, bool strip_article) {
    auto begin = std::sregex_iterator(contract.text.begin(), contract.text.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const std::smatch& m = *it;
      Definition d;
      d.term = m[1].str();
      if (strip_article) d.term = detail::strip_leading_article(d.term);
      d.body = m[2].str();
      if (d.term.empty() || d.body.empty()) continue;
      if (static_cast<int>(d.term.size()) > patterns.max_term_chars) continue;
      if (static_cast<int>(d.body.size()) > patterns.max_body_chars)
        d.body.resize(static_cast<size_t>(patterns.max_body_chars));
      d.contract_id = contract.id;
      d.char_start = static_cast<int>(m.position(1));
      d.char_end = static_cast<int>(m.position(0) + m.length(0));
      hits.push_back({static_cast<size_t>(m.position(0)), std::move(d)});
    }
  };
  scan(quoted, false);
  scan(unquoted, true);
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });

  std::vector<Definition> out;
  std::map<std::string, bool> seen;
  for (auto& h : hits) {
    const std::string key = to_lower(h.def.term);
    if (seen.count(key)) continue;
    seen[key] = true;
    out.push_back(std::move(h.def));
  }
  return out;
}

// [CLS]; term; [SEP]; body; [SEP] with the body truncated to fit max_len.
inline std::vector<int> build_definition_input(const Definition& d, const Tokenizer& tok,
                                               const Vocab& vocab, int max_len) {
  auto term_toks = tok.tokenize(d.term);
  auto body_toks = tok.tokenize(d.body);
  if (static_cast<int>(term_toks.size()) > max_len - kSpecialPositions)
    term_toks.resize(static_cast<size_t>(max_len - kSpecialPositions));
  const int body_budget = max_len - kSpecialPositions - static_cast<int>(term_toks.size());
  if (static_cast<int>(body_toks.size()) > body_budget)
    body_toks.resize(static_cast<size_t>(std::max(0, body_budget)));
  std::vector<int> ids;
  ids.reserve(term_toks.size() + body_toks.size() + 3);
  ids.push_back(Vocab::kCls);
  for (const auto& t : term_toks) ids.push_back(vocab.lookup(t.text));
  ids.push_back(Vocab::kSep);
  for (const auto& t : body_toks) ids.push_back(vocab.lookup(t.text));
  ids.push_back(Vocab::kSep);
  return ids;
}

struct DefinitionScore {
  double f1_definition = 0.0;  // definition-level F1 over all pairs
  double acc_contract = 0.0;   // fraction of contracts whose full set is recovered
  int n_gold = 0;
  int n_pred = 0;
  int n_match = 0;
};

// A predicted definition matches a gold one when terms agree exactly
// (case-insensitive) and bodies overlap with Jaccard >= 0.5. Matching is
// injective within each contract. Contract accuracy counts contracts with at
// least one gold definition whose predicted set equals the gold set.
inline DefinitionScore score_extraction(const std::vector<Definition>& predicted,
                                        const std::vector<Definition>& gold) {
  std::map<std::string, std::vector<const Definition*>> pred_by_c, gold_by_c;
  for (const auto& d : predicted) pred_by_c[d.contract_id].push_back(&d);
  for (const auto& d : gold) gold_by_c[d.contract_id].push_back(&d);

  DefinitionScore s;
  s.n_gold = static_cast<int>(gold.size());
  s.n_pred = static_cast<int>(predicted.size());
  int full_contracts = 0;
  for (const auto& [cid, golds] : gold_by_c) {
    const auto it = pred_by_c.find(cid);
    const std::vector<const Definition*> preds =
        it == pred_by_c.end() ? std::vector<const Definition*>{} : it->second;
    std::vector<uint8_t> used(golds.size(), 0);
    int matched = 0;
    for (const auto* p : preds) {
      for (size_t g = 0; g < golds.size(); ++g) {
        if (used[g]) continue;
        if (to_lower(p->term) != to_lower(golds[g]->term)) continue;
        if (metrics::jaccard(p->body, golds[g]->body) < 0.5) continue;
        used[g] = 1;
        ++matched;
        break;
      }
    }
    s.n_match += matched;
    if (matched == static_cast<int>(golds.size()) && matched == static_cast<int>(preds.size()))
      ++full_contracts;
  }
  const double p = s.n_pred > 0 ? static_cast<double>(s.n_match) / s.n_pred : 0.0;
  const double r = s.n_gold > 0 ? static_cast<double>(s.n_match) / s.n_gold : 0.0;
  s.f1_definition = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
  s.acc_contract =
      gold_by_c.empty() ? 0.0 : static_cast<double>(full_contracts) / gold_by_c.size();
  return s;
}

}  // namespace conreader
