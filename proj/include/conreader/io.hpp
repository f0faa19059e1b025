#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "conreader/data.hpp"
#include "conreader/definitions.hpp"
#include "conreader/inference.hpp"
#include "conreader/metrics.hpp"

namespace conreader::io {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

inline void write_contracts_jsonl(const std::string& path, const std::vector<Contract>& contracts) {
  auto out = open_out(path);
  for (const auto& c : contracts) {
    nlohmann::json j;
    j["id"] = c.id;
    j["text"] = c.text;
    auto arts = nlohmann::json::array();
    for (const auto& a : c.articles)
      arts.push_back({{"title", a.title}, {"start", a.start}, {"end", a.end}});
    j["articles"] = arts;
    out << j.dump() << "\n";
  }
}

inline void write_examples_jsonl(const std::string& path, const std::vector<Example>& examples) {
  auto out = open_out(path);
  for (const auto& ex : examples) {
    nlohmann::json j;
    j["id"] = ex.id;
    j["contract_id"] = ex.contract_id;
    j["task"] = task_name(ex.query.task);
    j["query"] = ex.query.text;
    j["clause_type"] = ex.query.clause_type;
    auto answers = nlohmann::json::array();
    for (const auto& g : ex.gold)
      answers.push_back({{"start_char", g.start}, {"end_char", g.end}, {"text", g.text}});
    j["answers"] = answers;
    out << j.dump() << "\n";
  }
}

inline void write_definitions_jsonl(const std::string& path,
                                    const std::vector<Definition>& defs) {
  auto out = open_out(path);
  for (const auto& d : defs) {
    nlohmann::json j;
    j["contract_id"] = d.contract_id;
    j["term"] = d.term;
    j["definition"] = d.body;
    out << j.dump() << "\n";
  }
}

inline std::vector<Definition> read_definitions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Definition> out;
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
    Definition d;
    d.contract_id = j.at("contract_id").get<std::string>();
    d.term = j.at("term").get<std::string>();
    d.body = j.at("definition").get<std::string>();
    out.push_back(std::move(d));
  }
  return out;
}

inline void write_predictions_jsonl(const std::string& path,
                                    const std::vector<Prediction>& preds) {
  auto out = open_out(path);
  for (const auto& p : preds) {
    nlohmann::json j;
    j["contract_id"] = p.contract_id;
    j["query_id"] = p.query_id;
    j["rank"] = p.rank;
    j["start_char"] = p.start_char;
    j["end_char"] = p.end_char;
    j["text"] = p.text;
    j["confidence"] = p.confidence;
    j["is_null"] = p.is_null;
    out << j.dump() << "\n";
  }
}

inline std::vector<Prediction> read_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Prediction> out;
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
    Prediction p;
    p.contract_id = j.at("contract_id").get<std::string>();
    p.query_id = j.at("query_id").get<std::string>();
    p.rank = j.at("rank").get<int>();
    p.start_char = j.value("start_char", 0);
    p.end_char = j.value("end_char", 0);
    p.text = j.value("text", "");
    p.confidence = j.at("confidence").get<double>();
    p.is_null = j.value("is_null", false);
    out.push_back(std::move(p));
  }
  return out;
}

inline void write_squad_json(const std::string& path, const std::vector<Contract>& contracts,
                             const std::vector<Example>& examples) {
  std::map<std::string, std::vector<const Example*>> by_contract;
  for (const auto& ex : examples) by_contract[ex.contract_id].push_back(&ex);
  nlohmann::json root;
  root["version"] = "v2.0";
  auto data = nlohmann::json::array();
  for (const auto& c : contracts) {
    nlohmann::json para;
    para["context"] = c.text;
    auto qas = nlohmann::json::array();
    auto it = by_contract.find(c.id);
    if (it != by_contract.end())
      for (const auto* ex : it->second) {
        nlohmann::json qa;
        qa["id"] = ex->id;
        qa["question"] = ex->query.text;
        qa["is_impossible"] = ex->gold.empty();
        auto answers = nlohmann::json::array();
        for (const auto& g : ex->gold)
          answers.push_back({{"text", g.text}, {"answer_start", g.start}});
        qa["answers"] = answers;
        qas.push_back(qa);
      }
    para["qas"] = qas;
    nlohmann::json doc;
    doc["title"] = c.id;
    doc["paragraphs"] = nlohmann::json::array({para});
    data.push_back(doc);
  }
  root["data"] = data;
  auto out = open_out(path);
  out << root.dump(1) << "\n";
}

inline void write_scores_csv(const std::string& path,
                             const std::vector<metrics::ScoreRow>& rows) {
  auto out = open_out(path);
  out << "scope,metric,value\n";
  for (const auto& r : rows) out << r.scope << ',' << r.metric << ',' << fmt_double(r.value) << "\n";
}

inline void write_pr_curve_csv(const std::string& path,
                               const std::vector<metrics::PrPoint>& pts) {
  auto out = open_out(path);
  out << "recall,precision,confidence\n";
  for (const auto& p : pts)
    out << fmt_double(p.recall) << ',' << fmt_double(p.precision) << ','
        << fmt_double(p.confidence) << "\n";
}

// Join ranked predictions with gold examples for the scorers.
inline std::vector<metrics::QueryResult> join_for_eval(const std::vector<Prediction>& preds,
                                                       const Dataset& gold) {
  std::map<std::string, metrics::QueryResult> by_query;
  for (const auto& ex : gold.examples) {
    metrics::QueryResult q;
    q.query_id = ex.id;
    q.clause_type = ex.query.clause_type;
    for (const auto& g : ex.gold) q.gold_texts.push_back(g.text);
    by_query.emplace(ex.id, std::move(q));
  }
  for (const auto& p : preds) {
    auto it = by_query.find(p.query_id);
    if (it == by_query.end())
      throw ValidationError("prediction references unknown query id: " + p.query_id);
    if (p.is_null)
      it->second.null_confidence = p.confidence;
    else
      it->second.spans.push_back({p.text, p.confidence, p.rank});
  }
  std::vector<metrics::QueryResult> out;
  out.reserve(by_query.size());
  for (auto& [_, q] : by_query) out.push_back(std::move(q));
  return out;
}

}  // namespace conreader::io
