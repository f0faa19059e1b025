#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "conreader/io.hpp"
#include "conreader/synthetic.hpp"
#include "conreader/training.hpp"

namespace conreader::cli {

namespace fs = std::filesystem;

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Relative checkpoint/cache paths honor CONREADER_CKPT_DIR / CONREADER_CACHE_DIR.
inline std::string resolve_dir(const std::string& path, const char* env_name) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const std::string base = env_or(env_name, "");
  if (base.empty()) return path;
  return (fs::path(base) / path).string();
}

inline std::vector<Example> read_examples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<Example> out;
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
    Example ex;
    ex.contract_id = j.at("contract_id").get<std::string>();
    ex.id = j.contains("id") ? j.at("id").get<std::string>() : ("q-" + std::to_string(lineno));
    ex.query.task = task_from(j.value("task", "ca"));
    ex.query.text = j.at("query").get<std::string>();
    ex.query.clause_type = j.value("clause_type", -1);
    if (j.contains("answers"))
      for (const auto& a : j.at("answers"))
        ex.gold.push_back({a.at("start_char").get<int>(), a.at("end_char").get<int>(),
                           a.value("text", "")});
    out.push_back(std::move(ex));
  }
  return out;
}

// ---- gen ----

struct GenArgs {
  std::string out_dir;
  int contracts = 40;
  int dev = 4;
  int test = 8;
  int types = 6;
  int defs = 6;
  uint64_t seed = 7;
  double def_noise = 0.0;
  double aliased = 0.45;
  double crossref = 0.6;
  double headings = 0.75;
  int cd_k = 5;
  int cd_rounds = 4;
};

inline void run_gen(const GenArgs& a, std::ostream& log) {
  SynthConfig cfg;
  cfg.n_contracts = a.contracts + a.dev + a.test;
  cfg.n_types = a.types;
  cfg.n_defs_per_contract = a.defs;
  cfg.seed = a.seed;
  cfg.def_noise = a.def_noise;
  cfg.aliased_fraction = a.aliased;
  cfg.crossref_fraction = a.crossref;
  cfg.heading_prob = a.headings;
  const SynthOutput all = generate_synthetic(cfg);

  fs::create_directories(a.out_dir);
  struct Split {
    std::string name;
    int begin, end;
  };
  const std::vector<Split> splits = {{"train", 0, a.contracts},
                                     {"dev", a.contracts, a.contracts + a.dev},
                                     {"test", a.contracts + a.dev, a.contracts + a.dev + a.test}};
  for (const auto& sp : splits) {
    if (sp.end <= sp.begin) continue;
    std::vector<Contract> contracts(all.contracts.begin() + sp.begin,
                                    all.contracts.begin() + sp.end);
    std::set<std::string> ids;
    for (const auto& c : contracts) ids.insert(c.id);
    std::vector<Example> ca;
    for (const auto& ex : all.ca_examples)
      if (ids.count(ex.contract_id)) ca.push_back(ex);
    std::vector<TypedClause> clauses;
    for (const auto& c : all.clauses)
      if (ids.count(c.contract_id)) clauses.push_back(c);
    std::vector<Example> cd = build_cd_examples(
        clauses, a.cd_k, Rng(a.seed).derive("cd-" + sp.name), a.cd_rounds, &std::cerr);
    for (size_t i = 0; i < cd.size(); ++i) cd[i].id = "cd-" + sp.name + "-" + std::to_string(i);

    const fs::path dir(a.out_dir);
    io::write_contracts_jsonl((dir / (sp.name + "_contracts.jsonl")).string(), contracts);
    io::write_examples_jsonl((dir / ("ca_" + sp.name + ".jsonl")).string(), ca);
    io::write_examples_jsonl((dir / ("cd_" + sp.name + ".jsonl")).string(), cd);
    io::write_squad_json((dir / ("squad_" + sp.name + ".json")).string(), contracts, ca);
    log << sp.name << ": " << contracts.size() << " contracts, " << ca.size()
        << " ca examples, " << cd.size() << " cd examples\n";
  }
  io::write_definitions_jsonl((fs::path(a.out_dir) / "definitions.jsonl").string(),
                              all.gold_definitions);
  nlohmann::json meta;
  meta["types"] = all.type_names;
  meta["seed"] = a.seed;
  meta["contracts"] = {{"train", a.contracts}, {"dev", a.dev}, {"test", a.test}};
  meta["def_noise"] = a.def_noise;
  std::ofstream m((fs::path(a.out_dir) / "gen_meta.json").string());
  m << meta.dump(1) << "\n";
  log << "definitions: " << all.gold_definitions.size() << "\n";
}

// ---- dataset loading shared by train/predict ----

struct DataArgs {
  std::string data_dir;  // gen layout
  std::string task = "ca";
  std::string split = "train";
  std::string contracts_path;  // explicit override
  std::string examples_path;
  std::string squad_path;
};

inline Dataset load_data(const DataArgs& d) {
  if (!d.squad_path.empty()) return load_squad(d.squad_path);
  std::string contracts = d.contracts_path;
  std::string examples = d.examples_path;
  if (!d.data_dir.empty()) {
    const fs::path dir(d.data_dir);
    if (contracts.empty()) contracts = (dir / (d.split + "_contracts.jsonl")).string();
    if (examples.empty()) examples = (dir / (d.task + "_" + d.split + ".jsonl")).string();
  }
  if (contracts.empty() || examples.empty())
    throw ConfigError("need --data DIR or both --contracts and --examples");
  return load_jsonl(examples, contracts);
}

// ---- train ----

struct TrainArgs {
  DataArgs data;
  std::string out = "model.ckpt";
  std::string loss_csv;
  std::string resume;
  bool cache_segments = false;
  TrainConfig train;
  int max_len = 512;
  int slots = 30;
  int stride = 0;
  int hidden = 64;
  int layers = 2;
  int heads = 4;
  int ffn_mult = 4;
  double dropout = 0.1;
  int max_segments = 128;
  int memory_capacity = 10;
  int def_max_len = 64;
  bool no_lcr = false;
  bool no_tdr = false;
  bool no_scr = false;
  std::string scr_access = "partition";
  std::string scr_update = "fifo";
  bool checkpoint_every_epoch = false;
};

inline void run_train(TrainArgs& a, std::ostream& log) {
  Dataset ds = load_data(a.data);
  WhitespacePunctTokenizer tok;
  Vocab vocab = build_vocab(ds, tok);

  int num_types = 0;
  for (const auto& ex : ds.examples) num_types = std::max(num_types, ex.query.clause_type + 1);
  if (num_types == 0)
    throw ValidationError("training data carries no clause types; every query needs one");

  ModelConfig mc;
  mc.encoder.layers = a.layers;
  mc.encoder.hidden = a.hidden;
  mc.encoder.heads = a.heads;
  mc.encoder.ffn_mult = a.ffn_mult;
  mc.encoder.dropout = a.dropout;
  mc.encoder.max_positions = a.max_len;
  mc.encoder.max_segments = a.max_segments;
  mc.max_len = a.max_len;
  mc.slot_count = a.slots;
  mc.stride = a.stride;
  mc.memory_capacity = a.memory_capacity;
  mc.num_types = num_types;
  mc.def_max_len = a.def_max_len;
  mc.use_lcr = !a.no_lcr;
  mc.use_tdr = !a.no_tdr;
  mc.use_scr = !a.no_scr;
  mc.scr_access = scr_access_from(a.scr_access);
  mc.scr_update = scr_update_from(a.scr_update);

  std::vector<std::string> type_names = ds.type_names;
  type_names.resize(static_cast<size_t>(num_types));
  ConReaderModel model = ConReaderModel::create(mc, std::move(vocab), std::move(type_names),
                                                a.train.seed);

  a.train.checkpoint_path = resolve_dir(a.out, "CONREADER_CKPT_DIR");
  a.train.checkpoint_every_epoch = a.checkpoint_every_epoch;
  if (!a.loss_csv.empty()) a.train.loss_csv = resolve_dir(a.loss_csv, "CONREADER_CKPT_DIR");

  Trainer trainer(model, ds, tok, a.train);
  if (!a.resume.empty()) {
    CheckpointExtra extra;
    ConReaderModel restored = load_checkpoint(a.resume, &extra);
    for (size_t i = 0; i < model.params.items.size(); ++i)
      model.params.items[i].second->val = restored.params.items[i].second->val;
    model.memory = restored.memory;
    trainer.restore_state(extra);
    log << "resumed from " << a.resume << "\n";
  }

  if (a.cache_segments) {
    const std::string cache_dir = env_or("CONREADER_CACHE_DIR", ".");
    fs::create_directories(cache_dir);
    const std::string path =
        (fs::path(cache_dir) / ("segments_" + a.data.task + "_" + a.data.split + ".jsonl"))
            .string();
    auto out = io::open_out(path);
    for (const auto& g : trainer.groups()) {
      const Example& ex = ds.examples[static_cast<size_t>(g.example_idx)];
      for (const auto& seg : g.prepared->segments) {
        nlohmann::json j;
        j["contract_id"] = seg.contract_id;
        j["query_id"] = ex.id;
        j["segment_index"] = seg.index;
        j["token_begin"] = seg.token_begin;
        j["token_end"] = seg.token_end;
        j["char_start"] = seg.char_start;
        j["char_end"] = seg.char_end;
        out << j.dump() << "\n";
      }
    }
    log << "segment cache written to " << path << "\n";
  }

  log << "training on " << trainer.groups().size() << " query groups (" << trainer.total_pairs()
      << " pairs) for " << a.train.epochs << " epochs\n";
  trainer.run(&log);
  log << "checkpoint written to " << a.train.checkpoint_path << "\n";
}

// ---- predict ----

struct PredictArgs {
  std::string ckpt;
  DataArgs data;
  std::string out = "predictions.jsonl";
  int top_t = 20;
  int max_span_len = 128;
  int workers = 1;
};

inline void run_predict(const PredictArgs& a, std::ostream& log) {
  ConReaderModel model = load_checkpoint(resolve_dir(a.ckpt, "CONREADER_CKPT_DIR"));
  Dataset ds = load_data(a.data);
  WhitespacePunctTokenizer tok;
  PredictOptions opt;
  opt.top_t = a.top_t;
  opt.max_span_len = a.max_span_len;

  std::vector<Prediction> preds;
  if (a.workers <= 1) {
    preds = predict_dataset(model, ds, tok, opt, &log);
  } else {
    // chunked over examples; outputs are reassembled in order
    std::vector<std::vector<Prediction>> per_example(ds.examples.size());
    std::vector<std::thread> threads;
    const int n_workers = std::min<int>(a.workers, static_cast<int>(ds.examples.size()));
    for (int w = 0; w < n_workers; ++w) {
      threads.emplace_back([&, w] {
        ContractCache cache(ds, tok, model.vocab, model.cfg.def_max_len);
        for (size_t i = static_cast<size_t>(w); i < ds.examples.size();
             i += static_cast<size_t>(n_workers)) {
          const Example& ex = ds.examples[i];
          auto run = predict_example(model, ds.contract_of(ex.contract_id),
                                     cache.get(ex.contract_id), ex, tok, opt);
          per_example[i] = std::move(run.predictions);
        }
      });
    }
    for (auto& t : threads) t.join();
    for (auto& v : per_example) preds.insert(preds.end(), v.begin(), v.end());
  }
  io::write_predictions_jsonl(a.out, preds);
  log << "wrote " << preds.size() << " prediction rows to " << a.out << "\n";
}

// ---- eval ----

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string out;
  std::string pr_curve;
  std::string mode = "conventional";
  bool micro_only = false;
  bool interpolated = false;
  double recall_target = 0.8;
};

inline std::vector<metrics::ScoreRow> run_eval(const EvalArgs& a, std::ostream& log) {
  const auto preds = io::read_predictions_jsonl(a.pred);
  Dataset gold;
  gold.examples = read_examples_jsonl(a.gold);
  int max_type = -1;
  for (const auto& ex : gold.examples) max_type = std::max(max_type, ex.query.clause_type);
  gold.type_names.assign(static_cast<size_t>(max_type + 1), "");
  for (const auto& ex : gold.examples)
    if (ex.query.task == Task::CA && ex.query.clause_type >= 0 &&
        gold.type_names[static_cast<size_t>(ex.query.clause_type)].empty())
      gold.type_names[static_cast<size_t>(ex.query.clause_type)] = ex.query.text;

  const auto queries = io::join_for_eval(preds, gold);
  const auto mode = a.mode == "zero_shot" ? metrics::MatchMode::zero_shot
                                          : metrics::MatchMode::conventional;
  const auto rows = metrics::report(queries, mode,
                                    a.micro_only ? metrics::Grouping::micro
                                                 : metrics::Grouping::per_type,
                                    gold.type_names, a.recall_target, a.interpolated);
  for (const auto& r : rows) log << r.scope << " " << r.metric << " = " << r.value << "\n";
  if (!a.out.empty()) io::write_scores_csv(a.out, rows);
  if (!a.pr_curve.empty()) {
    std::vector<const metrics::QueryResult*> qs;
    for (const auto& q : queries) qs.push_back(&q);
    const auto pooled = metrics::pool_and_score(qs, mode, a.recall_target, a.interpolated);
    io::write_pr_curve_csv(a.pr_curve,
                           metrics::pr_curve(pooled.tp_flags, pooled.confidences, pooled.n_gold));
  }
  return rows;
}

// ---- ablate ----

struct AblateArgs {
  DataArgs data;  // split is ignored; train/test used
  std::string out_dir = "ablation";
  int seeds = 3;
  uint64_t seed_base = 1;
  TrainArgs train_template;
};

inline void run_ablate(const AblateArgs& a, std::ostream& log) {
  fs::create_directories(a.out_dir);
  struct Config {
    std::string name;
    bool lcr, tdr, scr;
  };
  const std::vector<Config> configs = {{"full", true, true, true},
                                       {"no-lcr", false, true, true},
                                       {"no-tdr", true, false, true},
                                       {"no-scr", true, true, false}};
  std::map<std::string, std::vector<double>> auprs;
  auto csv = io::open_out((fs::path(a.out_dir) / "ablation.csv").string());
  csv << "config,seed,aupr,p_at_0.8r,soft_f1\n";
  for (const auto& cfg : configs) {
    for (int s = 0; s < a.seeds; ++s) {
      const uint64_t seed = a.seed_base + static_cast<uint64_t>(s);
      TrainArgs ta = a.train_template;
      ta.data = a.data;
      ta.data.split = "train";
      ta.no_lcr = !cfg.lcr;
      ta.no_tdr = !cfg.tdr;
      ta.no_scr = !cfg.scr;
      ta.train.seed = seed;
      const std::string tag = cfg.name + "-seed" + std::to_string(seed);
      ta.out = (fs::path(a.out_dir) / (tag + ".ckpt")).string();
      ta.loss_csv = (fs::path(a.out_dir) / (tag + "-loss.csv")).string();
      log << "[ablate] training " << tag << "\n";
      run_train(ta, log);

      PredictArgs pa;
      pa.ckpt = ta.out;
      pa.data = a.data;
      pa.data.split = "test";
      pa.out = (fs::path(a.out_dir) / (tag + "-preds.jsonl")).string();
      run_predict(pa, log);

      EvalArgs ea;
      ea.pred = pa.out;
      ea.gold = (fs::path(a.data.data_dir) / (a.data.task + "_test.jsonl")).string();
      ea.out = (fs::path(a.out_dir) / (tag + "-scores.csv")).string();
      const auto rows = run_eval(ea, log);
      double aupr = 0.0, p08 = 0.0, sf1 = 0.0;
      for (const auto& r : rows) {
        if (r.scope == "micro" && r.metric == "aupr") aupr = r.value;
        if (r.scope == "micro" && r.metric == "p_at_0.8r") p08 = r.value;
        if (r.scope == "micro" && r.metric == "soft_f1") sf1 = r.value;
      }
      auprs[cfg.name].push_back(aupr);
      csv << cfg.name << ',' << seed << ',' << fmt_double(aupr) << ',' << fmt_double(p08) << ','
          << fmt_double(sf1) << "\n";
    }
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const double full = mean(auprs["full"]);
  log << "\nconfig        mean AUPR   delta vs full\n";
  for (const auto& cfg : configs) {
    const double m = mean(auprs[cfg.name]);
    log << cfg.name << std::string(14 - cfg.name.size(), ' ') << m << "   " << (full - m) << "\n";
  }
}

// ---- explain ----

struct ExplainArgs {
  std::string ckpt;
  DataArgs data;
  std::string out = "slot_attention.jsonl";
  int limit = 0;  // 0 = all
};

inline void run_explain(const ExplainArgs& a, std::ostream& log) {
  ConReaderModel model = load_checkpoint(resolve_dir(a.ckpt, "CONREADER_CKPT_DIR"));
  Dataset ds = load_data(a.data);
  WhitespacePunctTokenizer tok;
  ContractCache cache(ds, tok, model.vocab, model.cfg.def_max_len);
  PredictOptions opt;
  opt.keep_attention = true;
  auto out = io::open_out(a.out);
  int done = 0;
  for (const auto& ex : ds.examples) {
    if (a.limit > 0 && done >= a.limit) break;
    const Contract& c = ds.contract_of(ex.contract_id);
    const PreparedContract& pc = cache.get(ex.contract_id);
    auto run = predict_example(model, c, pc, ex, tok, opt);
    // explain the first gold span when present, otherwise the top prediction
    int seg_idx = -1, s_tok = -1, e_tok = -1;
    std::string target_source;
    for (size_t s = 0; s < run.prepared->golds_by_segment.size() && seg_idx < 0; ++s)
      if (!run.prepared->golds_by_segment[s].empty()) {
        const ClauseSpan& g = run.prepared->golds_by_segment[s].front();
        seg_idx = static_cast<int>(s);
        s_tok = g.start;
        e_tok = g.end;
        target_source = "gold";
      }
    if (seg_idx < 0) {
      for (const auto& p : run.predictions)
        if (!p.is_null) {
          seg_idx = p.segment_index;
          s_tok = p.start_token;
          e_tok = p.end_token;
          target_source = "predicted";
          break;
        }
    }
    if (seg_idx < 0) continue;
    for (const auto& seg : run.group.outputs) {
      if (seg.segment_index != seg_idx) continue;
      const int begin = seg.fused.content_begin();
      const auto rep = slot_attention_report(seg.fused, begin + s_tok, begin + e_tok);
      nlohmann::json j;
      j["contract_id"] = ex.contract_id;
      j["query_id"] = ex.id;
      j["segment_index"] = seg_idx;
      j["span_source"] = target_source;
      nlohmann::json slots_start = nlohmann::json::object();
      for (const auto& [label, w] : rep.start_weights) slots_start[label] = w;
      nlohmann::json slots_end = nlohmann::json::object();
      for (const auto& [label, w] : rep.end_weights) slots_end[label] = w;
      j["start_attention"] = slots_start;
      j["end_attention"] = slots_end;
      j["start_total"] = rep.start_total;
      j["end_total"] = rep.end_total;
      out << j.dump() << "\n";
      ++done;
    }
  }
  log << "wrote " << done << " slot-attention reports to " << a.out << "\n";
}

// ---- defs ----

struct DefsExtractArgs {
  std::string contracts;
  std::string out = "definitions.jsonl";
  std::string keywords;  // comma-separated override
};

inline void run_defs_extract(const DefsExtractArgs& a, std::ostream& log) {
  const auto contracts = load_contracts_jsonl(a.contracts);
  DefinitionPatterns patterns;
  if (!a.keywords.empty()) {
    patterns.keywords.clear();
    std::stringstream ss(a.keywords);
    std::string k;
    while (std::getline(ss, k, ','))
      if (!k.empty()) patterns.keywords.push_back(k);
  }
  std::vector<Definition> all;
  for (const auto& c : contracts) {
    auto defs = extract_definitions(c, patterns);
    all.insert(all.end(), defs.begin(), defs.end());
  }
  io::write_definitions_jsonl(a.out, all);
  log << "extracted " << all.size() << " definitions from " << contracts.size()
      << " contracts into " << a.out << "\n";
}

struct DefsScoreArgs {
  std::string pred;
  std::string gold;
  std::string out;
};

inline DefinitionScore run_defs_score(const DefsScoreArgs& a, std::ostream& log) {
  const auto pred = io::read_definitions_jsonl(a.pred);
  const auto gold = io::read_definitions_jsonl(a.gold);
  const auto s = score_extraction(pred, gold);
  log << "F1@D = " << s.f1_definition << " (" << s.n_match << " matched, " << s.n_pred
      << " predicted, " << s.n_gold << " gold)\n";
  log << "Acc@C = " << s.acc_contract << "\n";
  if (!a.out.empty()) {
    auto out = io::open_out(a.out);
    out << "metric,value\n";
    out << "f1_definition," << fmt_double(s.f1_definition) << "\n";
    out << "acc_contract," << fmt_double(s.acc_contract) << "\n";
  }
  return s;
}

// ---- argument wiring ----

inline void add_data_options(CLI::App* cmd, DataArgs& d, bool with_split) {
  cmd->add_option("--data", d.data_dir, "dataset directory produced by gen");
  cmd->add_option("--task", d.task, "ca or cd")->check(CLI::IsMember({"ca", "cd"}));
  if (with_split)
    cmd->add_option("--split", d.split, "train, dev or test")
        ->check(CLI::IsMember({"train", "dev", "test"}));
  cmd->add_option("--contracts", d.contracts_path, "contracts JSONL (overrides --data)");
  cmd->add_option("--examples", d.examples_path, "examples JSONL (overrides --data)");
  cmd->add_option("--squad", d.squad_path, "SQuAD-style JSON file instead of JSONL");
}

inline void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--epochs", a.train.epochs);
  cmd->add_option("--lr", a.train.lr);
  cmd->add_option("--batch-size", a.train.batch_size);
  cmd->add_option("--seed", a.train.seed);
  cmd->add_option("--fraction", a.train.data_fraction,
                  "fraction of training examples to use (e.g. 0.1, 0.3, 0.5, 1.0)");
  cmd->add_option("--balance-ratio", a.train.balance_ratio);
  cmd->add_option("--weight-decay", a.train.weight_decay);
  cmd->add_option("--warmup-fraction", a.train.warmup_fraction);
  cmd->add_option("--max-len", a.max_len);
  cmd->add_option("--slots", a.slots);
  cmd->add_option("--stride", a.stride, "segment stride in tokens; 0 = no overlap");
  cmd->add_option("--hidden", a.hidden);
  cmd->add_option("--layers", a.layers);
  cmd->add_option("--heads", a.heads);
  cmd->add_option("--ffn-mult", a.ffn_mult);
  cmd->add_option("--dropout", a.dropout);
  cmd->add_option("--max-segments", a.max_segments);
  cmd->add_option("--memory-capacity", a.memory_capacity);
  cmd->add_option("--def-max-len", a.def_max_len);
  cmd->add_flag("--no-lcr", a.no_lcr, "drop long-range context vectors");
  cmd->add_flag("--no-tdr", a.no_tdr, "drop definition vectors");
  cmd->add_flag("--no-scr", a.no_scr, "drop clause retrieval and the retrieval loss");
  cmd->add_option("--scr-access", a.scr_access)
      ->check(CLI::IsMember({"partition", "random", "whole"}));
  cmd->add_option("--scr-update", a.scr_update)->check(CLI::IsMember({"fifo", "random", "none"}));
  cmd->add_flag("--checkpoint-every-epoch", a.checkpoint_every_epoch);
}

inline int run(std::vector<std::string> args, std::ostream& log = std::cout) {
  CLI::App app{"contract clause extraction over long-range, term-definition and "
               "similar-clause relations"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen", "generate a synthetic contract corpus");
  cgen->add_option("--out", gen.out_dir, "output directory")->required();
  cgen->add_option("--contracts", gen.contracts, "training contracts");
  cgen->add_option("--dev", gen.dev);
  cgen->add_option("--test", gen.test);
  cgen->add_option("--types", gen.types);
  cgen->add_option("--defs", gen.defs, "definitions per contract");
  cgen->add_option("--seed", gen.seed);
  cgen->add_option("--def-noise", gen.def_noise,
                   "fraction of definitions written outside the extraction patterns");
  cgen->add_option("--aliased", gen.aliased, "fraction of term-aliased clauses");
  cgen->add_option("--crossref", gen.crossref, "fraction of cross-reference lookalikes");
  cgen->add_option("--headings", gen.headings, "fraction of plain clauses led by a type heading");
  cgen->add_option("--cd-k", gen.cd_k);
  cgen->add_option("--cd-rounds", gen.cd_rounds);

  auto* cdefs = app.add_subcommand("defs", "definition extraction tooling");
  cdefs->require_subcommand(1);
  DefsExtractArgs dex;
  auto* cdex = cdefs->add_subcommand("extract", "extract definitions from contracts");
  cdex->add_option("--contracts", dex.contracts)->required();
  cdex->add_option("--out", dex.out);
  cdex->add_option("--keywords", dex.keywords, "comma-separated keyword overrides");
  DefsScoreArgs dsc;
  auto* cdsc = cdefs->add_subcommand("score", "score extracted definitions against gold");
  cdsc->add_option("--pred", dsc.pred)->required();
  cdsc->add_option("--gold", dsc.gold)->required();
  cdsc->add_option("--out", dsc.out, "optional score CSV");

  TrainArgs tr;
  auto* ctrain = app.add_subcommand("train", "train a model");
  add_data_options(ctrain, tr.data, true);
  add_train_options(ctrain, tr);
  ctrain->add_option("--out", tr.out, "checkpoint path");
  ctrain->add_option("--loss-csv", tr.loss_csv, "per-step loss log");
  ctrain->add_option("--resume", tr.resume, "checkpoint to resume from");
  ctrain->add_flag("--cache-segments", tr.cache_segments,
                   "write the segmented dataset to the cache directory");
  ctrain->set_config("--config");

  PredictArgs pr;
  auto* cpred = app.add_subcommand("predict", "run prediction with a checkpoint");
  cpred->add_option("--ckpt", pr.ckpt)->required();
  add_data_options(cpred, pr.data, true);
  cpred->add_option("--out", pr.out);
  cpred->add_option("--top-t", pr.top_t, "clauses returned per query");
  cpred->add_option("--max-span-len", pr.max_span_len);
  cpred->add_option("--workers", pr.workers, "parallel workers for prediction");

  EvalArgs ev;
  auto* ceval = app.add_subcommand("eval", "score predictions against gold");
  ceval->add_option("--pred", ev.pred)->required();
  ceval->add_option("--gold", ev.gold)->required();
  ceval->add_option("--out", ev.out, "score table CSV");
  ceval->add_option("--pr-curve", ev.pr_curve, "PR curve points CSV");
  ceval->add_option("--mode", ev.mode)->check(CLI::IsMember({"conventional", "zero_shot"}));
  ceval->add_flag("--micro-only", ev.micro_only);
  ceval->add_flag("--interpolated", ev.interpolated, "interpolated AUPR variant");
  ceval->add_option("--recall-target", ev.recall_target);

  AblateArgs ab;
  auto* cabl = app.add_subcommand("ablate", "train and score the four relation configurations");
  add_data_options(cabl, ab.data, false);
  cabl->add_option("--out", ab.out_dir);
  cabl->add_option("--seeds", ab.seeds);
  cabl->add_option("--seed-base", ab.seed_base);
  add_train_options(cabl, ab.train_template);

  ExplainArgs ex;
  auto* cexp = app.add_subcommand("explain", "dump fusion-layer slot attention");
  cexp->add_option("--ckpt", ex.ckpt)->required();
  add_data_options(cexp, ex.data, true);
  cexp->add_option("--out", ex.out);
  cexp->add_option("--limit", ex.limit, "max reports; 0 = all");

  std::vector<const char*> argv;
  argv.push_back("conreader");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cgen->parsed()) run_gen(gen, log);
    if (cdefs->parsed()) {
      if (cdex->parsed()) run_defs_extract(dex, log);
      if (cdsc->parsed()) run_defs_score(dsc, log);
    }
    if (ctrain->parsed()) run_train(tr, log);
    if (cpred->parsed()) run_predict(pr, log);
    if (ceval->parsed()) run_eval(ev, log);
    if (cabl->parsed()) run_ablate(ab, log);
    if (cexp->parsed()) run_explain(ex, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace conreader::cli
