#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "conreader/data.hpp"
#include "conreader/io.hpp"
#include "conreader/synthetic.hpp"

using namespace conreader;

namespace {

Contract make_contract(int n_tokens) {
  Contract c;
  c.id = "c0";
  std::string text;
  for (int i = 0; i < n_tokens; ++i) {
    if (i) text += " ";
    text += "w" + std::to_string(i);
  }
  c.text = text;
  return c;
}

TokenizedContract tokenize_contract(const Contract& c) {
  WhitespacePunctTokenizer tok;
  return {tok.tokenize(c.text)};
}

}  // namespace

TEST_CASE("segment window arithmetic") {
  const Contract c = make_contract(900);
  const auto toks = tokenize_contract(c);
  REQUIRE(toks.tokens.size() == 900);
  // max_len 512, |q|=10, 30 slots, 3 specials -> capacity 469, two windows
  const auto segs = segment_contract(c, toks, 10, 512, 30, 0);
  REQUIRE(segment_capacity(512, 10, 30) == 469);
  REQUIRE(segs.size() == 2);
  REQUIRE(segs[0].token_end - segs[0].token_begin == 469);
  REQUIRE(segs[1].token_end == 900);

  // every contract token appears in at least one segment
  std::vector<int> covered(900, 0);
  for (const auto& s : segs)
    for (int t = s.token_begin; t < s.token_end; ++t) covered[static_cast<size_t>(t)] = 1;
  for (int t = 0; t < 900; ++t) REQUIRE(covered[static_cast<size_t>(t)] == 1);
}

TEST_CASE("segment degenerate cases") {
  Contract empty;
  empty.id = "e";
  empty.text = "";
  const auto segs = segment_contract(empty, {}, 4, 64, 8, 0);
  REQUIRE(segs.size() == 1);
  REQUIRE(segs[0].token_begin == segs[0].token_end);
  REQUIRE(segs[0].char_start == 0);
  REQUIRE(segs[0].char_end == 0);

  const Contract small = make_contract(10);
  const auto toks = tokenize_contract(small);
  REQUIRE(segment_contract(small, toks, 4, 64, 8, 0).size() == 1);

  REQUIRE_THROWS_AS(segment_contract(small, toks, 60, 64, 8, 0), ConfigError);
}

TEST_CASE("segment char spans tile the contract") {
  const SynthOutput synth = generate_synthetic({.n_contracts = 3, .seed = 11});
  WhitespacePunctTokenizer tok;
  for (const auto& c : synth.contracts) {
    TokenizedContract toks{tok.tokenize(c.text)};
    for (int stride : {0, 100}) {
      const auto segs = segment_contract(c, toks, 6, 256, 30, stride);
      REQUIRE(segs.front().char_start == 0);
      REQUIRE(segs.back().char_end == static_cast<int>(c.text.size()));
      for (size_t i = 1; i < segs.size(); ++i)
        REQUIRE(segs[i].char_start <= segs[i - 1].char_end);  // tiled union
    }
  }
}

TEST_CASE("gold span offset mapping against brute-force re-tokenization") {
  const Contract c = make_contract(40);
  const auto toks = tokenize_contract(c);
  const auto segs = segment_contract(c, toks, 2, 30, 8, 0);  // capacity 17
  REQUIRE(segs.size() > 1);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int a = rng.uniform_int(0, 39);
    const int b = std::min(39, a + rng.uniform_int(0, 5));
    const auto& t0 = toks.tokens[static_cast<size_t>(a)];
    const auto& t1 = toks.tokens[static_cast<size_t>(b)];
    CharSpan ans{t0.start, t1.end, c.text.substr(static_cast<size_t>(t0.start),
                                                 static_cast<size_t>(t1.end - t0.start))};
    const auto cs = map_gold_span(c, toks, segs, ans);
    REQUIRE(cs.has_value());
    // brute force: the first token whose span intersects, located by scan
    int expect_first = -1;
    for (int i = 0; i < 40; ++i)
      if (toks.tokens[static_cast<size_t>(i)].end > ans.start &&
          toks.tokens[static_cast<size_t>(i)].start < ans.end) {
        expect_first = i;
        break;
      }
    const Segment& seg = segs[static_cast<size_t>(cs->segment_index)];
    REQUIRE(seg.token_begin + cs->start == expect_first);
    REQUIRE(seg.token_begin <= expect_first);
    REQUIRE(expect_first < seg.token_end);
    // round trip: span text detokenizes to the answer substring (clipping aside)
    if (b < seg.token_end) REQUIRE(cs->text == ans.text);
  }
}

TEST_CASE("gold spans straddling a boundary are clipped into the starting segment") {
  const Contract c = make_contract(40);
  const auto toks = tokenize_contract(c);
  const auto segs = segment_contract(c, toks, 2, 30, 8, 0);
  const int boundary = segs[0].token_end;
  CharSpan ans{toks.tokens[static_cast<size_t>(boundary - 2)].start,
               toks.tokens[static_cast<size_t>(boundary + 2)].end, ""};
  const auto cs = map_gold_span(c, toks, segs, ans);
  REQUIRE(cs.has_value());
  REQUIRE(cs->segment_index == 0);
  REQUIRE(cs->end == segs[0].token_end - segs[0].token_begin - 1);  // clipped
}

TEST_CASE("balance keeps extractable pairs and downsamples the rest") {
  auto make_pairs = [](int ext, int nonext) {
    std::vector<TrainPair> pairs;
    for (int i = 0; i < ext; ++i) {
      TrainPair p;
      p.example_idx = i;
      p.gold = ClauseSpan{0, 0, 0, "x"};
      pairs.push_back(p);
    }
    for (int i = 0; i < nonext; ++i) {
      TrainPair p;
      p.example_idx = ext + i;
      pairs.push_back(p);
    }
    return pairs;
  };
  auto count = [](const std::vector<TrainPair>& pairs) {
    int ext = 0, nonext = 0;
    for (const auto& p : pairs) (p.extractable() ? ext : nonext)++;
    return std::pair<int, int>{ext, nonext};
  };

  const auto b1 = balance_pairs(make_pairs(100, 900), 1.0, Rng(1));
  REQUIRE(count(b1) == std::pair<int, int>{100, 100});

  const auto b2 = balance_pairs(make_pairs(50, 500), 2.0, Rng(1));
  REQUIRE(count(b2) == std::pair<int, int>{50, 100});

  const auto b3 = balance_pairs(make_pairs(10, 0), 1.0, Rng(1));
  REQUIRE(count(b3) == std::pair<int, int>{10, 0});

  // property: ratio 1 leaves at most one extra non-extractable
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int ext = rng.uniform_int(0, 30);
    const int nonext = rng.uniform_int(0, 60);
    const auto [e, n] = count(balance_pairs(make_pairs(ext, nonext), 1.0, Rng(trial)));
    REQUIRE(e == ext);
    REQUIRE(n <= ext + 1);
  }

  REQUIRE_THROWS_AS(balance_pairs({}, 0.0, Rng(1)), ConfigError);
}

TEST_CASE("cd example construction") {
  std::vector<TypedClause> clauses;
  for (int i = 0; i < 5; ++i)
    clauses.push_back({"c" + std::to_string(i), 0, {i * 10, i * 10 + 5, "clause " + std::to_string(i)}});
  for (int i = 0; i < 3; ++i)
    clauses.push_back({"d" + std::to_string(i), 1, {0, 5, "other " + std::to_string(i)}});

  std::ostringstream warn;
  const auto examples = build_cd_examples(clauses, 5, Rng(9), 1, &warn);
  REQUIRE(examples.size() == 4);  // type 0: 5 clauses -> 4 pairings; type 1 skipped
  REQUIRE(warn.str().find("skipping type 1") != std::string::npos);
  for (const auto& ex : examples) {
    REQUIRE(ex.query.task == Task::CD);
    REQUIRE(ex.query.clause_type == 0);
    REQUIRE(ex.gold.size() == 1);
    // seed clause and target share the clause type by construction
    bool seed_is_type0 = false;
    for (const auto& c : clauses)
      if (c.clause_type == 0 && c.span.text == ex.query.text) seed_is_type0 = true;
    REQUIRE(seed_is_type0);
  }

  // determinism: same seed, same pairings
  const auto again = build_cd_examples(clauses, 5, Rng(9), 1, nullptr);
  REQUIRE(again.size() == examples.size());
  for (size_t i = 0; i < again.size(); ++i) {
    REQUIRE(again[i].query.text == examples[i].query.text);
    REQUIRE(again[i].contract_id == examples[i].contract_id);
  }
}

TEST_CASE("squad loader") {
  const std::string path = "/tmp/conreader_test_squad.json";
  {
    nlohmann::json qa1 = {{"id", "q1"},
                          {"question", "Governing Law"},
                          {"is_impossible", false},
                          {"answers", {{{"text", "laws of Delaware"}, {"answer_start", 24}}}}};
    nlohmann::json qa2 = {{"id", "q2"},
                          {"question", "Insurance"},
                          {"is_impossible", true},
                          {"answers", nlohmann::json::array()}};
    nlohmann::json para = {
        {"context", "This Agreement is under laws of Delaware for everything."},
        {"qas", {qa1, qa2}}};
    nlohmann::json root = {
        {"data", {{{"title", "k1"}, {"paragraphs", {para}}}}}};
    std::ofstream out(path);
    out << root.dump();
  }
  const Dataset ds = load_squad(path);
  REQUIRE(ds.contracts.size() == 1);
  REQUIRE(ds.examples.size() == 2);
  REQUIRE(ds.examples[0].gold.size() == 1);
  REQUIRE(ds.examples[0].gold[0].text == "laws of Delaware");
  REQUIRE(ds.examples[1].gold.empty());  // is_impossible
  REQUIRE(ds.type_names.size() == 2);

  // answer token indices recovered by offset lookup
  WhitespacePunctTokenizer tok;
  TokenizedContract toks{tok.tokenize(ds.contracts[0].text)};
  const auto segs = segment_contract(ds.contracts[0], toks, 2, 64, 8, 0);
  const auto cs = map_gold_span(ds.contracts[0], toks, segs, ds.examples[0].gold[0]);
  REQUIRE(cs.has_value());
  REQUIRE(cs->segment_index == 0);
  REQUIRE(cs->text == "laws of Delaware");
}

TEST_CASE("loader errors name the offending record") {
  const std::string bad = "/tmp/conreader_bad.jsonl";
  {
    std::ofstream out(bad);
    out << "{\"id\": \"c1\", \"text\": \"hello world\"}\n";
    out << "not json at all\n";
  }
  REQUIRE_THROWS_AS(load_contracts_jsonl(bad), ParseError);
  try {
    load_contracts_jsonl(bad);
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find(":2") != std::string::npos);
  }

  const std::string contracts = "/tmp/conreader_c.jsonl";
  const std::string examples = "/tmp/conreader_e.jsonl";
  {
    std::ofstream out(contracts);
    out << "{\"id\": \"c1\", \"text\": \"short text\"}\n";
    std::ofstream out2(examples);
    out2 << "{\"contract_id\": \"c1\", \"task\": \"ca\", \"query\": \"Insurance\", "
            "\"clause_type\": 0, \"answers\": [{\"start_char\": 2, \"end_char\": 900}]}\n";
  }
  REQUIRE_THROWS_AS(load_jsonl(examples, contracts), ValidationError);
}

TEST_CASE("jsonl round trip through writers") {
  const SynthOutput synth = generate_synthetic({.n_contracts = 2, .seed = 3});
  io::write_contracts_jsonl("/tmp/conreader_rt_contracts.jsonl", synth.contracts);
  io::write_examples_jsonl("/tmp/conreader_rt_examples.jsonl", synth.ca_examples);
  const Dataset ds =
      load_jsonl("/tmp/conreader_rt_examples.jsonl", "/tmp/conreader_rt_contracts.jsonl");
  REQUIRE(ds.contracts.size() == 2);
  REQUIRE(ds.examples.size() == synth.ca_examples.size());
  // round trip: every gold answer text matches the context substring
  for (const auto& ex : ds.examples) {
    const Contract& c = ds.contract_of(ex.contract_id);
    for (const auto& g : ex.gold)
      REQUIRE(c.text.substr(static_cast<size_t>(g.start),
                            static_cast<size_t>(g.end - g.start)) == g.text);
  }
}

TEST_CASE("synthetic generator determinism and labels") {
  const SynthConfig cfg{.n_contracts = 3, .n_types = 3, .n_defs_per_contract = 4, .seed = 21};
  const SynthOutput a = generate_synthetic(cfg);
  const SynthOutput b = generate_synthetic(cfg);
  REQUIRE(a.contracts.size() == b.contracts.size());
  for (size_t i = 0; i < a.contracts.size(); ++i)
    REQUIRE(a.contracts[i].text == b.contracts[i].text);  // byte identical
  for (const auto& cl : a.clauses) {
    REQUIRE(cl.clause_type >= 0);
    REQUIRE(cl.clause_type < 3);
  }

  // no definitions article when n_defs is 0
  const SynthOutput nodefs = generate_synthetic({.n_contracts = 1, .n_defs_per_contract = 0,
                                                 .seed = 4});
  REQUIRE(nodefs.contracts[0].text.find("DEFINITIONS") == std::string::npos);
  REQUIRE(nodefs.gold_definitions.empty());

  // gold spans point at their text
  for (const auto& c : a.contracts)
    for (const auto& cl : a.clauses)
      if (cl.contract_id == c.id)
        REQUIRE(c.text.substr(static_cast<size_t>(cl.span.start),
                              static_cast<size_t>(cl.span.end - cl.span.start)) == cl.span.text);
}

TEST_CASE("synthetic distractors stay below the jaccard TP threshold") {
  const SynthOutput synth = generate_synthetic({.n_contracts = 6, .seed = 13});
  // within a contract, gold spans of different types never cross-match
  for (const auto& c : synth.contracts) {
    std::vector<const TypedClause*> mine;
    for (const auto& cl : synth.clauses)
      if (cl.contract_id == c.id) mine.push_back(&cl);
    for (const auto* x : mine)
      for (const auto* y : mine)
        if (x->clause_type != y->clause_type)
          REQUIRE(metrics::jaccard(x->span.text, y->span.text) < 0.5);
  }
}
