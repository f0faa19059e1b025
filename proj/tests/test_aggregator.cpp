#include <catch2/catch_amalgamated.hpp>

#include "conreader/aggregator.hpp"
#include "test_helpers.hpp"

using namespace conreader;
using nn::Mat;
using nn::Tape;
using nn::Var;

namespace {

struct Fixture {
  ParamStore params;
  TransformerLayer fusion;
  SpanHeads heads;
  Tape t;
  int hidden = 16;

  Fixture() {
    Rng rng(3);
    fusion = TransformerLayer::create(params, "fusion", hidden, 4, 2, 0.1, rng);
    heads = SpanHeads::create(params, hidden, rng);
  }

  // a fake segment encoding: [CLS] q [SEP] c c c c [SEP] plus slots
  SegmentEncoding encoding(int content = 4, int slots = 6, Rng* rng = nullptr) {
    Rng local(11);
    Rng& r = rng ? *rng : local;
    SegmentEncoding enc;
    const int prefix = 3 + 1 + content;  // cls + 1 query token + sep + content + sep
    enc.hidden = nn::make_var(testutil::random_mat(prefix + slots, hidden, r));
    for (int i = prefix; i < prefix + slots; ++i) enc.hidden->val.row(i).setZero();
    enc.slot_mask.assign(static_cast<size_t>(prefix + slots), 0);
    for (int i = prefix; i < prefix + slots; ++i) enc.slot_mask[static_cast<size_t>(i)] = 1;
    enc.sep1 = 2;
    enc.sep2 = prefix - 1;
    enc.query_len = 1;
    enc.content_len = content;
    return enc;
  }

  LcrEntry lcr(int seg_index, Rng& rng) {
    return {nn::make_var(testutil::random_mat(1, hidden, rng), true), seg_index};
  }
  TdrEntry tdr(const std::string& term, Rng& rng) {
    return {nn::make_var(testutil::random_mat(1, hidden, rng), true), term};
  }
};

}  // namespace

TEST_CASE("bucket filtering removes self and scopes terms") {
  Fixture f;
  Rng rng(5);
  RelationBuckets buckets;
  for (int m = 0; m < 4; ++m) buckets.lcr.push_back(f.lcr(m, rng));
  buckets.tdr.push_back(f.tdr("Software", rng));
  buckets.tdr.push_back(f.tdr("Fees", rng));

  const auto filtered = filter_buckets(buckets, 2, "the SOFTWARE shall be delivered");
  REQUIRE(filtered.lcr.size() == 3);
  for (const auto& e : filtered.lcr) REQUIRE(e.segment_index != 2);
  REQUIRE(filtered.tdr.size() == 1);  // case-insensitive substring
  REQUIRE(filtered.tdr[0].term == "Software");

  // single segment: nothing else to relate to
  RelationBuckets lonely;
  lonely.lcr.push_back(f.lcr(0, rng));
  REQUIRE(filter_buckets(lonely, 0, "text").lcr.empty());
  REQUIRE(filter_buckets(buckets, 0, "no defined term present").tdr.empty());
}

TEST_CASE("slot filling counts and layout order") {
  Fixture f;
  Rng rng(7);
  const SegmentEncoding enc = f.encoding(4, 30);
  RelationBuckets buckets;
  for (int m = 0; m < 3; ++m) buckets.lcr.push_back(f.lcr(m + 1, rng));
  buckets.tdr.push_back(f.tdr("Alpha", rng));
  buckets.tdr.push_back(f.tdr("Beta", rng));
  Eigen::RowVectorXd scr = Eigen::RowVectorXd::Constant(2 * f.hidden, 0.5);

  const FilledInput filled =
      fill_slots(f.t, enc, buckets, 0, "alpha beta text", scr, 30);
  REQUIRE(filled.filled == 7);  // 3 lcr + 2 scr halves + 2 tdr
  REQUIRE(filled.slot_count - filled.filled == 23);
  REQUIRE(filled.slot_layout.size() == 7);
  // sequence order: lcr block, scr halves, tdr block
  REQUIRE(filled.slot_layout[0].second == "lcr:1");
  REQUIRE(filled.slot_layout[2].second == "lcr:3");
  REQUIRE(filled.slot_layout[3].second == "scr:start");
  REQUIRE(filled.slot_layout[4].second == "scr:end");
  REQUIRE(filled.slot_layout[5].second.rfind("tdr:", 0) == 0);
}

TEST_CASE("slot overflow keeps scr, then terms, then nearest segments") {
  Fixture f;
  Rng rng(9);
  const SegmentEncoding enc = f.encoding(4, 30);
  RelationBuckets buckets;
  for (int m = 0; m < 41; ++m)
    if (m != 20) buckets.lcr.push_back(f.lcr(m, rng));
  Eigen::RowVectorXd scr = Eigen::RowVectorXd::Constant(2 * f.hidden, 0.5);

  const FilledInput filled = fill_slots(f.t, enc, buckets, 20, "text", scr, 30);
  REQUIRE(filled.filled == 30);
  int n_lcr = 0;
  int max_dist = 0;
  for (const auto& [idx, label] : filled.slot_layout)
    if (label.rfind("lcr:", 0) == 0) {
      ++n_lcr;
      max_dist = std::max(max_dist, std::abs(std::stoi(label.substr(4)) - 20));
    }
  REQUIRE(n_lcr == 28);        // 28 free slots after the scr halves
  REQUIRE(max_dist <= 14);     // nearest-by-distance selection
}

TEST_CASE("no relations leaves all slots masked and reduces to plain fusion") {
  Fixture f;
  Rng rng(11);
  const SegmentEncoding enc = f.encoding();
  const FilledInput filled = fill_slots(f.t, enc, {}, 0, "text", std::nullopt, 30);
  REQUIRE(filled.filled == 0);
  Rng eval(0);
  const FusedSegment fused = fuse(f.t, f.fusion, filled, enc, false, eval);
  REQUIRE(fused.output->val.rows() == filled.prefix_len);
  REQUIRE(fused.output->val.cols() == f.hidden);
}

TEST_CASE("fusion output shape equals input shape and slots change content rows") {
  Fixture f;
  Rng rng(13);
  const SegmentEncoding enc = f.encoding();
  RelationBuckets buckets;
  buckets.lcr.push_back(f.lcr(1, rng));
  buckets.lcr.push_back(f.lcr(2, rng));

  const FilledInput filled = fill_slots(f.t, enc, buckets, 0, "text", std::nullopt, 6);
  Rng eval(0);
  const FusedSegment fused = fuse(f.t, f.fusion, filled, enc, false, eval);
  REQUIRE(fused.output->val.rows() == filled.prefix_len + 2);

  // perturbation of a filled vector must reach content rows through attention
  buckets.lcr[0].vec->val.array() += 0.7;
  const FilledInput filled2 = fill_slots(f.t, enc, buckets, 0, "text", std::nullopt, 6);
  Rng eval2(0);
  const FusedSegment fused2 = fuse(f.t, f.fusion, filled2, enc, false, eval2);
  const double content_delta =
      (fused2.output->val.topRows(filled.prefix_len) - fused.output->val.topRows(filled.prefix_len))
          .cwiseAbs()
          .maxCoeff();
  REQUIRE(content_delta > 0.0);
}

TEST_CASE("span candidates are content tokens plus position zero") {
  Fixture f;
  Rng rng(15);
  const SegmentEncoding enc = f.encoding(4, 6);
  const FilledInput filled = fill_slots(f.t, enc, {}, 0, "text", std::nullopt, 6);
  Rng eval(0);
  const FusedSegment fused = fuse(f.t, f.fusion, filled, enc, false, eval);
  REQUIRE(fused.span_candidates[0] == 1);
  REQUIRE(fused.span_candidates[1] == 0);  // query token
  REQUIRE(fused.span_candidates[2] == 0);  // sep
  for (int i = 0; i < 4; ++i) REQUIRE(fused.span_candidates[static_cast<size_t>(3 + i)] == 1);
  REQUIRE(fused.span_candidates[7] == 0);  // second sep
}

TEST_CASE("span distributions are proper over candidates") {
  Fixture f;
  Rng rng(17);
  const SegmentEncoding enc = f.encoding(5, 4);
  const FilledInput filled = fill_slots(f.t, enc, {}, 0, "text", std::nullopt, 4);
  Rng eval(0);
  const FusedSegment fused = fuse(f.t, f.fusion, filled, enc, false, eval);
  const SpanLogits logits = span_logits(f.t, fused, f.heads);
  const auto [ps, pe] = span_distributions(logits, fused);
  REQUIRE(ps.sum() == Catch::Approx(1.0).margin(1e-6));
  REQUIRE(pe.sum() == Catch::Approx(1.0).margin(1e-6));
  for (int i = 0; i < ps.size(); ++i)
    if (!fused.span_candidates[static_cast<size_t>(i)]) {
      REQUIRE(ps(i) == 0.0);
      REQUIRE(pe(i) == 0.0);
    }

  // uniform logits spread mass evenly; cross entropy is ln(n)
  Tape t2;
  Var flat = t2.constant(Mat::Zero(fused.output->val.rows(), 1));
  flat->requires_grad = false;
  const auto uniform = nn::masked_softmax_col(flat->val.col(0), fused.span_candidates);
  int n_cand = 0;
  for (auto c : fused.span_candidates) n_cand += c;
  for (int i = 0; i < uniform.size(); ++i)
    if (fused.span_candidates[static_cast<size_t>(i)])
      REQUIRE(uniform(i) == Catch::Approx(1.0 / n_cand));
  Var ce = t2.masked_ce(flat, fused.span_candidates, 0);
  REQUIRE(ce->val(0, 0) == Catch::Approx(std::log(static_cast<double>(n_cand))).margin(1e-12));
}

TEST_CASE("content rows ignore slots when nothing is filled") {
  Fixture f;
  Rng rng(19);
  const SegmentEncoding enc = f.encoding(3, 5);
  // two different fake slot contents in the (zeroed) encoder rows can't reach
  // the fused content rows because unfilled slots are dropped entirely
  const FilledInput filled = fill_slots(f.t, enc, {}, 0, "text", std::nullopt, 5);
  Rng eval(0);
  const Mat out1 = fuse(f.t, f.fusion, filled, enc, false, eval).output->val;

  SegmentEncoding enc2 = enc;
  enc2.hidden = nn::make_var(enc.hidden->val);
  const FilledInput filled2 = fill_slots(f.t, enc2, {}, 0, "text", std::nullopt, 5);
  Rng eval2(0);
  const Mat out2 = fuse(f.t, f.fusion, filled2, enc2, false, eval2).output->val;
  REQUIRE((out1 - out2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("slot attention report labels and sums") {
  Fixture f;
  Rng rng(21);
  const SegmentEncoding enc = f.encoding(4, 8);
  RelationBuckets buckets;
  buckets.lcr.push_back(f.lcr(1, rng));
  buckets.tdr.push_back(f.tdr("Alpha", rng));
  Eigen::RowVectorXd scr = Eigen::RowVectorXd::Constant(2 * f.hidden, 0.3);
  const FilledInput filled = fill_slots(f.t, enc, buckets, 0, "alpha words", scr, 8);
  Rng eval(0);
  const FusedSegment fused = fuse(f.t, f.fusion, filled, enc, false, eval, /*keep_attention=*/true);

  const int s = fused.content_begin();
  const auto rep = slot_attention_report(fused, s, s + 1);
  REQUIRE(rep.start_weights.size() == filled.slot_layout.size());
  REQUIRE(rep.start_weights.count("lcr:1") == 1);
  REQUIRE(rep.start_weights.count("scr:start") == 1);
  REQUIRE(rep.start_weights.count("scr:end") == 1);
  REQUIRE(rep.start_weights.count("tdr:Alpha") == 1);
  double sum = 0.0;
  for (const auto& [label, w] : rep.start_weights) {
    REQUIRE(w >= 0.0);
    sum += w;
  }
  REQUIRE(sum == Catch::Approx(rep.start_total).margin(1e-12));
  REQUIRE(rep.start_total <= 1.0 + 1e-9);

  // without retained attention the report must refuse
  Rng eval2(0);
  const FusedSegment plain = fuse(f.t, f.fusion, filled, enc, false, eval2, false);
  REQUIRE_THROWS_AS(slot_attention_report(plain, s, s), ConfigError);
}

TEST_CASE("fusion layer gradient check") {
  Fixture f;
  Rng rng(23);
  const SegmentEncoding enc = f.encoding(3, 4, &rng);
  RelationBuckets buckets;
  buckets.lcr.push_back(f.lcr(1, rng));
  buckets.tdr.push_back(f.tdr("Alpha", rng));

  auto build = [&](Tape& t) {
    const FilledInput filled = fill_slots(t, enc, buckets, 0, "alpha", std::nullopt, 4);
    Rng eval(0);
    const FusedSegment fused = fuse(t, f.fusion, filled, enc, false, eval);
    const SpanLogits logits = span_logits(t, fused, f.heads);
    return t.add(t.masked_ce(logits.start, fused.span_candidates, 4),
                 t.masked_ce(logits.end, fused.span_candidates, 5));
  };
  auto loss = [&] {
    Tape t;
    return build(t)->val(0, 0);
  };
  auto backward = [&] {
    Tape t;
    t.backward(build(t));
  };
  std::vector<Var> checked = {f.heads.w_start, f.heads.w_end, buckets.lcr[0].vec,
                              buckets.tdr[0].vec};
  for (const auto& [name, v] : f.params.items) checked.push_back(v);
  const auto res = testutil::grad_check(loss, backward, checked, rng, 4);
  REQUIRE(res.max_rel_err < 1e-4);
}
