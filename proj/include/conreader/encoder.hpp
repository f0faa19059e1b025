#pragma once

#include <string>
#include <vector>

#include "conreader/autograd.hpp"
#include "conreader/tokenizer.hpp"

namespace conreader {

struct EncoderConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int ffn_mult = 4;
  int vocab = 0;
  int max_positions = 512;
  int max_segments = 128;
  double dropout = 0.1;

  void validate() const {
    if (hidden % heads != 0) throw ConfigError("encoder: hidden must be divisible by heads");
    if (layers < 1 || hidden < 1 || heads < 1 || vocab < 1)
      throw ConfigError("encoder: sizes must be positive");
  }
};

// Ordered, named parameter registry. Registration order fixes both the
// optimizer iteration order and the checkpoint layout.
struct ParamStore {
  std::vector<std::pair<std::string, nn::Var>> items;

  nn::Var add(const std::string& name, nn::Var v) {
    v->requires_grad = true;
    items.emplace_back(name, v);
    return v;
  }
  void zero_grads() {
    for (auto& [_, v] : items) v->zero_grad();
  }
  nn::Var find(const std::string& name) const {
    for (const auto& [n, v] : items)
      if (n == name) return v;
    throw ConfigError("unknown parameter: " + name);
  }
  bool no_decay(const std::string& name) const {
    return name.find("bias") != std::string::npos || name.find("_ln_") != std::string::npos ||
           name.find(".ln") != std::string::npos;
  }
};

// [CLS]; query; [SEP]; content; [SEP]; slot placeholders
struct AssembledInput {
  std::vector<int> ids;
  std::vector<uint8_t> slot_mask;
  int sep1 = -1;
  int sep2 = -1;
  int query_len = 0;
  int content_len = 0;
  int content_begin() const { return 2 + query_len; }
  int length() const { return static_cast<int>(ids.size()); }
};

inline AssembledInput assemble_input(const std::vector<int>& query_ids,
                                     const std::vector<int>& content_ids, int slot_count,
                                     int placeholder_id = Vocab::kSlot) {
  AssembledInput a;
  a.query_len = static_cast<int>(query_ids.size());
  a.content_len = static_cast<int>(content_ids.size());
  a.ids.reserve(query_ids.size() + content_ids.size() + slot_count + 3);
  a.ids.push_back(Vocab::kCls);
  a.ids.insert(a.ids.end(), query_ids.begin(), query_ids.end());
  a.sep1 = static_cast<int>(a.ids.size());
  a.ids.push_back(Vocab::kSep);
  a.ids.insert(a.ids.end(), content_ids.begin(), content_ids.end());
  a.sep2 = static_cast<int>(a.ids.size());
  a.ids.push_back(Vocab::kSep);
  for (int i = 0; i < slot_count; ++i) a.ids.push_back(placeholder_id);
  a.slot_mask.assign(a.ids.size(), 0);
  for (size_t i = a.ids.size() - static_cast<size_t>(slot_count); i < a.ids.size(); ++i)
    a.slot_mask[i] = 1;
  return a;
}

struct SegmentEncoding {
  nn::Var hidden;  // (len x h); slot rows zeroed
  std::vector<uint8_t> slot_mask;
  int cls_index = 0;
  int sep1 = -1;
  int sep2 = -1;
  int query_len = 0;
  int content_len = 0;
};

// One post-LN transformer block, shared between the encoder stack and the
// fusion layer.
struct TransformerLayer {
  int hidden = 0;
  int heads = 0;
  double dropout = 0.0;
  nn::Var wq, bq, wk, bk, wv, bv, wo, bo;
  nn::Var ln1_g, ln1_b, ln2_g, ln2_b;
  nn::Var w1, b1, w2, b2;

  static TransformerLayer create(ParamStore& params, const std::string& prefix, int hidden,
                                 int heads, int ffn_mult, double dropout, Rng& rng) {
    TransformerLayer l;
    l.hidden = hidden;
    l.heads = heads;
    l.dropout = dropout;
    auto P = [&](const std::string& n, int r, int c) {
      return params.add(prefix + "." + n, nn::make_param(r, c, rng));
    };
    auto Z = [&](const std::string& n, int c) {
      return params.add(prefix + "." + n, nn::make_zeros(1, c, true));
    };
    auto O = [&](const std::string& n, int c) {
      return params.add(prefix + "." + n, nn::make_ones(1, c, true));
    };
    // near-identity query/key projections let same-token attention work from
    // the first step; heads diverge through the value/output paths
    l.wq = P("wq", hidden, hidden);
    l.wq->val += nn::Mat::Identity(hidden, hidden);
    l.bq = Z("wq_bias", hidden);
    l.wk = P("wk", hidden, hidden);
    l.wk->val += nn::Mat::Identity(hidden, hidden);
    l.bk = Z("wk_bias", hidden);
    l.wv = P("wv", hidden, hidden);
    l.bv = Z("wv_bias", hidden);
    l.wo = P("wo", hidden, hidden);
    l.bo = Z("wo_bias", hidden);
    l.ln1_g = O("ln1_gain", hidden);
    l.ln1_b = Z("ln1_bias", hidden);
    l.w1 = P("ffn_in", hidden, hidden * ffn_mult);
    l.b1 = Z("ffn_in_bias", hidden * ffn_mult);
    l.w2 = P("ffn_out", hidden * ffn_mult, hidden);
    l.b2 = Z("ffn_out_bias", hidden);
    l.ln2_g = O("ln2_gain", hidden);
    l.ln2_b = Z("ln2_bias", hidden);
    return l;
  }

  // key_allowed marks positions usable as attention keys; excluded positions
  // receive exactly zero attention everywhere, so their content cannot touch
  // other rows.
  nn::Var forward(nn::Tape& t, const nn::Var& x, const std::vector<uint8_t>& key_allowed,
                  bool train, Rng& rng, nn::Mat* save_attn = nullptr) const {
    const int dk = hidden / heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    nn::Var q = t.add_rowvec(t.matmul(x, wq), bq);
    nn::Var k = t.add_rowvec(t.matmul(x, wk), bk);
    nn::Var v = t.add_rowvec(t.matmul(x, wv), bv);
    std::vector<nn::Var> ctxs;
    ctxs.reserve(static_cast<size_t>(heads));
    if (save_attn) save_attn->setZero(x->val.rows(), x->val.rows());
    for (int h = 0; h < heads; ++h) {
      nn::Var qh = t.slice_cols(q, h * dk, dk);
      nn::Var kh = t.slice_cols(k, h * dk, dk);
      nn::Var vh = t.slice_cols(v, h * dk, dk);
      nn::Var scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt_dk);
      nn::Var attn = t.softmax_rows_masked(scores, key_allowed);
      if (save_attn) *save_attn += attn->val / static_cast<double>(heads);
      attn = t.dropout(attn, dropout, rng, train);
      ctxs.push_back(t.matmul(attn, vh));
    }
    nn::Var ctx = t.concat_cols(ctxs);
    nn::Var attn_out = t.dropout(t.add_rowvec(t.matmul(ctx, wo), bo), dropout, rng, train);
    nn::Var y = t.layer_norm(t.add(x, attn_out), ln1_g, ln1_b);
    nn::Var f = t.add_rowvec(t.matmul(t.gelu(t.add_rowvec(t.matmul(y, w1), b1)), w2), b2);
    f = t.dropout(f, dropout, rng, train);
    return t.layer_norm(t.add(y, f), ln2_g, ln2_b);
  }
};

class Encoder {
 public:
  EncoderConfig cfg;
  nn::Var tok_embed;   // vocab x h
  nn::Var pos_embed;   // max_positions x h
  nn::Var seg_pos;     // max_segments x h, zero-initialized
  nn::Var emb_ln_g, emb_ln_b;
  std::vector<TransformerLayer> layers;

  static Encoder create(ParamStore& params, const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    Encoder e;
    e.cfg = cfg;
    e.tok_embed = params.add("enc.tok_embed", nn::make_param(cfg.vocab, cfg.hidden, rng));
    e.pos_embed = params.add("enc.pos_embed", nn::make_param(cfg.max_positions, cfg.hidden, rng));
    e.seg_pos = params.add("enc.seg_pos", nn::make_zeros(cfg.max_segments, cfg.hidden, true));
    e.emb_ln_g = params.add("enc.emb_ln_gain", nn::make_ones(1, cfg.hidden, true));
    e.emb_ln_b = params.add("enc.emb_ln_bias", nn::make_zeros(1, cfg.hidden, true));
    for (int i = 0; i < cfg.layers; ++i)
      e.layers.push_back(TransformerLayer::create(params, "enc.layer" + std::to_string(i),
                                                  cfg.hidden, cfg.heads, cfg.ffn_mult,
                                                  cfg.dropout, rng));
    return e;
  }

  // Reserved slots are excluded as attention keys in every layer and their
  // output rows are zeroed, so non-slot rows neither read from them nor feed
  // gradient into them.
  SegmentEncoding encode(nn::Tape& t, const AssembledInput& input, bool train, Rng& rng) const {
    return encode_ids(t, input.ids, input.slot_mask, train, rng, input.sep1, input.sep2,
                      input.query_len, input.content_len);
  }

  SegmentEncoding encode_ids(nn::Tape& t, const std::vector<int>& ids,
                             const std::vector<uint8_t>& slot_mask, bool train, Rng& rng,
                             int sep1 = -1, int sep2 = -1, int query_len = 0,
                             int content_len = 0) const {
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw ConfigError("encode: empty input");
    if (n > cfg.max_positions)
      throw ConfigError("encode: input length " + std::to_string(n) + " exceeds max_positions " +
                        std::to_string(cfg.max_positions));
    if (static_cast<int>(slot_mask.size()) != n)
      throw ConfigError("encode: slot mask length mismatch");

    std::vector<int> positions(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) positions[static_cast<size_t>(i)] = i;
    nn::Var x = t.add(t.embed(tok_embed, ids), t.embed(pos_embed, positions));
    x = t.layer_norm(x, emb_ln_g, emb_ln_b);
    x = t.dropout(x, cfg.dropout, rng, train);

    std::vector<uint8_t> key_allowed(slot_mask.size());
    for (size_t i = 0; i < slot_mask.size(); ++i) key_allowed[i] = slot_mask[i] ? 0 : 1;
    for (const auto& layer : layers) x = layer.forward(t, x, key_allowed, train, rng);
    x = t.zero_rows(x, slot_mask);

    SegmentEncoding enc;
    enc.hidden = x;
    enc.slot_mask = slot_mask;
    enc.sep1 = sep1;
    enc.sep2 = sep2;
    enc.query_len = query_len;
    enc.content_len = content_len;
    return enc;
  }

  // [CLS] hidden plus the learned per-segment position embedding.
  nn::Var segment_representation(nn::Tape& t, const SegmentEncoding& enc, int m) const {
    if (m < 0 || m >= cfg.max_segments)
      throw ConfigError("segment_representation: segment index " + std::to_string(m) +
                        " outside position table of size " + std::to_string(cfg.max_segments));
    return t.add(t.row(enc.hidden, 0), t.slice_rows(seg_pos, m, 1));
  }

  // Shared-weight definition encoding: no slots, [CLS] row is the output.
  nn::Var encode_definition(nn::Tape& t, const std::vector<int>& ids, bool train,
                            Rng& rng) const {
    std::vector<uint8_t> no_slots(ids.size(), 0);
    SegmentEncoding enc = encode_ids(t, ids, no_slots, train, rng);
    return t.row(enc.hidden, 0);
  }
};

}  // namespace conreader
