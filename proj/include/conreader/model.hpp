#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conreader/aggregator.hpp"
#include "conreader/encoder.hpp"
#include "conreader/memory.hpp"

namespace conreader {

struct ModelConfig {
  EncoderConfig encoder;
  int max_len = 512;
  int slot_count = 30;
  int stride = 0;  // 0 = full capacity, no overlap
  int memory_capacity = 10;
  int num_types = 1;
  int def_max_len = 64;
  bool use_lcr = true;
  bool use_tdr = true;
  bool use_scr = true;
  ScrAccess scr_access = ScrAccess::retrieved_partition;
  ScrUpdate scr_update = ScrUpdate::fifo;
};

// Inputs for one (query, contract) forward pass, already tokenized.
struct GroupInput {
  std::vector<int> query_ids;
  std::vector<std::vector<int>> segment_inputs;  // content token ids per segment
  std::vector<std::string> segment_texts;        // raw text per segment, for TDR scoping
  std::vector<std::pair<std::string, std::vector<int>>> definitions;  // term, encoder input
  std::vector<int> encode_set;  // segment indices to run the encoder on
  std::vector<int> wanted;      // segments to aggregate and score (subset of encode_set)
  int l_q = -1;
};

struct SegmentOutput {
  int segment_index = 0;
  FusedSegment fused;
  SpanLogits logits;
  nn::Var cls;  // encoder [CLS] row, pre position offset
  std::optional<Retrieved> retrieved;
};

struct GroupRun {
  std::map<int, SegmentEncoding> encodings;
  RelationBuckets buckets;
  std::vector<SegmentOutput> outputs;
};

class ConReaderModel {
 public:
  ModelConfig cfg;
  ParamStore params;
  Encoder encoder;
  TransformerLayer fusion;
  Retriever retriever;
  SpanHeads heads;
  ClauseMemory memory;
  Vocab vocab;
  std::vector<std::string> type_names;

  static ConReaderModel create(const ModelConfig& cfg, Vocab vocab,
                               std::vector<std::string> type_names, uint64_t seed) {
    ConReaderModel m;
    m.cfg = cfg;
    m.cfg.encoder.vocab = vocab.size();
    m.vocab = std::move(vocab);
    m.type_names = std::move(type_names);
    Rng rng = Rng(seed).derive("init");
    m.encoder = Encoder::create(m.params, m.cfg.encoder, rng);
    m.fusion = TransformerLayer::create(m.params, "fusion", m.cfg.encoder.hidden,
                                        m.cfg.encoder.heads, m.cfg.encoder.ffn_mult,
                                        m.cfg.encoder.dropout, rng);
    m.retriever = Retriever::create(m.params, m.cfg.encoder.hidden, rng);
    m.heads = SpanHeads::create(m.params, m.cfg.encoder.hidden, rng);
    m.memory = ClauseMemory(std::max(1, cfg.num_types), cfg.memory_capacity,
                            2 * m.cfg.encoder.hidden);
    return m;
  }

  int hidden() const { return cfg.encoder.hidden; }

  // Encode, build relation buckets, retrieve, fill and fuse. scr_scope picks
  // partition-restricted retrieval (training) or whole-memory retrieval
  // (prediction and zero-shot queries).
  GroupRun run_group(nn::Tape& t, const GroupInput& in, bool train, Rng& rng,
                     MemoryScope scr_scope, bool keep_attention = false) const {
    GroupRun run;
    for (int m : in.encode_set) {
      const AssembledInput a = assemble_input(
          in.query_ids, in.segment_inputs[static_cast<size_t>(m)], cfg.slot_count);
      run.encodings.emplace(m, encoder.encode(t, a, train, rng));
    }
    if (cfg.use_lcr)
      for (auto& [m, enc] : run.encodings)
        run.buckets.lcr.push_back({encoder.segment_representation(t, enc, m), m});
    if (cfg.use_tdr)
      for (const auto& [term, ids] : in.definitions)
        run.buckets.tdr.push_back({encoder.encode_definition(t, ids, train, rng), term});

    for (int m : in.wanted) {
      const SegmentEncoding& enc = run.encodings.at(m);
      SegmentOutput seg;
      seg.segment_index = m;
      seg.cls = t.row(enc.hidden, 0);

      std::optional<Eigen::RowVectorXd> scr_vec;
      if (cfg.use_scr) {
        std::optional<Retrieved> got;
        if (scr_scope == MemoryScope::whole || in.l_q < 0) {
          got = retrieve(seg.cls->val.row(0), memory, retriever, MemoryScope::whole);
        } else if (cfg.scr_access == ScrAccess::random_partition) {
          got = sample_positive(memory, in.l_q, rng);
        } else if (cfg.scr_access == ScrAccess::retrieved_whole) {
          got = retrieve(seg.cls->val.row(0), memory, retriever, MemoryScope::whole);
        } else {
          got = retrieve(seg.cls->val.row(0), memory, retriever, MemoryScope::partition, in.l_q);
        }
        seg.retrieved = got;
        scr_vec = got ? got->vec
                      : Eigen::RowVectorXd(Eigen::RowVectorXd::Zero(2 * cfg.encoder.hidden));
      }

      const RelationBuckets filtered =
          filter_buckets(run.buckets, m, in.segment_texts[static_cast<size_t>(m)]);
      const FilledInput filled = fill_slots(t, enc, filtered, m,
                                            in.segment_texts[static_cast<size_t>(m)], scr_vec,
                                            cfg.slot_count);
      seg.fused = fuse(t, fusion, filled, enc, train, rng, keep_attention);
      seg.logits = span_logits(t, seg.fused, heads);
      run.outputs.push_back(std::move(seg));
    }
    return run;
  }

  void enqueue_clause(int l_q, const Eigen::RowVectorXd& vec, Rng* rng = nullptr) {
    memory.update(l_q, vec, cfg.scr_update, rng);
  }
};

// ---- checkpoint io ----
// Layout (all integers little-endian, doubles IEEE-754 binary64):
//   bytes 0..3   magic "CRDR"
//   bytes 4..7   uint32 version (currently 1)
//   bytes 8..15  uint64 header length H
//   H bytes      UTF-8 JSON header (model config, vocab, parameter manifest,
//                memory snapshot metadata, extra-blob manifest)
//   then         parameter data, row-major doubles, in manifest order
//   then         memory vectors, oldest first per partition, partition order
//   then         extra blobs (optimizer state and similar), manifest order
// Full details: docs/checkpoint_format.md.

struct CheckpointExtra {
  std::vector<std::pair<std::string, nn::Mat>> blobs;
  std::map<std::string, std::string> strings;
};

namespace detail {
inline void write_raw(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void write_mat(std::ofstream& out, const nn::Mat& m) {
  write_raw(out, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}
inline void read_raw(std::ifstream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("checkpoint: truncated file");
}
inline nn::Mat read_mat(std::ifstream& in, int rows, int cols) {
  nn::Mat m(rows, cols);
  read_raw(in, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
  return m;
}
}  // namespace detail

inline void save_checkpoint(const std::string& path, const ConReaderModel& model,
                            const CheckpointExtra* extra = nullptr) {
  nlohmann::json h;
  const auto& c = model.cfg;
  h["model"] = {{"layers", c.encoder.layers},
                {"hidden", c.encoder.hidden},
                {"heads", c.encoder.heads},
                {"ffn_mult", c.encoder.ffn_mult},
                {"vocab", c.encoder.vocab},
                {"max_positions", c.encoder.max_positions},
                {"max_segments", c.encoder.max_segments},
                {"dropout", c.encoder.dropout},
                {"max_len", c.max_len},
                {"slot_count", c.slot_count},
                {"stride", c.stride},
                {"memory_capacity", c.memory_capacity},
                {"num_types", c.num_types},
                {"def_max_len", c.def_max_len},
                {"use_lcr", c.use_lcr},
                {"use_tdr", c.use_tdr},
                {"use_scr", c.use_scr},
                {"scr_access", static_cast<int>(c.scr_access)},
                {"scr_update", static_cast<int>(c.scr_update)}};
  h["vocab"] = model.vocab.tokens();
  h["type_names"] = model.type_names;
  auto params = nlohmann::json::array();
  for (const auto& [name, v] : model.params.items)
    params.push_back({{"name", name}, {"rows", v->val.rows()}, {"cols", v->val.cols()}});
  h["params"] = params;

  nlohmann::json mem;
  mem["capacity"] = model.memory.capacity();
  mem["dim"] = model.memory.dim();
  mem["next_seq"] = model.memory.next_seq();
  auto parts = nlohmann::json::array();
  for (int l = 0; l < model.memory.num_types(); ++l) {
    auto part = nlohmann::json::array();
    for (const auto& item : model.memory.partition(l))
      part.push_back({{"seq", item.seq}, {"type", item.clause_type}});
    parts.push_back(part);
  }
  mem["partitions"] = parts;
  h["memory"] = mem;

  auto blobs = nlohmann::json::array();
  if (extra) {
    for (const auto& [name, m] : extra->blobs)
      blobs.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    h["strings"] = extra->strings;
  }
  h["extra_blobs"] = blobs;

  const std::string header = h.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  detail::write_raw(out, "CRDR", 4);
  const uint32_t version = 1;
  detail::write_raw(out, &version, 4);
  const uint64_t hlen = header.size();
  detail::write_raw(out, &hlen, 8);
  detail::write_raw(out, header.data(), header.size());
  for (const auto& [_, v] : model.params.items) detail::write_mat(out, v->val);
  for (int l = 0; l < model.memory.num_types(); ++l)
    for (const auto& item : model.memory.partition(l))
      detail::write_raw(out, item.vec.data(), sizeof(double) * static_cast<size_t>(item.vec.size()));
  if (extra)
    for (const auto& [_, m] : extra->blobs) detail::write_mat(out, m);
}

inline ConReaderModel load_checkpoint(const std::string& path,
                                      CheckpointExtra* extra_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  char magic[4];
  detail::read_raw(in, magic, 4);
  if (std::memcmp(magic, "CRDR", 4) != 0) throw ParseError(path + ": not a checkpoint file");
  uint32_t version = 0;
  detail::read_raw(in, &version, 4);
  if (version != 1) throw ParseError(path + ": unsupported checkpoint version");
  uint64_t hlen = 0;
  detail::read_raw(in, &hlen, 8);
  std::string header(hlen, '\0');
  detail::read_raw(in, header.data(), hlen);
  nlohmann::json h = nlohmann::json::parse(header);

  ModelConfig cfg;
  const auto& jm = h.at("model");
  cfg.encoder.layers = jm.at("layers").get<int>();
  cfg.encoder.hidden = jm.at("hidden").get<int>();
  cfg.encoder.heads = jm.at("heads").get<int>();
  cfg.encoder.ffn_mult = jm.at("ffn_mult").get<int>();
  cfg.encoder.vocab = jm.at("vocab").get<int>();
  cfg.encoder.max_positions = jm.at("max_positions").get<int>();
  cfg.encoder.max_segments = jm.at("max_segments").get<int>();
  cfg.encoder.dropout = jm.at("dropout").get<double>();
  cfg.max_len = jm.at("max_len").get<int>();
  cfg.slot_count = jm.at("slot_count").get<int>();
  cfg.stride = jm.at("stride").get<int>();
  cfg.memory_capacity = jm.at("memory_capacity").get<int>();
  cfg.num_types = jm.at("num_types").get<int>();
  cfg.def_max_len = jm.at("def_max_len").get<int>();
  cfg.use_lcr = jm.at("use_lcr").get<bool>();
  cfg.use_tdr = jm.at("use_tdr").get<bool>();
  cfg.use_scr = jm.at("use_scr").get<bool>();
  cfg.scr_access = static_cast<ScrAccess>(jm.at("scr_access").get<int>());
  cfg.scr_update = static_cast<ScrUpdate>(jm.at("scr_update").get<int>());

  Vocab vocab = Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
  std::vector<std::string> type_names = h.at("type_names").get<std::vector<std::string>>();
  ConReaderModel model = ConReaderModel::create(cfg, std::move(vocab), std::move(type_names), 0);

  const auto& jp = h.at("params");
  if (jp.size() != model.params.items.size())
    throw ParseError(path + ": parameter manifest mismatch");
  for (size_t i = 0; i < model.params.items.size(); ++i) {
    const auto& [name, v] = model.params.items[i];
    if (jp[i].at("name").get<std::string>() != name)
      throw ParseError(path + ": parameter order mismatch at " + name);
    const int rows = jp[i].at("rows").get<int>();
    const int cols = jp[i].at("cols").get<int>();
    if (rows != v->val.rows() || cols != v->val.cols())
      throw ParseError(path + ": parameter shape mismatch at " + name);
    v->val = detail::read_mat(in, rows, cols);
  }

  const auto& jmem = h.at("memory");
  const int dim = jmem.at("dim").get<int>();
  std::vector<std::deque<MemoryItem>> partitions(jmem.at("partitions").size());
  for (size_t l = 0; l < partitions.size(); ++l)
    for (const auto& ji : jmem.at("partitions")[l]) {
      MemoryItem item;
      item.seq = ji.at("seq").get<uint64_t>();
      item.clause_type = ji.at("type").get<int>();
      item.vec.resize(dim);
      detail::read_raw(in, item.vec.data(), sizeof(double) * static_cast<size_t>(dim));
      partitions[l].push_back(std::move(item));
    }
  const int n_partitions = static_cast<int>(partitions.size());
  model.memory.restore(n_partitions, jmem.at("capacity").get<int>(), dim,
                       jmem.at("next_seq").get<uint64_t>(), std::move(partitions));

  if (extra_out) {
    if (h.contains("strings"))
      extra_out->strings = h.at("strings").get<std::map<std::string, std::string>>();
    for (const auto& jb : h.at("extra_blobs")) {
      const int rows = jb.at("rows").get<int>();
      const int cols = jb.at("cols").get<int>();
      extra_out->blobs.emplace_back(jb.at("name").get<std::string>(),
                                    detail::read_mat(in, rows, cols));
    }
  }
  return model;
}

}  // namespace conreader
