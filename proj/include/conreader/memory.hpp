#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "conreader/autograd.hpp"
#include "conreader/encoder.hpp"

namespace conreader {

enum class MemoryScope { partition, whole };

// Access/update strategy knobs for the retrieval-variant experiments.
enum class ScrAccess { retrieved_partition, random_partition, retrieved_whole };
enum class ScrUpdate { fifo, random, none };

inline ScrAccess scr_access_from(const std::string& s) {
  if (s == "partition" || s == "retrieved_partition") return ScrAccess::retrieved_partition;
  if (s == "random" || s == "random_partition") return ScrAccess::random_partition;
  if (s == "whole" || s == "retrieved_whole") return ScrAccess::retrieved_whole;
  throw ConfigError("unknown scr access strategy: " + s);
}
inline ScrUpdate scr_update_from(const std::string& s) {
  if (s == "fifo") return ScrUpdate::fifo;
  if (s == "random") return ScrUpdate::random;
  if (s == "none") return ScrUpdate::none;
  throw ConfigError("unknown scr update strategy: " + s);
}

struct MemoryItem {
  Eigen::RowVectorXd vec;  // detached clause vector, dimension 2h
  uint64_t seq = 0;        // global enqueue counter; higher = more recent
  int clause_type = -1;
};

// L bounded FIFO partitions of clause vectors. Single-writer; update order is
// part of the training contract.
class ClauseMemory {
 public:
  ClauseMemory() = default;
  ClauseMemory(int num_types, int capacity, int dim)
      : capacity_(capacity), dim_(dim), partitions_(static_cast<size_t>(num_types)) {
    if (num_types < 1 || capacity < 1 || dim < 1)
      throw ConfigError("clause memory: sizes must be positive");
  }

  int num_types() const { return static_cast<int>(partitions_.size()); }
  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  uint64_t next_seq() const { return next_seq_; }

  const std::deque<MemoryItem>& partition(int l) const {
    check_type(l);
    return partitions_[static_cast<size_t>(l)];
  }

  size_t total_size() const {
    size_t n = 0;
    for (const auto& p : partitions_) n += p.size();
    return n;
  }

  void update(int l, const Eigen::RowVectorXd& v, ScrUpdate strategy = ScrUpdate::fifo,
              Rng* rng = nullptr) {
    check_type(l);
    if (v.size() != dim_) throw ConfigError("memory update: vector dimension mismatch");
    auto& part = partitions_[static_cast<size_t>(l)];
    if (static_cast<int>(part.size()) >= capacity_) {
      switch (strategy) {
        case ScrUpdate::fifo:
          part.pop_front();  // evict the earliest
          break;
        case ScrUpdate::random: {
          if (!rng) throw ConfigError("memory update: random strategy needs an rng");
          const int victim = rng->uniform_int(0, static_cast<int>(part.size()) - 1);
          part.erase(part.begin() + victim);
          break;
        }
        case ScrUpdate::none:
          return;  // memory frozen once full
      }
    }
    part.push_back({v, next_seq_++, l});
  }

  // Restore from a snapshot; used by checkpoint loading.
  void restore(int num_types, int capacity, int dim, uint64_t next_seq,
               std::vector<std::deque<MemoryItem>> partitions) {
    capacity_ = capacity;
    dim_ = dim;
    next_seq_ = next_seq;
    partitions_ = std::move(partitions);
    if (static_cast<int>(partitions_.size()) != num_types)
      throw ConfigError("memory restore: partition count mismatch");
  }

 private:
  void check_type(int l) const {
    if (l < 0 || l >= num_types())
      throw ConfigError("memory: clause type " + std::to_string(l) + " out of range [0, " +
                        std::to_string(num_types()) + ")");
  }
  int capacity_ = 0;
  int dim_ = 0;
  uint64_t next_seq_ = 0;
  std::vector<std::deque<MemoryItem>> partitions_;
};

// Trainable projections mapping a segment [CLS] vector (h) and a stored
// clause vector (2h) into a shared similarity space.
struct Retriever {
  nn::Var proj_segment;  // h x h
  nn::Var proj_clause;   // 2h x h

  static Retriever create(ParamStore& params, int hidden, Rng& rng) {
    Retriever r;
    r.proj_segment = params.add("retriever.proj_segment", nn::make_param(hidden, hidden, rng));
    r.proj_clause = params.add("retriever.proj_clause", nn::make_param(2 * hidden, hidden, rng));
    return r;
  }

  // cosine of the two projections; detached math for retrieval scans
  double similarity(const Eigen::RowVectorXd& cls, const Eigen::RowVectorXd& clause) const {
    Eigen::RowVectorXd a = cls * proj_segment->val;
    Eigen::RowVectorXd b = clause * proj_clause->val;
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
  }

  // same similarity on the tape; gradient reaches the projections and cls
  nn::Var similarity_var(nn::Tape& t, const nn::Var& cls, const nn::Var& clause) const {
    return t.cosine(t.matmul(cls, proj_segment), t.matmul(clause, proj_clause));
  }
};

// Concatenated start/end token representations of a clause inside a segment.
// s and e are absolute positions in the assembled input.
inline nn::Var clause_repr(nn::Tape& t, const SegmentEncoding& enc, int s, int e) {
  const int n = static_cast<int>(enc.slot_mask.size());
  if (s < 0 || e < 0 || s >= n || e >= n) throw ConfigError("clause_repr: index out of range");
  if (s > e) throw ConfigError("clause_repr: start after end");
  if (enc.slot_mask[static_cast<size_t>(s)] || enc.slot_mask[static_cast<size_t>(e)])
    throw ConfigError("clause_repr: index points at a reserved slot");
  if (enc.sep1 >= 0 && enc.sep2 >= 0 && (s <= enc.sep1 || e >= enc.sep2))
    throw ConfigError("clause_repr: index outside segment content");
  return t.concat_cols({t.row(enc.hidden, s), t.row(enc.hidden, e)});
}

struct Retrieved {
  Eigen::RowVectorXd vec;
  double score = 0.0;
  uint64_t seq = 0;
  int clause_type = -1;
};

// Argmax similarity over a partition or the whole memory; ties go to the most
// recently enqueued item.
inline std::optional<Retrieved> retrieve(const Eigen::RowVectorXd& cls, const ClauseMemory& mem,
                                         const Retriever& retr, MemoryScope scope, int l_q = -1) {
  std::optional<Retrieved> best;
  auto consider = [&](const MemoryItem& item) {
    const double score = retr.similarity(cls, item.vec);
    if (!best || score > best->score || (score == best->score && item.seq > best->seq))
      best = Retrieved{item.vec, score, item.seq, item.clause_type};
  };
  if (scope == MemoryScope::partition) {
    for (const auto& item : mem.partition(l_q)) consider(item);
  } else {
    for (int l = 0; l < mem.num_types(); ++l)
      for (const auto& item : mem.partition(l)) consider(item);
  }
  return best;
}

// Uniform draw from the partitions other than l_q; nullopt when empty.
inline std::optional<Retrieved> sample_negative(const ClauseMemory& mem, int l_q, Rng& rng) {
  int total = 0;
  for (int l = 0; l < mem.num_types(); ++l)
    if (l != l_q) total += static_cast<int>(mem.partition(l).size());
  if (total == 0) return std::nullopt;
  int pick = rng.uniform_int(0, total - 1);
  for (int l = 0; l < mem.num_types(); ++l) {
    if (l == l_q) continue;
    const auto& part = mem.partition(l);
    if (pick < static_cast<int>(part.size())) {
      const auto& item = part[static_cast<size_t>(pick)];
      return Retrieved{item.vec, 0.0, item.seq, item.clause_type};
    }
    pick -= static_cast<int>(part.size());
  }
  return std::nullopt;
}

// Uniform draw from partition l_q, for the random-access variant.
inline std::optional<Retrieved> sample_positive(const ClauseMemory& mem, int l_q, Rng& rng) {
  const auto& part = mem.partition(l_q);
  if (part.empty()) return std::nullopt;
  const auto& item = part[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(part.size()) - 1))];
  return Retrieved{item.vec, 0.0, item.seq, item.clause_type};
}

// One hinge term: max(0, 1 - f(cls, pos) + f(cls, neg)).
inline nn::Var hinge_term(nn::Tape& t, const nn::Var& cls, const Eigen::RowVectorXd& positive,
                          const Eigen::RowVectorXd& negative, const Retriever& retr) {
  nn::Var pos = t.constant(positive);
  nn::Var neg = t.constant(negative);
  nn::Var f_pos = retr.similarity_var(t, cls, pos);
  nn::Var f_neg = retr.similarity_var(t, cls, neg);
  return t.relu(t.add_scalar(t.add(t.scale(f_pos, -1.0), f_neg), 1.0));
}

// Sum of hinge terms over a batch of segment [CLS] vectors. Segments without
// an available positive or negative contribute nothing.
inline nn::Var retrieval_loss(nn::Tape& t, const std::vector<nn::Var>& cls_batch,
                              const ClauseMemory& mem, const Retriever& retr, int l_q, Rng& rng,
                              ScrAccess access = ScrAccess::retrieved_partition) {
  nn::Var total = t.constant(nn::Mat::Zero(1, 1));
  for (const auto& cls : cls_batch) {
    std::optional<Retrieved> pos;
    switch (access) {
      case ScrAccess::retrieved_partition:
        pos = retrieve(cls->val.row(0), mem, retr, MemoryScope::partition, l_q);
        break;
      case ScrAccess::random_partition:
        pos = sample_positive(mem, l_q, rng);
        break;
      case ScrAccess::retrieved_whole:
        pos = retrieve(cls->val.row(0), mem, retr, MemoryScope::whole);
        break;
    }
    if (!pos) continue;
    auto neg = sample_negative(mem, l_q, rng);
    if (!neg) continue;
    total = t.add(total, hinge_term(t, cls, pos->vec, neg->vec, retr));
  }
  return total;
}

}  // namespace conreader
