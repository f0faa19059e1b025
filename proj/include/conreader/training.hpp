#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conreader/pipeline.hpp"

namespace conreader {

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 8;
  int epochs = 10;
  uint64_t seed = 1;
  double data_fraction = 1.0;
  double balance_ratio = 1.0;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  std::string loss_csv;          // empty = no csv
  std::string checkpoint_path;   // empty = no checkpoints
  bool checkpoint_every_epoch = false;

  void validate() const {
    if (lr <= 0.0) throw ConfigError("train: lr must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (data_fraction <= 0.0 || data_fraction > 1.0)
      throw ConfigError("train: data_fraction must be in (0, 1]");
  }
};

// -log P_s(s*) - log P_e(e*); the null convention scores position 0 twice.
inline nn::Var extraction_loss(nn::Tape& t, const SegmentOutput& seg,
                               const std::optional<ClauseSpan>& gold) {
  int s_target = 0;
  int e_target = 0;
  if (gold) {
    s_target = seg.fused.content_begin() + gold->start;
    e_target = seg.fused.content_begin() + gold->end;
  }
  return t.add(t.masked_ce(seg.logits.start, seg.fused.span_candidates, s_target),
               t.masked_ce(seg.logits.end, seg.fused.span_candidates, e_target));
}

// Decoupled weight decay; bias and layer-norm parameters are not decayed.
// Parameters whose gradient is identically zero this step are left untouched.
class AdamW {
 public:
  AdamW(const ParamStore& params, double weight_decay)
      : weight_decay_(weight_decay) {
    for (const auto& [name, v] : params.items) {
      m_.push_back(nn::Mat::Zero(v->val.rows(), v->val.cols()));
      v_.push_back(nn::Mat::Zero(v->val.rows(), v->val.cols()));
      decay_.push_back(params.no_decay(name) ? 0.0 : weight_decay);
    }
  }

  void step(ParamStore& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.items.size(); ++i) {
      nn::Node& p = *params.items[i].second;
      if (!p.has_nonzero_grad()) continue;
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
      const nn::Mat mhat = m_[i] / bc1;
      const nn::Mat vhat = v_[i] / bc2;
      p.val -= lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
      if (decay_[i] > 0.0) p.val -= lr * decay_[i] * p.val;
    }
  }

  int steps() const { return t_; }

  void serialize(const ParamStore& params, CheckpointExtra& extra) const {
    for (size_t i = 0; i < params.items.size(); ++i) {
      extra.blobs.emplace_back("adam.m." + params.items[i].first, m_[i]);
      extra.blobs.emplace_back("adam.v." + params.items[i].first, v_[i]);
    }
    extra.strings["adam.t"] = std::to_string(t_);
  }

  void restore(const ParamStore& params, const CheckpointExtra& extra) {
    for (size_t i = 0; i < params.items.size(); ++i) {
      for (const auto& [name, blob] : extra.blobs) {
        if (name == "adam.m." + params.items[i].first) m_[i] = blob;
        if (name == "adam.v." + params.items[i].first) v_[i] = blob;
      }
    }
    auto it = extra.strings.find("adam.t");
    if (it != extra.strings.end()) t_ = std::stoi(it->second);
  }

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  double weight_decay_;
  int t_ = 0;
  std::vector<nn::Mat> m_, v_;
  std::vector<double> decay_;
};

struct StepStats {
  int step = 0;
  double loss = 0.0;
  double extraction = 0.0;
  double retrieval = 0.0;
};

class Trainer {
 public:
  Trainer(ConReaderModel& model, const Dataset& data, const Tokenizer& tok, TrainConfig cfg)
      : model_(model),
        data_(data),
        tok_(tok),
        cfg_(cfg),
        cache_(data, tok, model.vocab, model.cfg.def_max_len),
        rng_dropout_(Rng(cfg.seed).derive("dropout")),
        rng_negative_(Rng(cfg.seed).derive("negatives")),
        rng_update_(Rng(cfg.seed).derive("memory-update")) {
    cfg_.validate();
    prepare();
  }

  // Plan for one (query, contract) group: which segments feed the encoder,
  // which produce span losses.
  struct GroupPlan {
    int example_idx = -1;
    std::shared_ptr<PreparedExample> prepared;
    std::vector<int> wanted;
    std::vector<int> encode_set;
  };

  const std::vector<GroupPlan>& groups() const { return groups_; }
  int total_pairs() const { return total_pairs_; }
  int total_steps() const { return total_steps_; }
  const std::vector<StepStats>& history() const { return history_; }

  void run(std::ostream* progress = nullptr) {
    std::ofstream csv;
    if (!cfg_.loss_csv.empty()) {
      csv.open(cfg_.loss_csv);
      if (!csv) throw ParseError("cannot write " + cfg_.loss_csv);
      csv << "step,L,L_e,L_r\n";
    }
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::vector<int> order(groups_.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      Rng(cfg_.seed).derive("epoch-" + std::to_string(epoch)).shuffle(order);
      size_t cursor = 0;
      while (cursor < order.size()) {
        std::vector<int> batch;
        int pairs = 0;
        while (cursor < order.size() && (batch.empty() || pairs < cfg_.batch_size)) {
          batch.push_back(order[cursor]);
          pairs += static_cast<int>(groups_[static_cast<size_t>(order[cursor])].wanted.size());
          ++cursor;
        }
        const StepStats st = train_step(batch);
        history_.push_back(st);
        if (csv.is_open())
          csv << st.step << ',' << fmt_double(st.loss) << ',' << fmt_double(st.extraction) << ','
              << fmt_double(st.retrieval) << '\n';
      }
      if (progress)
        (*progress) << "epoch " << (epoch + 1) << "/" << cfg_.epochs << " done, last loss "
                    << (history_.empty() ? 0.0 : history_.back().loss) << "\n";
      if (cfg_.checkpoint_every_epoch && !cfg_.checkpoint_path.empty())
        save(cfg_.checkpoint_path + ".epoch" + std::to_string(epoch + 1));
    }
    if (!cfg_.checkpoint_path.empty()) save(cfg_.checkpoint_path);
  }

  StepStats train_step(const std::vector<int>& batch) {
    model_.params.zero_grads();
    nn::Tape tape;
    std::vector<nn::Var> ce_terms;
    std::vector<nn::Var> hinge_terms;
    int n_pairs = 0;
    struct PendingUpdate {
      int l_q;
      Eigen::RowVectorXd vec;
    };
    std::vector<PendingUpdate> updates;

    for (int gi : batch) {
      const GroupPlan& plan = groups_[static_cast<size_t>(gi)];
      const Example& ex = data_.examples[static_cast<size_t>(plan.example_idx)];
      if (ex.query.clause_type < 0)
        throw ValidationError("training example " + ex.id + " lacks a clause type");
      const PreparedContract& pc = cache_.get(ex.contract_id);
      GroupInput in = build_group_input(pc, *plan.prepared, plan.encode_set, plan.wanted);
      GroupRun run =
          model_.run_group(tape, in, /*train=*/true, rng_dropout_, MemoryScope::partition);

      for (const SegmentOutput& seg : run.outputs) {
        const auto& golds =
            plan.prepared->golds_by_segment[static_cast<size_t>(seg.segment_index)];
        std::optional<ClauseSpan> gold;
        if (!golds.empty()) gold = golds.front();
        ce_terms.push_back(extraction_loss(tape, seg, gold));
        ++n_pairs;
        if (model_.cfg.use_scr && seg.retrieved) {
          auto neg = sample_negative(model_.memory, in.l_q, rng_negative_);
          if (neg)
            hinge_terms.push_back(
                hinge_term(tape, seg.cls, seg.retrieved->vec, neg->vec, model_.retriever));
        }
      }
      // clause representations for the memory update, from this forward pass
      if (model_.cfg.use_scr) {
        for (const auto& [m, enc] : run.encodings) {
          for (const auto& g : plan.prepared->golds_by_segment[static_cast<size_t>(m)]) {
            const int begin = 2 + enc.query_len;
            nn::Var rep = clause_repr(tape, enc, begin + g.start, begin + g.end);
            updates.push_back({in.l_q, rep->val.row(0)});
          }
        }
      }
    }

    auto sum_terms = [&](const std::vector<nn::Var>& terms) {
      nn::Var acc = tape.constant(nn::Mat::Zero(1, 1));
      for (const auto& v : terms) acc = tape.add(acc, v);
      return acc;
    };
    const double denom = n_pairs > 0 ? static_cast<double>(n_pairs) : 1.0;
    nn::Var le = tape.scale(sum_terms(ce_terms), 1.0 / denom);
    nn::Var lr_loss = tape.scale(sum_terms(hinge_terms), 1.0 / denom);
    nn::Var total = tape.add(le, lr_loss);
    tape.backward(total);
    optimizer_->step(model_.params, schedule_lr());

    // retrieval happened above with the pre-step memory; enqueue afterwards
    for (const auto& u : updates) model_.enqueue_clause(u.l_q, u.vec, &rng_update_);

    StepStats st;
    st.step = ++step_;
    st.loss = total->val(0, 0);
    st.extraction = le->val(0, 0);
    st.retrieval = lr_loss->val(0, 0);
    return st;
  }

  void save(const std::string& path) {
    CheckpointExtra extra;
    optimizer_->serialize(model_.params, extra);
    extra.strings["trainer.step"] = std::to_string(step_);
    std::ostringstream d, n, u;
    d << rng_dropout_.engine();
    n << rng_negative_.engine();
    u << rng_update_.engine();
    extra.strings["rng.dropout"] = d.str();
    extra.strings["rng.negatives"] = n.str();
    extra.strings["rng.memory-update"] = u.str();
    save_checkpoint(path, model_, &extra);
  }

  void restore_state(const CheckpointExtra& extra) {
    optimizer_->restore(model_.params, extra);
    auto it = extra.strings.find("trainer.step");
    if (it != extra.strings.end()) step_ = std::stoi(it->second);
    auto load_rng = [&](const char* key, Rng& rng) {
      auto s = extra.strings.find(key);
      if (s != extra.strings.end()) {
        std::istringstream in(s->second);
        in >> rng.engine();
      }
    };
    load_rng("rng.dropout", rng_dropout_);
    load_rng("rng.negatives", rng_negative_);
    load_rng("rng.memory-update", rng_update_);
  }

 private:
  void prepare() {
    // seed-deterministic subsample of training examples
    std::vector<int> example_ids(data_.examples.size());
    for (size_t i = 0; i < example_ids.size(); ++i) example_ids[i] = static_cast<int>(i);
    if (cfg_.data_fraction < 1.0) {
      Rng(cfg_.seed).derive("fraction").shuffle(example_ids);
      const size_t keep = std::max<size_t>(
          1, static_cast<size_t>(std::llround(cfg_.data_fraction *
                                              static_cast<double>(example_ids.size()))));
      example_ids.resize(keep);
      std::sort(example_ids.begin(), example_ids.end());
    }

    std::vector<TrainPair> pairs;
    std::vector<std::shared_ptr<PreparedExample>> prepared(data_.examples.size());
    for (int ei : example_ids) {
      const Example& ex = data_.examples[static_cast<size_t>(ei)];
      const Contract& c = data_.contract_of(ex.contract_id);
      const PreparedContract& pc = cache_.get(ex.contract_id);
      auto pe = std::make_shared<PreparedExample>(
          prepare_example(c, pc, ex, tok_, model_.vocab, model_.cfg));
      prepared[static_cast<size_t>(ei)] = pe;
      for (size_t s = 0; s < pe->segments.size(); ++s) {
        TrainPair p;
        p.example_idx = ei;
        p.segment_index = static_cast<int>(s);
        if (!pe->golds_by_segment[s].empty()) p.gold = pe->golds_by_segment[s].front();
        pairs.push_back(std::move(p));
      }
    }
    pairs = balance_pairs(pairs, cfg_.balance_ratio, Rng(cfg_.seed).derive("balance"));

    std::map<int, GroupPlan> by_example;
    for (const auto& p : pairs) {
      auto& plan = by_example[p.example_idx];
      plan.example_idx = p.example_idx;
      plan.prepared = prepared[static_cast<size_t>(p.example_idx)];
      plan.wanted.push_back(p.segment_index);
    }
    for (auto& [ei, plan] : by_example) {
      const auto& pe = *plan.prepared;
      std::set<int> enc(plan.wanted.begin(), plan.wanted.end());
      for (size_t s = 0; s < pe.golds_by_segment.size(); ++s)
        if (!pe.golds_by_segment[s].empty()) enc.insert(static_cast<int>(s));
      if (model_.cfg.use_lcr)
        for (size_t s = 0; s < pe.segments.size(); ++s) enc.insert(static_cast<int>(s));
      plan.encode_set.assign(enc.begin(), enc.end());
      groups_.push_back(std::move(plan));
      total_pairs_ += static_cast<int>(groups_.back().wanted.size());
    }
    const int steps_per_epoch =
        groups_.empty() ? 0
                        : static_cast<int>((total_pairs_ + cfg_.batch_size - 1) / cfg_.batch_size);
    total_steps_ = std::max(1, steps_per_epoch * cfg_.epochs);
    optimizer_ = std::make_unique<AdamW>(model_.params, cfg_.weight_decay);
  }

  double schedule_lr() const {
    const int t = step_ + 1;
    const int warmup = std::max(1, static_cast<int>(cfg_.warmup_fraction * total_steps_));
    if (t <= warmup) return cfg_.lr * static_cast<double>(t) / warmup;
    const double rest = static_cast<double>(total_steps_ - t) /
                        std::max(1, total_steps_ - warmup);
    return cfg_.lr * std::max(0.0, rest);
  }

  ConReaderModel& model_;
  const Dataset& data_;
  const Tokenizer& tok_;
  TrainConfig cfg_;
  ContractCache cache_;
  Rng rng_dropout_;
  Rng rng_negative_;
  Rng rng_update_;
  std::vector<GroupPlan> groups_;
  std::vector<StepStats> history_;
  std::unique_ptr<AdamW> optimizer_;
  int total_pairs_ = 0;
  int total_steps_ = 0;
  int step_ = 0;
};

}  // namespace conreader
