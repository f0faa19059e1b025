#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "conreader/common.hpp"

namespace conreader::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Mat val;
  Mat grad;  // allocated on first touch
  bool requires_grad = false;

  Mat& g() {
    if (grad.size() == 0) grad = Mat::Zero(val.rows(), val.cols());
    return grad;
  }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
  bool has_nonzero_grad() const {
    return grad.size() != 0 && grad.cwiseAbs().maxCoeff() > 0.0;
  }
};

using Var = std::shared_ptr<Node>;

inline Var make_var(Mat v, bool requires_grad = false) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

inline Var make_param(int rows, int cols, Rng& rng, double sd = 0.0) {
  if (sd <= 0.0) sd = std::sqrt(2.0 / (rows + cols));  // Xavier
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, sd);
  return make_var(std::move(m), true);
}

inline Var make_zeros(int rows, int cols, bool requires_grad = false) {
  return make_var(Mat::Zero(rows, cols), requires_grad);
}

inline Var make_ones(int rows, int cols, bool requires_grad = false) {
  return make_var(Mat::Ones(rows, cols), requires_grad);
}

// Reverse-mode tape over dense matrices. Ops append closures; backward()
// replays them last-to-first. Gradients accumulate into Node::grad, so
// persistent parameters must be zeroed between steps.
class Tape {
 public:
  Var constant(Mat v) { return make_var(std::move(v), false); }

  void backward(const Var& root) {
    if (root->val.rows() != 1 || root->val.cols() != 1)
      throw ConfigError("backward: root must be a 1x1 scalar");
    root->g()(0, 0) += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  }

  void clear() { ops_.clear(); }
  size_t size() const { return ops_.size(); }

  // ---- arithmetic ----

  Var matmul(const Var& a, const Var& b) {
    if (a->val.cols() != b->val.rows()) throw ConfigError("matmul: shape mismatch");
    Var out = make_var(a->val * b->val, a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push([a, b, out] {
        if (a->requires_grad) a->g().noalias() += out->g() * b->val.transpose();
        if (b->requires_grad) b->g().noalias() += a->val.transpose() * out->g();
      });
    return out;
  }

  // a * b^T
  Var matmul_nt(const Var& a, const Var& b) {
    if (a->val.cols() != b->val.cols()) throw ConfigError("matmul_nt: shape mismatch");
    Var out = make_var(a->val * b->val.transpose(), a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push([a, b, out] {
        if (a->requires_grad) a->g().noalias() += out->g() * b->val;
        if (b->requires_grad) b->g().noalias() += out->g().transpose() * a->val;
      });
    return out;
  }

  Var add(const Var& a, const Var& b) {
    if (a->val.rows() != b->val.rows() || a->val.cols() != b->val.cols())
      throw ConfigError("add: shape mismatch");
    Var out = make_var(a->val + b->val, a->requires_grad || b->requires_grad);
    if (out->requires_grad)
      push([a, b, out] {
        if (a->requires_grad) a->g() += out->g();
        if (b->requires_grad) b->g() += out->g();
      });
    return out;
  }

  // broadcast a 1 x C row vector over every row of a
  Var add_rowvec(const Var& a, const Var& v) {
    if (v->val.rows() != 1 || v->val.cols() != a->val.cols())
      throw ConfigError("add_rowvec: shape mismatch");
    Mat m = a->val;
    m.rowwise() += v->val.row(0);
    Var out = make_var(std::move(m), a->requires_grad || v->requires_grad);
    if (out->requires_grad)
      push([a, v, out] {
        if (a->requires_grad) a->g() += out->g();
        if (v->requires_grad) v->g().row(0) += out->g().colwise().sum();
      });
    return out;
  }

  Var scale(const Var& a, double s) {
    Var out = make_var(a->val * s, a->requires_grad);
    if (out->requires_grad)
      push([a, out, s] { a->g() += out->g() * s; });
    return out;
  }

  Var add_scalar(const Var& a, double s) {
    Var out = make_var((a->val.array() + s).matrix(), a->requires_grad);
    if (out->requires_grad)
      push([a, out] { a->g() += out->g(); });
    return out;
  }

  Var relu(const Var& a) {
    Var out = make_var(a->val.cwiseMax(0.0), a->requires_grad);
    if (out->requires_grad)
      push([a, out] {
        a->g() += (a->val.array() > 0.0).cast<double>().matrix().cwiseProduct(out->g());
      });
    return out;
  }

  Var gelu(const Var& a) {
    Mat y = a->val.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); });
    Var out = make_var(std::move(y), a->requires_grad);
    if (out->requires_grad)
      push([a, out] {
        const double inv_sqrt2pi = 0.3989422804014326779;
        Mat d = a->val.unaryExpr([&](double x) {
          return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
        });
        a->g() += d.cwiseProduct(out->g());
      });
    return out;
  }

  // ---- structure ----

  Var slice_rows(const Var& a, int r0, int n) {
    if (r0 < 0 || n < 0 || r0 + n > a->val.rows()) throw ConfigError("slice_rows: out of range");
    Var out = make_var(a->val.middleRows(r0, n), a->requires_grad);
    if (out->requires_grad)
      push([a, out, r0, n] { a->g().middleRows(r0, n) += out->g(); });
    return out;
  }

  Var row(const Var& a, int r) { return slice_rows(a, r, 1); }

  Var slice_cols(const Var& a, int c0, int n) {
    if (c0 < 0 || n < 0 || c0 + n > a->val.cols()) throw ConfigError("slice_cols: out of range");
    Var out = make_var(a->val.middleCols(c0, n), a->requires_grad);
    if (out->requires_grad)
      push([a, out, c0, n] { a->g().middleCols(c0, n) += out->g(); });
    return out;
  }

  Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ConfigError("concat_rows: empty");
    int rows = 0;
    const int cols = static_cast<int>(parts[0]->val.cols());
    bool req = false;
    for (const auto& p : parts) {
      if (p->val.cols() != cols) throw ConfigError("concat_rows: column mismatch");
      rows += static_cast<int>(p->val.rows());
      req = req || p->requires_grad;
    }
    Mat m(rows, cols);
    int r = 0;
    for (const auto& p : parts) {
      m.middleRows(r, p->val.rows()) = p->val;
      r += static_cast<int>(p->val.rows());
    }
    Var out = make_var(std::move(m), req);
    if (req)
      push([parts, out] {
        int r = 0;
        for (const auto& p : parts) {
          const int n = static_cast<int>(p->val.rows());
          if (p->requires_grad) p->g() += out->g().middleRows(r, n);
          r += n;
        }
      });
    return out;
  }

  Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ConfigError("concat_cols: empty");
    const int rows = static_cast<int>(parts[0]->val.rows());
    int cols = 0;
    bool req = false;
    for (const auto& p : parts) {
      if (p->val.rows() != rows) throw ConfigError("concat_cols: row mismatch");
      cols += static_cast<int>(p->val.cols());
      req = req || p->requires_grad;
    }
    Mat m(rows, cols);
    int c = 0;
    for (const auto& p : parts) {
      m.middleCols(c, p->val.cols()) = p->val;
      c += static_cast<int>(p->val.cols());
    }
    Var out = make_var(std::move(m), req);
    if (req)
      push([parts, out] {
        int c = 0;
        for (const auto& p : parts) {
          const int n = static_cast<int>(p->val.cols());
          if (p->requires_grad) p->g() += out->g().middleCols(c, n);
          c += n;
        }
      });
    return out;
  }

  // gather rows of an embedding table; backward scatter-adds
  Var embed(const Var& table, const std::vector<int>& ids) {
    Mat m(static_cast<int>(ids.size()), table->val.cols());
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= table->val.rows()) throw ConfigError("embed: id out of range");
      m.row(static_cast<int>(i)) = table->val.row(ids[i]);
    }
    Var out = make_var(std::move(m), table->requires_grad);
    if (out->requires_grad)
      push([table, out, ids] {
        for (size_t i = 0; i < ids.size(); ++i)
          table->g().row(ids[i]) += out->g().row(static_cast<int>(i));
      });
    return out;
  }

  // forward zeroes masked rows; masked rows also pass no gradient
  Var zero_rows(const Var& a, const std::vector<uint8_t>& mask) {
    if (static_cast<int>(mask.size()) != a->val.rows())
      throw ConfigError("zero_rows: mask size mismatch");
    Mat m = a->val;
    for (int i = 0; i < m.rows(); ++i)
      if (mask[static_cast<size_t>(i)]) m.row(i).setZero();
    Var out = make_var(std::move(m), a->requires_grad);
    if (out->requires_grad)
      push([a, out, mask] {
        for (int i = 0; i < a->val.rows(); ++i)
          if (!mask[static_cast<size_t>(i)]) a->g().row(i) += out->g().row(i);
      });
    return out;
  }

  // ---- normalization / attention ----

  Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5) {
    const int rows = static_cast<int>(x->val.rows());
    const int cols = static_cast<int>(x->val.cols());
    if (gain->val.cols() != cols || bias->val.cols() != cols)
      throw ConfigError("layer_norm: shape mismatch");
    Mat xhat(rows, cols);
    Eigen::VectorXd inv_sd(rows);
    for (int r = 0; r < rows; ++r) {
      const double mu = x->val.row(r).mean();
      const double var = (x->val.row(r).array() - mu).square().mean();
      const double is = 1.0 / std::sqrt(var + eps);
      inv_sd(r) = is;
      xhat.row(r) = (x->val.row(r).array() - mu) * is;
    }
    Mat y = xhat;
    for (int r = 0; r < rows; ++r)
      y.row(r) = xhat.row(r).cwiseProduct(gain->val.row(0)) + bias->val.row(0);
    Var out = make_var(std::move(y),
                       x->requires_grad || gain->requires_grad || bias->requires_grad);
    if (out->requires_grad)
      push([x, gain, bias, out, xhat, inv_sd, cols] {
        for (int r = 0; r < x->val.rows(); ++r) {
          Eigen::RowVectorXd dy = out->g().row(r);
          if (gain->requires_grad) gain->g().row(0) += dy.cwiseProduct(xhat.row(r));
          if (bias->requires_grad) bias->g().row(0) += dy;
          if (x->requires_grad) {
            Eigen::RowVectorXd dxhat = dy.cwiseProduct(gain->val.row(0));
            const double m1 = dxhat.mean();
            const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
            x->g().row(r) +=
                inv_sd(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
          }
        }
      });
    return out;
  }

  // Row-wise softmax restricted to allowed columns. Disallowed columns get an
  // exact 0 and never enter max/sum reductions, so their scores cannot perturb
  // allowed outputs even in the last bit.
  Var softmax_rows_masked(const Var& scores, const std::vector<uint8_t>& allowed) {
    const int rows = static_cast<int>(scores->val.rows());
    const int cols = static_cast<int>(scores->val.cols());
    if (static_cast<int>(allowed.size()) != cols)
      throw ConfigError("softmax_rows_masked: mask size mismatch");
    Mat p = Mat::Zero(rows, cols);
    for (int r = 0; r < rows; ++r) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < cols; ++c)
        if (allowed[static_cast<size_t>(c)]) mx = std::max(mx, scores->val(r, c));
      if (!std::isfinite(mx)) throw ConfigError("softmax_rows_masked: no allowed column");
      double z = 0.0;
      for (int c = 0; c < cols; ++c)
        if (allowed[static_cast<size_t>(c)]) {
          p(r, c) = std::exp(scores->val(r, c) - mx);
          z += p(r, c);
        }
      for (int c = 0; c < cols; ++c)
        if (allowed[static_cast<size_t>(c)]) p(r, c) /= z;
    }
    Var out = make_var(std::move(p), scores->requires_grad);
    if (out->requires_grad)
      push([scores, out, allowed] {
        for (int r = 0; r < out->val.rows(); ++r) {
          double dot = 0.0;
          for (int c = 0; c < out->val.cols(); ++c)
            if (allowed[static_cast<size_t>(c)]) dot += out->g()(r, c) * out->val(r, c);
          for (int c = 0; c < out->val.cols(); ++c)
            if (allowed[static_cast<size_t>(c)])
              scores->g()(r, c) += out->val(r, c) * (out->g()(r, c) - dot);
        }
      });
    return out;
  }

  Var dropout(const Var& a, double p, Rng& rng, bool enabled) {
    if (!enabled || p <= 0.0) return a;
    const double keep = 1.0 - p;
    Mat mask(a->val.rows(), a->val.cols());
    for (int r = 0; r < mask.rows(); ++r)
      for (int c = 0; c < mask.cols(); ++c)
        mask(r, c) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    Var out = make_var(a->val.cwiseProduct(mask), a->requires_grad);
    if (out->requires_grad)
      push([a, out, mask] { a->g() += out->g().cwiseProduct(mask); });
    return out;
  }

  // ---- reductions / losses ----

  Var sum_all(const Var& a) {
    Mat m(1, 1);
    m(0, 0) = a->val.sum();
    Var out = make_var(std::move(m), a->requires_grad);
    if (out->requires_grad)
      push([a, out] { a->g().array() += out->g()(0, 0); });
    return out;
  }

  // cosine of two 1 x n rows; zero-norm input yields 0 with zero gradient
  Var cosine(const Var& a, const Var& b) {
    if (a->val.rows() != 1 || b->val.rows() != 1 || a->val.cols() != b->val.cols())
      throw ConfigError("cosine: expects equal-length row vectors");
    const double na = a->val.row(0).norm();
    const double nb = b->val.row(0).norm();
    Mat m(1, 1);
    const bool degenerate = (na == 0.0 || nb == 0.0);
    const double dot = a->val.row(0).dot(b->val.row(0));
    m(0, 0) = degenerate ? 0.0 : dot / (na * nb);
    Var out = make_var(std::move(m), a->requires_grad || b->requires_grad);
    if (out->requires_grad && !degenerate)
      push([a, b, out, na, nb, dot] {
        const double go = out->g()(0, 0);
        const double f = dot / (na * nb);
        if (a->requires_grad)
          a->g().row(0) += go * (b->val.row(0) / (na * nb) - a->val.row(0) * (f / (na * na)));
        if (b->requires_grad)
          b->g().row(0) += go * (a->val.row(0) / (na * nb) - b->val.row(0) * (f / (nb * nb)));
      });
    return out;
  }

  // Cross-entropy -log softmax(logits)[target] over allowed indices, computed
  // via log-sum-exp. logits is n x 1.
  Var masked_ce(const Var& logits, const std::vector<uint8_t>& allowed, int target) {
    const int n = static_cast<int>(logits->val.rows());
    if (logits->val.cols() != 1) throw ConfigError("masked_ce: logits must be n x 1");
    if (static_cast<int>(allowed.size()) != n) throw ConfigError("masked_ce: mask size mismatch");
    if (target < 0 || target >= n || !allowed[static_cast<size_t>(target)])
      throw ConfigError("masked_ce: target outside candidate mask");
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (allowed[static_cast<size_t>(i)]) mx = std::max(mx, logits->val(i, 0));
    double z = 0.0;
    for (int i = 0; i < n; ++i)
      if (allowed[static_cast<size_t>(i)]) z += std::exp(logits->val(i, 0) - mx);
    Mat m(1, 1);
    m(0, 0) = std::log(z) + mx - logits->val(target, 0);
    Var out = make_var(std::move(m), logits->requires_grad);
    if (out->requires_grad)
      push([logits, out, allowed, target, mx, z] {
        const double go = out->g()(0, 0);
        for (int i = 0; i < logits->val.rows(); ++i)
          if (allowed[static_cast<size_t>(i)]) {
            const double p = std::exp(logits->val(i, 0) - mx) / z;
            logits->g()(i, 0) += go * (p - (i == target ? 1.0 : 0.0));
          }
      });
    return out;
  }

 private:
  void push(std::function<void()> f) { ops_.push_back(std::move(f)); }
  std::vector<std::function<void()>> ops_;
};

// softmax over allowed entries of a plain column, outside any tape
inline Eigen::VectorXd masked_softmax_col(const Eigen::VectorXd& logits,
                                          const std::vector<uint8_t>& allowed) {
  const int n = static_cast<int>(logits.size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (allowed[static_cast<size_t>(i)]) mx = std::max(mx, logits(i));
  if (!std::isfinite(mx)) return p;
  double z = 0.0;
  for (int i = 0; i < n; ++i)
    if (allowed[static_cast<size_t>(i)]) {
      p(i) = std::exp(logits(i) - mx);
      z += p(i);
    }
  for (int i = 0; i < n; ++i)
    if (allowed[static_cast<size_t>(i)]) p(i) /= z;
  return p;
}

}  // namespace conreader::nn
