#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "robustmt/errors.hpp"
#include "robustmt/tensor.hpp"

namespace rmt {

// ---------------------------------------------------------------------------
// Reverse-mode autodiff on a flat tape of matrix nodes. Graphs are built per
// training batch and discarded; creation order is the topological order, so
// backward() just walks the tape in reverse. Gradient correctness is pinned
// by the finite-difference check in the model module.
// ---------------------------------------------------------------------------

template <typename T>
class Graph {
 public:
  struct Node {
    Mat<T> value;
    Mat<T> grad;
    std::function<void()> backprop;  // empty for leaves without parents
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  const Mat<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Mat<T>& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  // Constant leaf.
  int input(Mat<T> value) { return push(std::move(value)); }

  // Trainable leaf: on backward, the node gradient is accumulated into
  // *external_grad (which must outlive the graph and match value's shape).
  int parameter(const Mat<T>& value, Mat<T>* external_grad) {
    int id = push(value);
    node(id).backprop = [this, id, external_grad]() { *external_grad += node(id).grad; };
    return id;
  }

  // Embedding lookup: selects rows of `table` by id.
  int gather_rows(int table, const std::vector<int>& ids) {
    const Mat<T>& src = value(table);
    Mat<T> out(static_cast<Eigen::Index>(ids.size()), src.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(ids[i]);
    int id = push(std::move(out));
    node(id).backprop = [this, id, table, ids]() {
      const Mat<T>& g = node(id).grad;
      Mat<T>& tg = node(table).grad;
      for (std::size_t i = 0; i < ids.size(); ++i)
        tg.row(ids[i]) += g.row(static_cast<Eigen::Index>(i));
    };
    return id;
  }

  int matmul(int a, int b) {
    int id = push(value(a) * value(b));
    node(id).backprop = [this, id, a, b]() {
      const Mat<T>& g = node(id).grad;
      node(a).grad.noalias() += g * value(b).transpose();
      node(b).grad.noalias() += value(a).transpose() * g;
    };
    return id;
  }

  // a * b^T
  int matmul_nt(int a, int b) {
    int id = push(value(a) * value(b).transpose());
    node(id).backprop = [this, id, a, b]() {
      const Mat<T>& g = node(id).grad;
      node(a).grad.noalias() += g * value(b);
      node(b).grad.noalias() += g.transpose() * value(a);
    };
    return id;
  }

  int add(int a, int b) {
    int id = push(value(a) + value(b));
    node(id).backprop = [this, id, a, b]() {
      node(a).grad += node(id).grad;
      node(b).grad += node(id).grad;
    };
    return id;
  }

  // Adds a 1xC row vector to every row of a.
  int add_rowvec(int a, int bias) {
    Mat<T> out = value(a);
    out.rowwise() += value(bias).row(0);
    int id = push(std::move(out));
    node(id).backprop = [this, id, a, bias]() {
      const Mat<T>& g = node(id).grad;
      node(a).grad += g;
      node(bias).grad.row(0) += g.colwise().sum();
    };
    return id;
  }

  int scale(int a, T factor) {
    int id = push(Mat<T>(value(a) * factor));
    node(id).backprop = [this, id, a, factor]() { node(a).grad += node(id).grad * factor; };
    return id;
  }

  int relu(int a) {
    Mat<T> out = value(a).cwiseMax(T(0));
    int id = push(std::move(out));
    node(id).backprop = [this, id, a]() {
      node(a).grad.array() +=
          node(id).grad.array() * (value(a).array() > T(0)).template cast<T>();
    };
    return id;
  }

  // Row-wise layer normalization with learned gain/bias (both 1xC).
  int layer_norm(int x, int gain, int bias) {
    const Mat<T>& in = value(x);
    const Eigen::Index rows = in.rows(), cols = in.cols();
    Mat<T> normalized(rows, cols);
    Mat<T> inv_std(rows, 1);
    const T eps = T(1e-6);
    for (Eigen::Index r = 0; r < rows; ++r) {
      T mean = in.row(r).mean();
      T var = (in.row(r).array() - mean).square().mean();
      T is = T(1) / std::sqrt(var + eps);
      inv_std(r, 0) = is;
      normalized.row(r) = (in.row(r).array() - mean) * is;
    }
    Mat<T> out = normalized;
    out.array().rowwise() *= value(gain).row(0).array();
    out.rowwise() += value(bias).row(0);
    int id = push(std::move(out));
    node(id).backprop = [this, id, x, gain, bias, normalized, inv_std]() {
      const Mat<T>& g = node(id).grad;
      const Eigen::Index rows = g.rows(), cols = g.cols();
      node(bias).grad.row(0) += g.colwise().sum();
      node(gain).grad.row(0) += (g.array() * normalized.array()).colwise().sum().matrix();
      const auto gain_row = value(gain).row(0);
      for (Eigen::Index r = 0; r < rows; ++r) {
        // d_xhat = g * gain;  dx = (d_xhat - mean(d_xhat) - xhat * mean(d_xhat*xhat)) / std
        Eigen::Array<T, 1, Eigen::Dynamic> d_xhat = g.row(r).array() * gain_row.array();
        T m1 = d_xhat.mean();
        T m2 = (d_xhat * normalized.row(r).array()).mean();
        node(x).grad.row(r).array() +=
            (d_xhat - m1 - normalized.row(r).array() * m2) * inv_std(r, 0);
      }
      (void)cols;
    };
    return id;
  }

  // Row-wise softmax of attention scores; with causal=true, column j > row i
  // is masked out (standard decoder self-attention mask).
  int softmax_rows(int scores, bool causal) {
    Mat<T> out = value(scores);
    const Eigen::Index rows = out.rows(), cols = out.cols();
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index limit = causal ? std::min(r + 1, cols) : cols;
      T max_v = out.row(r).head(limit).maxCoeff();
      T sum = T(0);
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (c < limit) {
          out(r, c) = std::exp(out(r, c) - max_v);
          sum += out(r, c);
        } else {
          out(r, c) = T(0);
        }
      }
      out.row(r) /= sum;
    }
    int id = push(std::move(out));
    node(id).backprop = [this, id, scores]() {
      const Mat<T>& y = node(id).value;
      const Mat<T>& g = node(id).grad;
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        T dot = y.row(r).dot(g.row(r));
        node(scores).grad.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
      }
    };
    return id;
  }

  // Inverted dropout; identity when disabled or rate == 0.
  int dropout(int a, double rate, Rng& rng, bool enabled) {
    if (!enabled || rate <= 0.0) return a;
    const Mat<T>& in = value(a);
    Mat<T> mask(in.rows(), in.cols());
    const T keep_scale = T(1.0 / (1.0 - rate));
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        mask(r, c) = uniform_real(rng) < rate ? T(0) : keep_scale;
    int id = push(Mat<T>(in.cwiseProduct(mask)));
    node(id).backprop = [this, id, a, mask]() {
      node(a).grad += node(id).grad.cwiseProduct(mask);
    };
    return id;
  }

  int slice_cols(int a, Eigen::Index start, Eigen::Index width) {
    int id = push(Mat<T>(value(a).middleCols(start, width)));
    node(id).backprop = [this, id, a, start, width]() {
      node(a).grad.middleCols(start, width) += node(id).grad;
    };
    return id;
  }

  int concat_cols(const std::vector<int>& parts) {
    Eigen::Index rows = value(parts.front()).rows();
    Eigen::Index cols = 0;
    for (int p : parts) cols += value(p).cols();
    Mat<T> out(rows, cols);
    Eigen::Index at = 0;
    for (int p : parts) {
      out.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    int id = push(std::move(out));
    node(id).backprop = [this, id, parts]() {
      Eigen::Index at = 0;
      for (int p : parts) {
        Eigen::Index w = node(p).value.cols();
        node(p).grad += node(id).grad.middleCols(at, w);
        at += w;
      }
    };
    return id;
  }

  // Label-smoothed cross entropy, summed over rows: for each position i with
  // reference r_i != ignore_id,
  //   loss_i = logsumexp(z_i) - ((1-eps) * z_i[r_i] + eps/V * sum_k z_i[k]).
  // Returns a 1x1 node; `token_count` reports contributing rows.
  int cross_entropy_sum(int logits, const std::vector<int>& refs, double smoothing,
                        int ignore_id, std::size_t* token_count) {
    const Mat<T>& z = value(logits);
    if (static_cast<std::size_t>(z.rows()) != refs.size())
      throw ShapeError("cross_entropy_sum: rows != refs");
    const Eigen::Index vocab = z.cols();
    Mat<T> probs(z.rows(), vocab);
    double total = 0.0;
    std::size_t count = 0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      if (refs[static_cast<std::size_t>(r)] == ignore_id) {
        probs.row(r).setZero();
        continue;
      }
      T max_v = z.row(r).maxCoeff();
      T sum_exp = T(0);
      for (Eigen::Index c = 0; c < vocab; ++c) sum_exp += std::exp(z(r, c) - max_v);
      T lse = max_v + std::log(sum_exp);
      probs.row(r) = ((z.row(r).array() - lse).exp()).matrix();
      double expected = (1.0 - smoothing) * static_cast<double>(z(r, refs[static_cast<std::size_t>(r)]));
      expected += smoothing / static_cast<double>(vocab) * static_cast<double>(z.row(r).sum());
      total += static_cast<double>(lse) - expected;
      ++count;
    }
    if (token_count) *token_count = count;
    Mat<T> out(1, 1);
    out(0, 0) = static_cast<T>(total);
    int id = push(std::move(out));
    node(id).backprop = [this, id, logits, refs, smoothing, ignore_id, probs]() {
      const T g = node(id).grad(0, 0);
      const Eigen::Index vocab = probs.cols();
      const T uniform = static_cast<T>(smoothing / static_cast<double>(vocab));
      const T confident = static_cast<T>(1.0 - smoothing);
      Mat<T>& lg = node(logits).grad;
      for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        int ref = refs[static_cast<std::size_t>(r)];
        if (ref == ignore_id) continue;
        lg.row(r).array() += (probs.row(r).array() - uniform) * g;
        lg(r, ref) -= confident * g;
      }
    };
    return id;
  }

  // Seeds d(target)/d(target) = seed and propagates to all leaves.
  void backward(int target, T seed) {
    for (auto& n : nodes_) n.grad = Mat<T>::Zero(n.value.rows(), n.value.cols());
    nodes_[static_cast<std::size_t>(target)].grad(0, 0) = seed;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backprop) n.backprop();
    }
  }

 private:
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  int push(Mat<T> value) {
    nodes_.push_back(Node{std::move(value), Mat<T>(), nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace rmt
