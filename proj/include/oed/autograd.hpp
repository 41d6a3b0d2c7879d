// Reverse-mode automatic differentiation over dense double matrices. Each
// operation records its parents and a backprop closure; backward() walks the
// graph once in reverse topological order. Single-threaded by design.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "oed/common.hpp"

namespace oed::ag {

using Mat = Eigen::MatrixXd;

struct Node {
  Mat value;
  Mat grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  Mat& ensure_grad() {
    if (!has_grad) {
      grad = Mat::Zero(value.rows(), value.cols());
      has_grad = true;
    }
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Mat v, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->value = std::move(v);
    node_->requires_grad = requires_grad;
  }

  static Tensor constant(Mat v) { return Tensor(std::move(v), false); }
  static Tensor scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return Tensor(std::move(m), false);
  }
  static Tensor param(Mat v) { return Tensor(std::move(v), true); }

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& mutable_value() { return node_->value; }
  const Mat& grad() const {
    require(node_->has_grad, "tensor has no gradient");
    return node_->grad;
  }
  bool has_grad() const { return node_ && node_->has_grad; }
  void zero_grad() {
    if (node_) {
      node_->grad.setZero();
      node_->has_grad = node_->grad.size() > 0;
      if (!node_->has_grad) {
        node_->grad = Mat::Zero(node_->value.rows(), node_->value.cols());
        node_->has_grad = true;
      }
    }
  }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

inline Tensor make_op(Mat value, std::vector<Tensor> inputs,
                      std::function<void(Node&)> backprop) {
  bool needs = false;
  for (const auto& t : inputs) needs = needs || t.requires_grad();
  Tensor out(std::move(value), needs);
  if (needs) {
    auto n = out.node();
    n->parents.reserve(inputs.size());
    for (const auto& t : inputs) n->parents.push_back(t.node());
    n->backprop = std::move(backprop);
  }
  return out;
}

}  // namespace detail

// ---- elementwise and linear algebra ops ----

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  return detail::make_op(a.value() * b.value(), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad * pb.value.transpose();
    if (pb.requires_grad) pb.ensure_grad() += pa.value.transpose() * n.grad;
  });
}

inline Tensor transpose(const Tensor& a) {
  return detail::make_op(a.value().transpose(), {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad.transpose();
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return detail::make_op(a.value() + b.value(), {a, b}, [](Node& n) {
    for (auto& p : n.parents)
      if (p->requires_grad) p->ensure_grad() += n.grad;
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return detail::make_op(a.value() - b.value(), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad;
    if (pb.requires_grad) pb.ensure_grad() -= n.grad;
  });
}

// Broadcasts a 1 x C row vector over every row of a.
inline Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(),
          "add_rowvec: row must be 1 x cols(a)");
  Mat v = a.value();
  v.rowwise() += Eigen::RowVectorXd(row.value().row(0));
  return detail::make_op(std::move(v), {a, row}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pr = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad;
    if (pr.requires_grad) pr.ensure_grad() += n.grad.colwise().sum();
  });
}

inline Tensor cmul(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "cmul: shape mismatch");
  return detail::make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad.cwiseProduct(pb.value);
    if (pb.requires_grad) pb.ensure_grad() += n.grad.cwiseProduct(pa.value);
  });
}

inline Tensor cdiv(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "cdiv: shape mismatch");
  return detail::make_op(a.value().cwiseQuotient(b.value()), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad.cwiseQuotient(pb.value);
    if (pb.requires_grad)
      pb.ensure_grad() -= n.grad.cwiseProduct(pa.value)
                              .cwiseQuotient(pb.value.cwiseProduct(pb.value));
  });
}

inline Tensor smul(const Tensor& a, double k) {
  return detail::make_op(a.value() * k, {a}, [k](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad * k;
  });
}

inline Tensor sadd(const Tensor& a, double k) {
  return detail::make_op(a.value().array() + k, {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad;
  });
}

// k - a, elementwise.
inline Tensor rsub(double k, const Tensor& a) {
  return detail::make_op((k - a.value().array()).matrix(), {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() -= n.grad;
  });
}

inline Tensor neg(const Tensor& a) { return smul(a, -1.0); }

// ---- nonlinearities ----

inline Tensor sigmoid(const Tensor& a) {
  Mat v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return detail::make_op(v, {a}, [v](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() +=
          n.grad.cwiseProduct((v.array() * (1.0 - v.array())).matrix());
  });
}

inline Tensor relu(const Tensor& a) {
  Mat v = a.value().cwiseMax(0.0);
  return detail::make_op(v, {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() +=
          n.grad.cwiseProduct((p.value.array() > 0.0).cast<double>().matrix());
  });
}

// Exact gelu x * Phi(x); smooth, so finite-difference checks are clean.
inline Tensor gelu(const Tensor& a) {
  const double inv_sqrt2 = 0.7071067811865475244;
  Eigen::ArrayXXd x = a.value().array();
  Eigen::ArrayXXd phi = 0.5 * (1.0 + (x * inv_sqrt2).erf());
  Mat v = (x * phi).matrix();
  Mat dphi = (phi + x * (-0.5 * x.square()).exp() * 0.3989422804014326779).matrix();
  return detail::make_op(v, {a}, [dphi](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad.cwiseProduct(dphi);
  });
}

// log(1 + exp(x)), computed stably.
inline Tensor softplus(const Tensor& a) {
  Eigen::ArrayXXd x = a.value().array();
  Mat v = (x.max(0.0) + (1.0 + (-x.abs()).exp()).log()).matrix();
  return detail::make_op(v, {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) {
      Eigen::ArrayXXd s = 1.0 / (1.0 + (-p.value.array()).exp());
      p.ensure_grad() += n.grad.cwiseProduct(s.matrix());
    }
  });
}

inline Tensor log(const Tensor& a) {
  return detail::make_op(a.value().array().log().matrix(), {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad() += n.grad.cwiseQuotient(p.value);
  });
}

// a^k for a > 0.
inline Tensor pow_const(const Tensor& a, double k) {
  Mat v = a.value().array().pow(k).matrix();
  return detail::make_op(v, {a}, [k](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() += n.grad.cwiseProduct(
          (k * p.value.array().pow(k - 1.0)).matrix());
  });
}

inline Tensor abs(const Tensor& a) {
  return detail::make_op(a.value().cwiseAbs(), {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() += n.grad.cwiseProduct(p.value.array().sign().matrix());
  });
}

inline Tensor min_ew(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "min_ew: shape mismatch");
  return detail::make_op(a.value().cwiseMin(b.value()), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    Mat take_a = (pa.value.array() <= pb.value.array()).cast<double>().matrix();
    if (pa.requires_grad) pa.ensure_grad() += n.grad.cwiseProduct(take_a);
    if (pb.requires_grad)
      pb.ensure_grad() +=
          n.grad.cwiseProduct((1.0 - take_a.array()).matrix());
  });
}

inline Tensor max_ew(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_ew: shape mismatch");
  return detail::make_op(a.value().cwiseMax(b.value()), {a, b}, [](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    Mat take_a = (pa.value.array() >= pb.value.array()).cast<double>().matrix();
    if (pa.requires_grad) pa.ensure_grad() += n.grad.cwiseProduct(take_a);
    if (pb.requires_grad)
      pb.ensure_grad() +=
          n.grad.cwiseProduct((1.0 - take_a.array()).matrix());
  });
}

inline Tensor clamp_min(const Tensor& a, double lo) {
  Mat v = a.value().cwiseMax(lo);
  return detail::make_op(v, {a}, [lo](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() += n.grad.cwiseProduct(
          (p.value.array() > lo).cast<double>().matrix());
  });
}

// ---- softmax / reductions ----

inline Tensor softmax_rows(const Tensor& a) {
  Mat v = a.value();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    Eigen::ArrayXd row = v.row(i).array();
    row -= row.maxCoeff();
    Eigen::ArrayXd e = row.exp();
    v.row(i) = (e / e.sum()).matrix();
  }
  return detail::make_op(v, {a}, [v](Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    Mat& g = p.ensure_grad();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double dot = n.grad.row(i).dot(v.row(i));
      g.row(i) += (v.row(i).array() * (n.grad.row(i).array() - dot)).matrix();
    }
  });
}

inline Tensor logsumexp_rows(const Tensor& a) {
  Mat v(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Eigen::ArrayXd row = a.value().row(i).array();
    double m = row.maxCoeff();
    v(i, 0) = m + std::log((row - m).exp().sum());
  }
  return detail::make_op(v, {a}, [v](Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    Mat& g = p.ensure_grad();
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      g.row(i) += n.grad(i, 0) *
                  (p.value.row(i).array() - v(i, 0)).exp().matrix();
  });
}

inline Tensor sum_all(const Tensor& a) {
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  return detail::make_op(v, {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad().array() += n.grad(0, 0);
  });
}

inline Tensor mean_all(const Tensor& a) {
  return smul(sum_all(a), 1.0 / static_cast<double>(a.rows() * a.cols()));
}

// Sum across each row -> column vector (n x 1).
inline Tensor row_sums(const Tensor& a) {
  Mat v = a.value().rowwise().sum();
  return detail::make_op(v, {a}, [](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad)
      p.ensure_grad() += n.grad * Mat::Ones(1, p.value.cols());
  });
}

// ---- slicing / gathering ----

inline Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index len) {
  require(start >= 0 && start + len <= a.cols(), "slice_cols: out of range");
  Mat v = a.value().middleCols(start, len);
  return detail::make_op(v, {a}, [start, len](Node& n) {
    auto& p = *n.parents[0];
    if (p.requires_grad) p.ensure_grad().middleCols(start, len) += n.grad;
  });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "concat_cols: row count differs");
  Mat v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  Eigen::Index ca = a.cols();
  return detail::make_op(v, {a, b}, [ca](Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) pa.ensure_grad() += n.grad.leftCols(ca);
    if (pb.requires_grad)
      pb.ensure_grad() += n.grad.rightCols(n.grad.cols() - ca);
  });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_rows: empty input");
  Eigen::Index cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: column count differs");
    rows += p.rows();
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return detail::make_op(v, parts, [](Node& n) {
    Eigen::Index at = 0;
    for (auto& p : n.parents) {
      if (p->requires_grad)
        p->ensure_grad() += n.grad.middleRows(at, p->value.rows());
      at += p->value.rows();
    }
  });
}

inline Tensor gather_rows(const Tensor& a, std::vector<int> rows) {
  Mat v(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < a.rows(), "gather_rows: out of range");
    v.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return detail::make_op(v, {a}, [rows](Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    Mat& g = p.ensure_grad();
    for (size_t i = 0; i < rows.size(); ++i)
      g.row(rows[i]) += n.grad.row(static_cast<Eigen::Index>(i));
  });
}

// General gather: out(i, j) = a(row_idx(i, j), col_idx(i, j)), or zero where
// row_idx is negative (padding). Backbone im2col is expressed with this.
inline Tensor gather_cells(const Tensor& a, const Eigen::MatrixXi& row_idx,
                           const Eigen::MatrixXi& col_idx) {
  require(row_idx.rows() == col_idx.rows() && row_idx.cols() == col_idx.cols(),
          "gather_cells: index shape mismatch");
  Mat v = Mat::Zero(row_idx.rows(), row_idx.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      if (row_idx(i, j) >= 0) v(i, j) = a.value()(row_idx(i, j), col_idx(i, j));
  return detail::make_op(v, {a}, [row_idx, col_idx](Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    Mat& g = p.ensure_grad();
    for (Eigen::Index i = 0; i < n.grad.rows(); ++i)
      for (Eigen::Index j = 0; j < n.grad.cols(); ++j)
        if (row_idx(i, j) >= 0)
          g(row_idx(i, j), col_idx(i, j)) += n.grad(i, j);
  });
}

// Per-row layer normalization with learned scale and shift (1 x C each).
inline Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma,
                              const Tensor& beta, double eps = 1e-5) {
  require(gamma.rows() == 1 && gamma.cols() == x.cols(), "layer_norm: gamma shape");
  require(beta.rows() == 1 && beta.cols() == x.cols(), "layer_norm: beta shape");
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Mat xhat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::ArrayXd row = x.value().row(i).array();
    double mu = row.mean();
    double var = (row - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((row - mu) * is).matrix();
  }
  Mat v = xhat;
  for (Eigen::Index i = 0; i < rows; ++i)
    v.row(i) = (xhat.row(i).array() * gamma.value().row(0).array() +
                beta.value().row(0).array())
                   .matrix();
  return detail::make_op(v, {x, gamma, beta}, [xhat, inv_std](Node& n) {
    auto& px = *n.parents[0];
    auto& pg = *n.parents[1];
    auto& pb = *n.parents[2];
    const Eigen::Index cols = xhat.cols();
    if (pg.requires_grad)
      pg.ensure_grad() += n.grad.cwiseProduct(xhat).colwise().sum();
    if (pb.requires_grad) pb.ensure_grad() += n.grad.colwise().sum();
    if (px.requires_grad) {
      Mat& g = px.ensure_grad();
      for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        Eigen::ArrayXd gy =
            n.grad.row(i).array() * pg.value.row(0).array();  // d/d xhat
        double mean_gy = gy.mean();
        double mean_gy_xhat = (gy * xhat.row(i).array()).mean();
        g.row(i) += (inv_std(i) *
                     (gy - mean_gy - xhat.row(i).array() * mean_gy_xhat))
                        .matrix();
        (void)cols;
      }
    }
  });
}

// ---- backward ----

inline void backward(const Tensor& root) {
  require(root.defined() && root.rows() == 1 && root.cols() == 1,
          "backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative DFS for reverse topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, child] = stack.back();
    if (child < node->parents.size()) {
      Node* next = node->parents[child].get();
      ++child;
      if (next->requires_grad && !visited.count(next)) {
        visited.insert(next);
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->has_grad) n->backprop(*n);
  }
}

}  // namespace oed::ag
