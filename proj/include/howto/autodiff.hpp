// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace howto::nn {

/// Dense row-major matrix of doubles. Small and deliberately boring; the
/// group sizes here are tens of rows, not thousands.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const {
    return rows == o.rows && cols == o.cols;
  }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat filled(int r, int c, double v);
  static Mat column(const std::vector<double>& v);
  static Mat row(const std::vector<double>& v);
};

Mat matmul(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b

/// Reverse-mode tape over matrices. Build the expression, call backward()
/// on a scalar node, read gradients off the leaves. Nodes are append-only;
/// a Graph instance is built per evaluation and thrown away.
class Graph {
 public:
  using Id = int;

  Graph() = default;
  // Backward closures capture this; the graph must stay put.
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = delete;
  Graph& operator=(Graph&&) = delete;

  Id leaf(Mat value, bool needs_grad = true);

  const Mat& value(Id id) const { return nodes_[id].value; }
  const Mat& grad(Id id) const { return nodes_[id].grad; }

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id div(Id a, Id b);  // elementwise
  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id scale(Id a, double s);
  Id add_const(Id a, Mat c);
  Id mul_const(Id a, Mat c);
  Id add_rowvec(Id a, Id rowvec);   // broadcast 1xC over rows
  Id div_colvec(Id a, Id colvec);   // divide row i by colvec[i]
  Id div_rowvec(Id a, Id rowvec);   // divide column j by rowvec[j]
  Id relu(Id a);
  Id abs(Id a);
  Id softplus(Id a);  // log(1 + e^x), stable
  Id clamp_min(Id a, double lo);
  Id row_sum(Id a);  // RxC -> Rx1
  Id col_sum(Id a);  // RxC -> 1xC
  Id row_softmax(Id a);
  Id layer_norm(Id a, Id gamma, Id beta, double eps = 1e-5);
  Id col_slice(Id a, int begin, int count);
  Id concat_cols(const std::vector<Id>& parts);
  Id sum_all(Id a);  // -> 1x1

  /// Seeds d(output)=1 and propagates in reverse topological (creation)
  /// order. output must be 1x1.
  void backward(Id output);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> back;  // empty for leaves
  };

  Id push(Mat value, bool needs_grad, std::function<void()> back);
  void check(Id id) const;

  std::vector<Node> nodes_;
};

}  // namespace howto::nn
