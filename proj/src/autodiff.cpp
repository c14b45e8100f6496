// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "howto/util.hpp"

namespace howto::nn {

Mat Mat::filled(int r, int c, double v) {
  Mat m(r, c);
  std::fill(m.data.begin(), m.data.end(), v);
  return m;
}

Mat Mat::column(const std::vector<double>& v) {
  Mat m(static_cast<int>(v.size()), 1);
  m.data = v;
  return m;
}

Mat Mat::row(const std::vector<double>& v) {
  Mat m(1, static_cast<int>(v.size()));
  m.data = v;
  return m;
}

// i-k-j loop order keeps the inner loop contiguous in both b and out.
Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw Error("matmul: inner dimensions differ");
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
    double* orow = &out.data[static_cast<size_t>(i) * out.cols];
    for (int k = 0; k < a.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols != b.cols) throw Error("matmul_nt: inner dimensions differ");
  Mat out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[static_cast<size_t>(j) * b.cols];
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      out.at(i, j) = acc;
    }
  }
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows != b.rows) throw Error("matmul_tn: inner dimensions differ");
  Mat out(a.cols, b.cols);
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[static_cast<size_t>(k) * a.cols];
    const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
    for (int i = 0; i < a.cols; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* orow = &out.data[static_cast<size_t>(i) * out.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Graph::Id Graph::push(Mat value, bool needs_grad, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

void Graph::check(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw Error("autodiff: node id out of range");
}

Graph::Id Graph::leaf(Mat value, bool needs_grad) {
  return push(std::move(value), needs_grad, {});
}

Graph::Id Graph::add(Id a, Id b) {
  check(a); check(b);
  if (!nodes_[a].value.same_shape(nodes_[b].value))
    throw Error("add: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += nodes_[b].value.data[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, b, id]() {
    const Mat& g = nodes_[id].grad;
    if (nodes_[a].needs_grad)
      for (size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += g.data[i];
    if (nodes_[b].needs_grad)
      for (size_t i = 0; i < g.size(); ++i) nodes_[b].grad.data[i] += g.data[i];
  };
  return id;
}

Graph::Id Graph::sub(Id a, Id b) {
  check(a); check(b);
  if (!nodes_[a].value.same_shape(nodes_[b].value))
    throw Error("sub: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] -= nodes_[b].value.data[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, b, id]() {
    const Mat& g = nodes_[id].grad;
    if (nodes_[a].needs_grad)
      for (size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += g.data[i];
    if (nodes_[b].needs_grad)
      for (size_t i = 0; i < g.size(); ++i) nodes_[b].grad.data[i] -= g.data[i];
  };
  return id;
}

Graph::Id Graph::mul(Id a, Id b) {
  check(a); check(b);
  if (!nodes_[a].value.same_shape(nodes_[b].value))
    throw Error("mul: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= nodes_[b].value.data[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, b, id]() {
    const Mat& g = nodes_[id].grad;
    if (nodes_[a].needs_grad)
      for (size_t i = 0; i < g.size(); ++i)
        nodes_[a].grad.data[i] += g.data[i] * nodes_[b].value.data[i];
    if (nodes_[b].needs_grad)
      for (size_t i = 0; i < g.size(); ++i)
        nodes_[b].grad.data[i] += g.data[i] * nodes_[a].value.data[i];
  };
  return id;
}

Graph::Id Graph::div(Id a, Id b) {
  check(a); check(b);
  if (!nodes_[a].value.same_shape(nodes_[b].value))
    throw Error("div: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] /= nodes_[b].value.data[i];
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, b, id]() {
    const Mat& g = nodes_[id].grad;
    const Mat& bv = nodes_[b].value;
    if (nodes_[a].needs_grad)
      for (size_t i = 0; i < g.size(); ++i)
        nodes_[a].grad.data[i] += g.data[i] / bv.data[i];
    if (nodes_[b].needs_grad) {
      const Mat& cv = nodes_[id].value;
      for (size_t i = 0; i < g.size(); ++i)
        nodes_[b].grad.data[i] -= g.data[i] * cv.data[i] / bv.data[i];
    }
  };
  return id;
}

Graph::Id Graph::matmul(Id a, Id b) {
  check(a); check(b);
  Mat out = nn::matmul(nodes_[a].value, nodes_[b].value);
  bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, b, id]() {
    const Mat& g = nodes_[id].grad;
    if (nodes_[a].needs_grad) {
      Mat da = matmul_nt(g, nodes_[b].value);
      for (size_t i = 0; i < da.size(); ++i)
        nodes_[a].grad.data[i] += da.data[i];
    }
    if (nodes_[b].needs_grad) {
      Mat db = matmul_tn(nodes_[a].value, g);
      for (size_t i = 0; i < db.size(); ++i)
        nodes_[b].grad.data[i] += db.data[i];
    }
  };
  return id;
}

Graph::Id Graph::transpose(Id a) {
  check(a);
  const Mat& av = nodes_[a].value;
  Mat out(av.cols, av.rows);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(j, i) = av.at(i, j);
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) nodes_[a].grad.at(j, i) += g.at(i, j);
  };
  return id;
}

Graph::Id Graph::scale(Id a, double s) {
  check(a);
  Mat out = nodes_[a].value;
  for (double& v : out.data) v *= s;
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id, s]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    for (size_t i = 0; i < g.size(); ++i)
      nodes_[a].grad.data[i] += s * g.data[i];
  };
  return id;
}

Graph::Id Graph::add_const(Id a, Mat c) {
  check(a);
  if (!nodes_[a].value.same_shape(c)) throw Error("add_const: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += c.data[i];
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    for (size_t i = 0; i < g.size(); ++i) nodes_[a].grad.data[i] += g.data[i];
  };
  return id;
}

Graph::Id Graph::mul_const(Id a, Mat c) {
  check(a);
  if (!nodes_[a].value.same_shape(c)) throw Error("mul_const: shape mismatch");
  Mat out = nodes_[a].value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= c.data[i];
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id, c = std::move(c)]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    for (size_t i = 0; i < g.size(); ++i)
      nodes_[a].grad.data[i] += g.data[i] * c.data[i];
  };
  return id;
}

Graph::Id Graph::add_rowvec(Id a, Id rowvec) {
  check(a); check(rowvec);
  const Mat& av = nodes_[a].value;
  const Mat& rv = nodes_[rowvec].value;
  if (rv.rows != 1 || rv.cols != av.cols)
    throw Error("add_rowvec: vector shape mismatch");
  Mat out = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(i, j) += rv.at(0, j);
  bool ng = nodes_[a].needs_grad || nodes_[rowvec].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, rowvec, id]() {
    const Mat& g = nodes_[id].grad;
    if (nodes_[a].needs_grad)
      for (size_t i = 0; i < g.size(); ++i)
        nodes_[a].grad.data[i] += g.data[i];
    if (nodes_[rowvec].needs_grad)
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j)
          nodes_[rowvec].grad.at(0, j) += g.at(i, j);
  };
  return id;
}

Graph::Id Graph::div_colvec(Id a, Id colvec) {
  check(a); check(colvec);
  const Mat& av = nodes_[a].value;
  const Mat& cv = nodes_[colvec].value;
  if (cv.cols != 1 || cv.rows != av.rows)
    throw Error("div_colvec: vector shape mismatch");
  Mat out = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(i, j) /= cv.at(i, 0);
  bool ng = nodes_[a].needs_grad || nodes_[colvec].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, colvec, id]() {
    const Mat& g = nodes_[id].grad;
    const Mat& av2 = nodes_[a].value;
    const Mat& cv2 = nodes_[colvec].value;
    if (nodes_[a].needs_grad)
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j)
          nodes_[a].grad.at(i, j) += g.at(i, j) / cv2.at(i, 0);
    if (nodes_[colvec].needs_grad)
      for (int i = 0; i < g.rows; ++i) {
        double acc = 0.0;
        double denom = cv2.at(i, 0);
        for (int j = 0; j < g.cols; ++j)
          acc += g.at(i, j) * av2.at(i, j);
        nodes_[colvec].grad.at(i, 0) -= acc / (denom * denom);
      }
  };
  return id;
}

Graph::Id Graph::div_rowvec(Id a, Id rowvec) {
  check(a); check(rowvec);
  const Mat& av = nodes_[a].value;
  const Mat& rv = nodes_[rowvec].value;
  if (rv.rows != 1 || rv.cols != av.cols)
    throw Error("div_rowvec: vector shape mismatch");
  Mat out = av;
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(i, j) /= rv.at(0, j);
  bool ng = nodes_[a].needs_grad || nodes_[rowvec].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, rowvec, id]() {
    const Mat& g = nodes_[id].grad;
    const Mat& av2 = nodes_[a].value;
    const Mat& rv2 = nodes_[rowvec].value;
    if (nodes_[a].needs_grad)
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j)
          nodes_[a].grad.at(i, j) += g.at(i, j) / rv2.at(0, j);
    if (nodes_[rowvec].needs_grad)
      for (int j = 0; j < g.cols; ++j) {
        double acc = 0.0;
        double denom = rv2.at(0, j);
        for (int i = 0; i < g.rows; ++i)
          acc += g.at(i, j) * av2.at(i, j);
        nodes_[rowvec].grad.at(0, j) -= acc / (denom * denom);
      }
  };
  return id;
}

Graph::Id Graph::relu(Id a) {
  check(a);
  Mat out = nodes_[a].value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    const Mat& av = nodes_[a].value;
    for (size_t i = 0; i < g.size(); ++i)
      if (av.data[i] > 0.0) nodes_[a].grad.data[i] += g.data[i];
  };
  return id;
}

Graph::Id Graph::abs(Id a) {
  check(a);
  Mat out = nodes_[a].value;
  for (double& v : out.data) v = std::fabs(v);
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    const Mat& av = nodes_[a].value;
    for (size_t i = 0; i < g.size(); ++i) {
      double s = av.data[i] > 0.0 ? 1.0 : (av.data[i] < 0.0 ? -1.0 : 0.0);
      nodes_[a].grad.data[i] += g.data[i] * s;
    }
  };
  return id;
}

Graph::Id Graph::softplus(Id a) {
  check(a);
  Mat out = nodes_[a].value;
  for (double& v : out.data)
    v = std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    const Mat& av = nodes_[a].value;
    for (size_t i = 0; i < g.size(); ++i) {
      double sig = 1.0 / (1.0 + std::exp(-av.data[i]));
      nodes_[a].grad.data[i] += g.data[i] * sig;
    }
  };
  return id;
}

Graph::Id Graph::clamp_min(Id a, double lo) {
  check(a);
  Mat out = nodes_[a].value;
  for (double& v : out.data) v = std::max(v, lo);
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id, lo]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    const Mat& av = nodes_[a].value;
    for (size_t i = 0; i < g.size(); ++i)
      if (av.data[i] > lo) nodes_[a].grad.data[i] += g.data[i];
  };
  return id;
}

Graph::Id Graph::row_sum(Id a) {
  check(a);
  const Mat& av = nodes_[a].value;
  Mat out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < av.cols; ++j) acc += av.at(i, j);
    out.at(i, 0) = acc;
  }
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    Mat& ag = nodes_[a].grad;
    for (int i = 0; i < ag.rows; ++i)
      for (int j = 0; j < ag.cols; ++j) ag.at(i, j) += g.at(i, 0);
  };
  return id;
}

Graph::Id Graph::col_sum(Id a) {
  check(a);
  const Mat& av = nodes_[a].value;
  Mat out(1, av.cols);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out.at(0, j) += av.at(i, j);
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    Mat& ag = nodes_[a].grad;
    for (int i = 0; i < ag.rows; ++i)
      for (int j = 0; j < ag.cols; ++j) ag.at(i, j) += g.at(0, j);
  };
  return id;
}

Graph::Id Graph::row_softmax(Id a) {
  check(a);
  const Mat& av = nodes_[a].value;
  Mat out = av;
  for (int i = 0; i < av.rows; ++i) {
    double mx = out.at(i, 0);
    for (int j = 1; j < av.cols; ++j) mx = std::max(mx, out.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < av.cols; ++j) {
      double e = std::exp(out.at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < av.cols; ++j) out.at(i, j) /= denom;
  }
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    const Mat& y = nodes_[id].value;
    Mat& ag = nodes_[a].grad;
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols; ++j)
        ag.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  };
  return id;
}

Graph::Id Graph::layer_norm(Id a, Id gamma, Id beta, double eps) {
  check(a); check(gamma); check(beta);
  const Mat& av = nodes_[a].value;
  const Mat& gv = nodes_[gamma].value;
  const Mat& bv = nodes_[beta].value;
  if (gv.rows != 1 || gv.cols != av.cols || bv.rows != 1 || bv.cols != av.cols)
    throw Error("layer_norm: gamma/beta must be 1 x cols");

  // Keep normalized activations and the inverse stddev for the backward.
  auto xhat = std::make_shared<Mat>(av.rows, av.cols);
  auto inv_std = std::make_shared<std::vector<double>>(av.rows, 0.0);
  Mat out(av.rows, av.cols);
  for (int i = 0; i < av.rows; ++i) {
    double mean = 0.0;
    for (int j = 0; j < av.cols; ++j) mean += av.at(i, j);
    mean /= av.cols;
    double var = 0.0;
    for (int j = 0; j < av.cols; ++j) {
      double d = av.at(i, j) - mean;
      var += d * d;
    }
    var /= av.cols;
    double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (int j = 0; j < av.cols; ++j) {
      double xh = (av.at(i, j) - mean) * is;
      xhat->at(i, j) = xh;
      out.at(i, j) = gv.at(0, j) * xh + bv.at(0, j);
    }
  }
  bool ng = nodes_[a].needs_grad || nodes_[gamma].needs_grad ||
            nodes_[beta].needs_grad;
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, a, gamma, beta, id, xhat, inv_std]() {
    const Mat& g = nodes_[id].grad;
    const Mat& gv2 = nodes_[gamma].value;
    int rows = g.rows, cols = g.cols;
    if (nodes_[beta].needs_grad)
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          nodes_[beta].grad.at(0, j) += g.at(i, j);
    if (nodes_[gamma].needs_grad)
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          nodes_[gamma].grad.at(0, j) += g.at(i, j) * xhat->at(i, j);
    if (nodes_[a].needs_grad) {
      for (int i = 0; i < rows; ++i) {
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (int j = 0; j < cols; ++j) {
          double dxh = g.at(i, j) * gv2.at(0, j);
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xhat->at(i, j);
        }
        mean_dxh /= cols;
        mean_dxh_xh /= cols;
        for (int j = 0; j < cols; ++j) {
          double dxh = g.at(i, j) * gv2.at(0, j);
          nodes_[a].grad.at(i, j) +=
              (*inv_std)[i] * (dxh - mean_dxh - xhat->at(i, j) * mean_dxh_xh);
        }
      }
    }
  };
  return id;
}

Graph::Id Graph::col_slice(Id a, int begin, int count) {
  check(a);
  const Mat& av = nodes_[a].value;
  if (begin < 0 || begin + count > av.cols)
    throw Error("col_slice: range out of bounds");
  Mat out(av.rows, count);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < count; ++j) out.at(i, j) = av.at(i, begin + j);
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id, begin]() {
    if (!nodes_[a].needs_grad) return;
    const Mat& g = nodes_[id].grad;
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j)
        nodes_[a].grad.at(i, begin + j) += g.at(i, j);
  };
  return id;
}

Graph::Id Graph::concat_cols(const std::vector<Id>& parts) {
  if (parts.empty()) throw Error("concat_cols: empty");
  int rows = nodes_[parts.front()].value.rows;
  int cols = 0;
  bool ng = false;
  for (Id p : parts) {
    check(p);
    if (nodes_[p].value.rows != rows)
      throw Error("concat_cols: row mismatch");
    cols += nodes_[p].value.cols;
    ng = ng || nodes_[p].needs_grad;
  }
  Mat out(rows, cols);
  int offset = 0;
  for (Id p : parts) {
    const Mat& pv = nodes_[p].value;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols; ++j) out.at(i, offset + j) = pv.at(i, j);
    offset += pv.cols;
  }
  Id id = push(std::move(out), ng, {});
  nodes_[id].back = [this, parts, id]() {
    const Mat& g = nodes_[id].grad;
    int offset = 0;
    for (Id p : parts) {
      Mat& pg = nodes_[p].grad;
      if (nodes_[p].needs_grad) {
        for (int i = 0; i < pg.rows; ++i)
          for (int j = 0; j < pg.cols; ++j)
            pg.at(i, j) += g.at(i, offset + j);
      }
      offset += nodes_[p].value.cols;
    }
  };
  return id;
}

Graph::Id Graph::sum_all(Id a) {
  check(a);
  const Mat& av = nodes_[a].value;
  Mat out(1, 1);
  for (double v : av.data) out.at(0, 0) += v;
  Id id = push(std::move(out), nodes_[a].needs_grad, {});
  nodes_[id].back = [this, a, id]() {
    if (!nodes_[a].needs_grad) return;
    double g = nodes_[id].grad.at(0, 0);
    for (double& v : nodes_[a].grad.data) v += g;
  };
  return id;
}

void Graph::backward(Id output) {
  check(output);
  if (nodes_[output].value.rows != 1 || nodes_[output].value.cols != 1)
    throw Error("backward: output must be a scalar node");
  for (auto& n : nodes_) {
    n.grad = Mat(n.value.rows, n.value.cols);
  }
  nodes_[output].grad.at(0, 0) = 1.0;
  for (Id id = output; id >= 0; --id) {
    if (nodes_[id].back && nodes_[id].needs_grad) nodes_[id].back();
  }
}

}  // namespace howto::nn
