// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#include "howto/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "howto/metrics.hpp"
#include "json.hpp"

namespace howto::rerank {

using nlohmann::json;
using nn::Graph;
using nn::Mat;

namespace {

constexpr double kLn2 = 0.6931471805599453;

double gain(int y) { return std::pow(2.0, y) - 1.0; }
double discount(int position_1based) {
  return 1.0 / std::log2(static_cast<double>(position_1based) + 1.0);
}

/// maxDCG@k of the ideally sorted labels.
double max_dcg(const std::vector<int>& labels, int k) {
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end(), std::greater<int>());
  double acc = 0.0;
  int limit = std::min<int>(k, static_cast<int>(sorted.size()));
  for (int j = 1; j <= limit; ++j) acc += gain(sorted[j - 1]) * discount(j);
  return acc;
}

}  // namespace

void gate_verified(RankGroup& group) {
  for (auto& item : group.items) {
    item.verified = !item.stage_failed &&
                    item.grounding != extract::GroundingStatus::none &&
                    item.applied_actions >= 1 && item.features[4] > 0.0;
  }
}

// ---------------------------------------------------------------------------
// NeuralSort / Sinkhorn
// ---------------------------------------------------------------------------

namespace {

Graph::Id neural_sort_node(Graph& g, Graph::Id scores, double tau) {
  const Mat& s = g.value(scores);
  if (s.cols != 1 || s.rows < 1)
    throw Error("neural_sort: scores must be a non-empty column");
  int n = s.rows;
  Graph::Id ones_row = g.leaf(Mat::filled(1, n, 1.0), false);
  Graph::Id ones_col = g.leaf(Mat::filled(n, 1, 1.0), false);
  Graph::Id m1 = g.matmul(scores, ones_row);  // m1[j][k] = s_j
  Graph::Id diff = g.sub(m1, g.transpose(m1));
  Graph::Id pair_dist = g.row_sum(g.abs(diff));  // u_j = sum_k |s_j - s_k|

  std::vector<double> coeff(n);
  for (int i = 1; i <= n; ++i) coeff[i - 1] = static_cast<double>(n + 1 - 2 * i);
  Graph::Id c = g.leaf(Mat::column(coeff), false);
  Graph::Id lead = g.matmul(c, g.transpose(scores));          // c_i * s_j
  Graph::Id penalty = g.matmul(ones_col, g.transpose(pair_dist));  // u_j
  Graph::Id logits = g.scale(g.sub(lead, penalty), 1.0 / tau);
  return g.row_softmax(logits);
}

Graph::Id sinkhorn_node(Graph& g, Graph::Id p, int iters) {
  Graph::Id cur = g.clamp_min(p, 1e-30);
  for (int i = 0; i < iters; ++i) {
    cur = g.div_colvec(cur, g.row_sum(cur));
    cur = g.div_rowvec(cur, g.col_sum(cur));
  }
  return cur;
}

}  // namespace

RelaxedPermutation neural_sort(const std::vector<double>& scores, double tau) {
  if (scores.empty()) throw Error("neural_sort: empty scores");
  if (!(tau > 0.0)) throw Error("neural_sort: tau must be positive");
  for (double v : scores)
    if (!std::isfinite(v)) throw Error("neural_sort: non-finite score");
  Graph g;
  Graph::Id s = g.leaf(Mat::column(scores), false);
  Graph::Id p = neural_sort_node(g, s, tau);
  return RelaxedPermutation{g.value(p), tau};
}

SinkhornResult sinkhorn_scale(const Mat& matrix, int max_iters, double tol) {
  if (matrix.rows != matrix.cols || matrix.rows == 0)
    throw Error("sinkhorn_scale: matrix must be square and non-empty");
  Mat m = matrix;
  for (double& v : m.data) v = std::max(v, 1e-30);
  int n = m.rows;
  auto max_dev = [&]() {
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      double rs = 0.0;
      for (int j = 0; j < n; ++j) rs += m.at(i, j);
      dev = std::max(dev, std::fabs(rs - 1.0));
    }
    for (int j = 0; j < n; ++j) {
      double cs = 0.0;
      for (int i = 0; i < n; ++i) cs += m.at(i, j);
      dev = std::max(dev, std::fabs(cs - 1.0));
    }
    return dev;
  };
  SinkhornResult result;
  int it = 0;
  double dev = max_dev();
  while (it < max_iters && dev >= tol) {
    for (int i = 0; i < n; ++i) {
      double rs = 0.0;
      for (int j = 0; j < n; ++j) rs += m.at(i, j);
      for (int j = 0; j < n; ++j) m.at(i, j) /= rs;
    }
    for (int j = 0; j < n; ++j) {
      double cs = 0.0;
      for (int i = 0; i < n; ++i) cs += m.at(i, j);
      for (int i = 0; i < n; ++i) m.at(i, j) /= cs;
    }
    ++it;
    dev = max_dev();
  }
  result.matrix = std::move(m);
  result.achieved_tol = dev;
  result.iterations = it;
  return result;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Graph::Id neural_ndcg_loss_node(Graph& g, Graph::Id scores,
                                const std::vector<int>& labels, int k,
                                double tau, int sinkhorn_iters) {
  int n = static_cast<int>(labels.size());
  if (g.value(scores).rows != n)
    throw Error("neural_ndcg: scores/labels size mismatch");
  if (k < 1 || k > n) throw Error("neural_ndcg: k out of range");
  double norm = max_dcg(labels, k);
  if (norm <= 0.0) return -1;

  Graph::Id p = sinkhorn_node(g, neural_sort_node(g, scores, tau),
                              sinkhorn_iters);
  std::vector<double> gains(n), discounts(n, 0.0);
  for (int i = 0; i < n; ++i) gains[i] = gain(labels[i]);
  for (int j = 1; j <= k; ++j) discounts[j - 1] = discount(j);
  Graph::Id gv = g.leaf(Mat::column(gains), false);
  Graph::Id dv = g.leaf(Mat::column(discounts), false);
  Graph::Id per_rank = g.matmul(p, gv);                 // n x 1
  Graph::Id total = g.matmul(g.transpose(dv), per_rank);  // 1 x 1
  return g.scale(total, -1.0 / norm);
}

LossResult neural_ndcg_loss(const std::vector<double>& scores,
                            const std::vector<int>& labels, int k, double tau,
                            int sinkhorn_iters) {
  if (scores.size() != labels.size())
    throw Error("neural_ndcg: scores/labels size mismatch");
  for (double v : scores)
    if (!std::isfinite(v)) throw Error("neural_ndcg: non-finite score");
  LossResult out;
  out.grad.assign(scores.size(), 0.0);
  Graph g;
  Graph::Id s = g.leaf(Mat::column(scores), true);
  Graph::Id loss = neural_ndcg_loss_node(g, s, labels, k, tau, sinkhorn_iters);
  if (loss < 0) return out;  // all-negative group
  g.backward(loss);
  out.loss = g.value(loss).at(0, 0);
  const Mat& grad = g.grad(s);
  for (size_t i = 0; i < scores.size(); ++i) out.grad[i] = grad.at(static_cast<int>(i), 0);
  return out;
}

std::vector<int> ranks_from_scores(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] > scores[b];
  });
  std::vector<int> ranks(scores.size());
  for (size_t pos = 0; pos < order.size(); ++pos)
    ranks[order[pos]] = static_cast<int>(pos) + 1;
  return ranks;
}

namespace {

double rank_discount(int r) { return std::log2(1.0 + static_cast<double>(r)); }

/// Pairwise weight matrix; w[i][j] nonzero only when y_i > y_j. The 1/ln2
/// of the logistic term is folded in.
Mat lambda_weights(const std::vector<int>& labels, double mu,
                   const std::vector<int>& ranks) {
  int n = static_cast<int>(labels.size());
  double norm = max_dcg(labels, n);
  Mat w(n, n);
  if (norm <= 0.0) return w;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (labels[i] <= labels[j]) continue;
      double gi = gain(labels[i]) / norm;
      double gj = gain(labels[j]) / norm;
      int dr = std::abs(ranks[i] - ranks[j]);
      double position_term = std::fabs(1.0 / rank_discount(ranks[i]) -
                                       1.0 / rank_discount(ranks[j]));
      double gap_term = std::fabs(1.0 / rank_discount(dr) -
                                  1.0 / rank_discount(dr + 1));
      w.at(i, j) = std::fabs(gi - gj) * (position_term + mu * gap_term) / kLn2;
    }
  }
  return w;
}

}  // namespace

double lambda_loss_at(const std::vector<double>& scores,
                      const std::vector<int>& labels, double sigma, double mu,
                      const std::vector<int>& ranks) {
  if (scores.size() != labels.size() || ranks.size() != labels.size())
    throw Error("lambda_loss: size mismatch");
  Mat w = lambda_weights(labels, mu, ranks);
  double loss = 0.0;
  int n = static_cast<int>(scores.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (w.at(i, j) == 0.0) continue;
      double z = -sigma * (scores[i] - scores[j]);
      double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
      loss += w.at(i, j) * softplus;  // w carries the 1/ln2
    }
  }
  return loss;
}

Graph::Id lambda_loss_node(Graph& g, Graph::Id scores,
                           const std::vector<int>& labels, double sigma,
                           double mu) {
  const Mat& sv = g.value(scores);
  int n = static_cast<int>(labels.size());
  if (sv.rows != n || sv.cols != 1)
    throw Error("lambda_loss: scores must be n x 1");
  std::vector<double> score_vec(sv.data);
  Mat w = lambda_weights(labels, mu, ranks_from_scores(score_vec));
  bool any = std::any_of(w.data.begin(), w.data.end(),
                         [](double v) { return v != 0.0; });
  if (!any) return -1;
  Graph::Id ones_row = g.leaf(Mat::filled(1, n, 1.0), false);
  Graph::Id m1 = g.matmul(scores, ones_row);
  Graph::Id diff = g.sub(m1, g.transpose(m1));  // s_i - s_j at (i,j)
  Graph::Id z = g.scale(diff, -sigma);
  return g.sum_all(g.mul_const(g.softplus(z), std::move(w)));
}

LossResult lambda_loss(const std::vector<double>& scores,
                       const std::vector<int>& labels, double sigma,
                       double mu) {
  if (scores.size() != labels.size())
    throw Error("lambda_loss: scores/labels size mismatch");
  if (scores.size() < 2) throw Error("lambda_loss: need at least 2 items");
  for (double v : scores)
    if (!std::isfinite(v)) throw Error("lambda_loss: non-finite score");
  LossResult out;
  out.grad.assign(scores.size(), 0.0);
  Graph g;
  Graph::Id s = g.leaf(Mat::column(scores), true);
  Graph::Id loss = lambda_loss_node(g, s, labels, sigma, mu);
  if (loss < 0) return out;  // no ordered pairs
  g.backward(loss);
  out.loss = g.value(loss).at(0, 0);
  const Mat& grad = g.grad(s);
  for (size_t i = 0; i < scores.size(); ++i)
    out.grad[i] = grad.at(static_cast<int>(i), 0);
  return out;
}

// ---------------------------------------------------------------------------
// TMLP
// ---------------------------------------------------------------------------

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::pairwise_lr: return "pairwise_lr";
    case ModelKind::tmlp_neuralndcg: return "tmlp_neuralndcg";
    case ModelKind::tmlp_lambdaloss: return "tmlp_lambdaloss";
  }
  return "pairwise_lr";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "pairwise_lr") return ModelKind::pairwise_lr;
  if (s == "tmlp_neuralndcg") return ModelKind::tmlp_neuralndcg;
  if (s == "tmlp_lambdaloss") return ModelKind::tmlp_lambdaloss;
  throw Error("unknown model kind: " + s);
}

void ModelConfig::validate() const {
  if (embed_width <= 0 || model_width <= 0 || ff_width <= 0 || blocks < 0)
    throw Error("model config: widths must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw Error("model config: dropout must be in [0,1)");
  if (heads <= 0 || model_width % heads != 0)
    throw Error("model config: heads must divide model_width");
  if (!(lr > 0.0) || !(tau > 0.0) || !(sigma > 0.0))
    throw Error("model config: lr, tau, sigma must be positive");
  if (epochs < 1 || batch_groups < 1 || scheduler_step < 1)
    throw Error("model config: epochs, batch_groups, scheduler_step >= 1");
}

void TmlpParams::visit(
    const std::function<void(const std::string&, nn::Mat&)>& fn) {
  fn("emb1_w", emb1_w);
  fn("emb1_b", emb1_b);
  fn("emb2_w", emb2_w);
  fn("emb2_b", emb2_b);
  for (size_t b = 0; b < blocks.size(); ++b) {
    std::string p = "block" + std::to_string(b) + ".";
    auto& blk = blocks[b];
    fn(p + "wq", blk.wq); fn(p + "bq", blk.bq);
    fn(p + "wk", blk.wk); fn(p + "bk", blk.bk);
    fn(p + "wv", blk.wv); fn(p + "bv", blk.bv);
    fn(p + "wo", blk.wo); fn(p + "bo", blk.bo);
    fn(p + "ln1_g", blk.ln1_g); fn(p + "ln1_b", blk.ln1_b);
    fn(p + "ff1_w", blk.ff1_w); fn(p + "ff1_b", blk.ff1_b);
    fn(p + "ff2_w", blk.ff2_w); fn(p + "ff2_b", blk.ff2_b);
    fn(p + "ln2_g", blk.ln2_g); fn(p + "ln2_b", blk.ln2_b);
  }
  fn("out_w", out_w);
  fn("out_b", out_b);
}

void TmlpParams::visit(
    const std::function<void(const std::string&, const nn::Mat&)>& fn) const {
  const_cast<TmlpParams*>(this)->visit(
      [&](const std::string& name, nn::Mat& m) { fn(name, m); });
}

namespace {

Mat init_weight(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data) v = rng.range(-bound, bound);
  return m;
}

}  // namespace

TmlpParams tmlp_init(const ModelConfig& config, Rng rng) {
  config.validate();
  int e = config.embed_width, d = config.model_width, f = config.ff_width;
  TmlpParams p;
  p.emb1_w = init_weight(features::kFeatureCount, e, rng);
  p.emb1_b = Mat(1, e);
  p.emb2_w = init_weight(e, d, rng);
  p.emb2_b = Mat(1, d);
  for (int b = 0; b < config.blocks; ++b) {
    TmlpBlockParams blk;
    blk.wq = init_weight(d, d, rng); blk.bq = Mat(1, d);
    blk.wk = init_weight(d, d, rng); blk.bk = Mat(1, d);
    blk.wv = init_weight(d, d, rng); blk.bv = Mat(1, d);
    blk.wo = init_weight(d, d, rng); blk.bo = Mat(1, d);
    blk.ln1_g = Mat::filled(1, d, 1.0); blk.ln1_b = Mat(1, d);
    blk.ff1_w = init_weight(d, f, rng); blk.ff1_b = Mat(1, f);
    blk.ff2_w = init_weight(f, d, rng); blk.ff2_b = Mat(1, d);
    blk.ln2_g = Mat::filled(1, d, 1.0); blk.ln2_b = Mat(1, d);
    p.blocks.push_back(std::move(blk));
  }
  p.out_w = init_weight(d, 1, rng);
  p.out_b = Mat(1, 1);
  return p;
}

namespace {

Mat dropout_mask(int rows, int cols, double p, Rng& rng) {
  Mat m(rows, cols);
  double keep_scale = 1.0 / (1.0 - p);
  for (double& v : m.data) v = rng.uniform() < p ? 0.0 : keep_scale;
  return m;
}

}  // namespace

Graph::Id build_tmlp(Graph& g, Graph::Id features, const TmlpParams& params,
                     const ModelConfig& config, bool train_mode, int n_real,
                     Rng dropout_rng, std::vector<Graph::Id>* param_ids) {
  const Mat& x = g.value(features);
  if (x.cols != features::kFeatureCount)
    throw Error("tmlp: feature matrix must have 18 columns");
  int n = x.rows;
  if (n_real < 0) n_real = n;
  if (n_real < 1 || n_real > n) throw Error("tmlp: bad n_real");
  int d = config.model_width;
  int head_dim = d / config.heads;

  // Parameters become graph leaves in visit order.
  std::vector<Graph::Id> ids;
  const_cast<TmlpParams&>(params).visit(
      [&](const std::string&, Mat& m) { ids.push_back(g.leaf(m, true)); });
  if (param_ids) *param_ids = ids;
  size_t next = 0;
  auto take = [&]() { return ids[next++]; };

  Graph::Id emb1_w = take(), emb1_b = take(), emb2_w = take(), emb2_b = take();
  Graph::Id h = g.add_rowvec(g.matmul(features, emb1_w), emb1_b);
  h = g.add_rowvec(g.matmul(h, emb2_w), emb2_b);

  // Padding keys must not receive attention.
  Mat attn_mask(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = n_real; j < n; ++j) attn_mask.at(i, j) = -1e30;
  bool padded = n_real < n;

  for (int b = 0; b < config.blocks; ++b) {
    Graph::Id wq = take(), bq = take(), wk = take(), bk = take();
    Graph::Id wv = take(), bv = take(), wo = take(), bo = take();
    Graph::Id ln1_g = take(), ln1_b = take();
    Graph::Id ff1_w = take(), ff1_b = take(), ff2_w = take(), ff2_b = take();
    Graph::Id ln2_g = take(), ln2_b = take();

    Graph::Id q = g.add_rowvec(g.matmul(h, wq), bq);
    Graph::Id k = g.add_rowvec(g.matmul(h, wk), bk);
    Graph::Id v = g.add_rowvec(g.matmul(h, wv), bv);

    std::vector<Graph::Id> heads;
    for (int head = 0; head < config.heads; ++head) {
      int off = head * head_dim;
      Graph::Id qh = g.col_slice(q, off, head_dim);
      Graph::Id kh = g.col_slice(k, off, head_dim);
      Graph::Id vh = g.col_slice(v, off, head_dim);
      Graph::Id logits =
          g.scale(g.matmul(qh, g.transpose(kh)),
                  1.0 / std::sqrt(static_cast<double>(head_dim)));
      if (padded) logits = g.add_const(logits, attn_mask);
      Graph::Id attn = g.row_softmax(logits);
      heads.push_back(g.matmul(attn, vh));
    }
    Graph::Id attended = g.add_rowvec(g.matmul(g.concat_cols(heads), wo), bo);
    if (train_mode && config.dropout > 0.0)
      attended = g.mul_const(attended,
                             dropout_mask(n, d, config.dropout, dropout_rng));
    h = g.layer_norm(g.add(h, attended), ln1_g, ln1_b);

    Graph::Id ff = g.relu(g.add_rowvec(g.matmul(h, ff1_w), ff1_b));
    ff = g.add_rowvec(g.matmul(ff, ff2_w), ff2_b);
    if (train_mode && config.dropout > 0.0)
      ff = g.mul_const(ff, dropout_mask(n, d, config.dropout, dropout_rng));
    h = g.layer_norm(g.add(h, ff), ln2_g, ln2_b);
  }

  Graph::Id out_w = take(), out_b = take();
  return g.add_rowvec(g.matmul(h, out_w), out_b);  // n x 1
}

std::vector<double> tmlp_forward(const Mat& features, const TmlpParams& params,
                                 const ModelConfig& config, bool train_mode,
                                 int n_real, Rng dropout_rng) {
  Graph g;
  Graph::Id x = g.leaf(features, false);
  Graph::Id scores =
      build_tmlp(g, x, params, config, train_mode, n_real, dropout_rng);
  const Mat& sv = g.value(scores);
  int count = n_real < 0 ? sv.rows : n_real;
  std::vector<double> out(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = sv.at(i, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Scoring / reranking
// ---------------------------------------------------------------------------

namespace {

Mat features_of(const std::vector<const RankItem*>& items) {
  Mat x(static_cast<int>(items.size()), features::kFeatureCount);
  for (size_t i = 0; i < items.size(); ++i)
    for (int j = 0; j < features::kFeatureCount; ++j)
      x.at(static_cast<int>(i), j) = items[i]->features.f[j];
  return x;
}

}  // namespace

std::vector<double> TrainedModel::score(
    const std::vector<const RankItem*>& items) const {
  if (items.empty()) return {};
  if (kind == ModelKind::pairwise_lr) {
    if (lr_weights.size() != features::kFeatureCount)
      throw Error("pairwise_lr model has no trained weights");
    std::vector<double> out;
    out.reserve(items.size());
    for (const RankItem* item : items) {
      double s = lr_bias;
      for (int j = 0; j < features::kFeatureCount; ++j)
        s += lr_weights[j] * item->features.f[j];
      out.push_back(s);
    }
    return out;
  }
  return tmlp_forward(features_of(items), tmlp, config, false);
}

std::vector<std::string> rerank_group(const RankGroup& group,
                                      const TrainedModel& model) {
  std::vector<const RankItem*> verified, rest;
  for (const auto& item : group.items)
    (item.verified ? verified : rest).push_back(&item);

  std::vector<double> scores = model.score(verified);
  std::vector<size_t> vorder(verified.size());
  std::iota(vorder.begin(), vorder.end(), 0);
  std::sort(vorder.begin(), vorder.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return verified[a]->original_rank < verified[b]->original_rank;
  });
  std::sort(rest.begin(), rest.end(), [](const RankItem* a, const RankItem* b) {
    return a->original_rank < b->original_rank;
  });

  std::vector<std::string> out;
  out.reserve(group.items.size());
  for (size_t i : vorder) out.push_back(verified[i]->page_id);
  for (const RankItem* item : rest) out.push_back(item->page_id);
  return out;
}

namespace {

std::vector<int> ordered_labels(const RankGroup& group,
                                const std::vector<std::string>& ordering) {
  std::vector<int> labels;
  labels.reserve(ordering.size());
  for (const auto& pid : ordering) {
    for (const auto& item : group.items) {
      if (item.page_id == pid) {
        labels.push_back(item.label.value_or(0));
        break;
      }
    }
  }
  return labels;
}

}  // namespace

double validation_ndcg5(const std::vector<RankGroup>& groups,
                        const TrainedModel& model) {
  if (groups.empty()) return 0.0;
  double acc = 0.0;
  size_t counted = 0;
  for (const auto& group : groups) {
    auto ordering = rerank_group(group, model);
    acc += eval::ndcg_at_k(ordered_labels(group, ordering), 5);
    ++counted;
  }
  return counted == 0 ? 0.0 : acc / static_cast<double>(counted);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct LabeledGroup {
  Mat features;              // n_verified x 18
  std::vector<int> labels;   // n_verified
};

/// Verified, labeled items only; the models never score anything else.
std::vector<LabeledGroup> training_view(const std::vector<RankGroup>& groups) {
  std::vector<LabeledGroup> out;
  for (const auto& group : groups) {
    std::vector<const RankItem*> items;
    std::vector<int> labels;
    for (const auto& item : group.items) {
      if (!item.verified || !item.label) continue;
      items.push_back(&item);
      labels.push_back(*item.label);
    }
    if (items.empty()) continue;
    out.push_back(LabeledGroup{features_of(items), std::move(labels)});
  }
  return out;
}

}  // namespace

TrainedModel train_pairwise_lr(const std::vector<RankGroup>& train,
                               const std::vector<RankGroup>& val,
                               const ModelConfig& config) {
  config.validate();
  auto groups = training_view(train);

  struct Pair {
    const LabeledGroup* group;
    int pos, neg;
  };
  std::vector<Pair> pairs;
  for (const auto& g : groups) {
    for (size_t i = 0; i < g.labels.size(); ++i)
      for (size_t j = 0; j < g.labels.size(); ++j)
        if (g.labels[i] > g.labels[j])
          pairs.push_back({&g, static_cast<int>(i), static_cast<int>(j)});
  }
  if (pairs.empty()) throw Error("train_pairwise_lr: no labeled pairs");

  TrainedModel model;
  model.kind = ModelKind::pairwise_lr;
  model.config = config;
  model.config.model_kind = ModelKind::pairwise_lr;
  model.lr_weights.assign(features::kFeatureCount, 0.0);
  model.lr_bias = 0.0;

  Rng rng(config.seed);
  double best_val = validation_ndcg5(val, model);
  std::vector<double> best_weights = model.lr_weights;
  model.history.push_back({0, std::nullopt, best_val});

  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng erng = rng.fork(static_cast<uint64_t>(epoch));
    erng.shuffle(order);
    double loss_acc = 0.0;
    for (size_t oi : order) {
      const Pair& p = pairs[oi];
      double z = 0.0;
      for (int f = 0; f < features::kFeatureCount; ++f)
        z += model.lr_weights[f] *
             (p.group->features.at(p.pos, f) - p.group->features.at(p.neg, f));
      // loss = softplus(-z); d/dw = -sigmoid(-z) * (f_pos - f_neg)
      loss_acc += std::max(-z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
      double coef = config.lr / (1.0 + std::exp(z));
      for (int f = 0; f < features::kFeatureCount; ++f)
        model.lr_weights[f] += coef * (p.group->features.at(p.pos, f) -
                                       p.group->features.at(p.neg, f));
    }
    double v = validation_ndcg5(val, model);
    model.history.push_back(
        {epoch, loss_acc / static_cast<double>(pairs.size()), v});
    // Ties go to the later epoch: equal validation, lower pairwise loss.
    if (v >= best_val) {
      best_val = v;
      best_weights = model.lr_weights;
    }
  }
  model.lr_weights = best_weights;
  return model;
}

namespace {

struct AdamState {
  std::vector<Mat> m, v;
  int t = 0;
};

}  // namespace

TrainedModel train_tmlp(const std::vector<RankGroup>& train,
                        const std::vector<RankGroup>& val,
                        const ModelConfig& config, TmlpLoss loss_kind) {
  config.validate();
  auto groups = training_view(train);
  if (groups.empty()) throw Error("train_tmlp: empty training set");

  TrainedModel model;
  model.kind = loss_kind == TmlpLoss::neuralndcg ? ModelKind::tmlp_neuralndcg
                                                 : ModelKind::tmlp_lambdaloss;
  model.config = config;
  model.config.model_kind = model.kind;

  Rng rng(config.seed);
  model.tmlp = tmlp_init(config, rng.fork("init"));

  AdamState adam;
  model.tmlp.visit([&](const std::string&, Mat& m) {
    adam.m.emplace_back(m.rows, m.cols);
    adam.v.emplace_back(m.rows, m.cols);
  });

  double best_val = validation_ndcg5(val, model);
  TmlpParams best_params = model.tmlp;
  model.history.push_back({0, std::nullopt, best_val});
  int epochs_since_improve = 0;

  std::vector<size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double lr_epoch =
        config.lr *
        std::pow(config.scheduler_gamma, (epoch - 1) / config.scheduler_step);
    Rng erng = rng.fork(static_cast<uint64_t>(epoch));
    erng.shuffle(order);

    double loss_acc = 0.0;
    size_t loss_groups = 0;
    for (size_t batch_start = 0; batch_start < order.size();
         batch_start += static_cast<size_t>(config.batch_groups)) {
      size_t batch_end = std::min(
          order.size(), batch_start + static_cast<size_t>(config.batch_groups));

      std::vector<Mat> grad_acc;
      model.tmlp.visit([&](const std::string&, Mat& m) {
        grad_acc.emplace_back(m.rows, m.cols);
      });
      size_t used = 0;

      for (size_t oi = batch_start; oi < batch_end; ++oi) {
        const LabeledGroup& lg = groups[order[oi]];
        int n = lg.features.rows;
        Rng drop = Rng(config.seed)
                       .fork("dropout")
                       .fork(static_cast<uint64_t>(epoch))
                       .fork(order[oi]);
        Graph g;
        Graph::Id x = g.leaf(lg.features, false);
        std::vector<Graph::Id> param_ids;
        Graph::Id scores =
            build_tmlp(g, x, model.tmlp, config, true, n, drop, &param_ids);
        Graph::Id loss = -1;
        if (loss_kind == TmlpLoss::neuralndcg) {
          loss = neural_ndcg_loss_node(g, scores, lg.labels,
                                       std::min(5, n), config.tau);
        } else {
          loss = lambda_loss_node(g, scores, lg.labels, config.sigma,
                                  config.mu);
        }
        if (loss < 0) continue;  // degenerate group, no learning signal
        g.backward(loss);
        loss_acc += g.value(loss).at(0, 0);
        ++loss_groups;
        for (size_t p = 0; p < param_ids.size(); ++p) {
          const Mat& pg = g.grad(param_ids[p]);
          for (size_t e = 0; e < pg.size(); ++e)
            grad_acc[p].data[e] += pg.data[e];
        }
        ++used;
      }
      if (used == 0) continue;

      ++adam.t;
      double bc1 = 1.0 - std::pow(beta1, adam.t);
      double bc2 = 1.0 - std::pow(beta2, adam.t);
      size_t p = 0;
      model.tmlp.visit([&](const std::string&, Mat& param) {
        Mat& m = adam.m[p];
        Mat& v = adam.v[p];
        const double inv_used = 1.0 / static_cast<double>(used);
        for (size_t e = 0; e < param.size(); ++e) {
          double grad = grad_acc[p].data[e] * inv_used;
          m.data[e] = beta1 * m.data[e] + (1.0 - beta1) * grad;
          v.data[e] = beta2 * v.data[e] + (1.0 - beta2) * grad * grad;
          double mhat = m.data[e] / bc1;
          double vhat = v.data[e] / bc2;
          param.data[e] -= lr_epoch * mhat / (std::sqrt(vhat) + eps);
        }
        ++p;
      });
    }

    double v = validation_ndcg5(val, model);
    model.history.push_back(
        {epoch,
         loss_groups == 0
             ? std::optional<double>{}
             : std::optional<double>{loss_acc / static_cast<double>(loss_groups)},
         v});
    if (v > best_val) {
      best_val = v;
      best_params = model.tmlp;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }
    if (epochs_since_improve >= config.patience) break;
  }
  model.tmlp = best_params;
  return model;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

json mat_to_json(const Mat& m) {
  json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.data;
  return j;
}

Mat mat_from_json(const json& j) {
  Mat m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != static_cast<size_t>(m.rows) * m.cols)
    throw Error("model file: matrix data size mismatch");
  return m;
}

json config_to_json(const ModelConfig& c) {
  json j;
  j["model_kind"] = to_string(c.model_kind);
  j["embed_width"] = c.embed_width;
  j["model_width"] = c.model_width;
  j["blocks"] = c.blocks;
  j["dropout"] = c.dropout;
  j["heads"] = c.heads;
  j["ff_width"] = c.ff_width;
  j["tau"] = c.tau;
  j["mu"] = c.mu;
  j["sigma"] = c.sigma;
  j["lr"] = c.lr;
  j["scheduler_step"] = c.scheduler_step;
  j["scheduler_gamma"] = c.scheduler_gamma;
  j["epochs"] = c.epochs;
  j["patience"] = c.patience;
  j["val_metric"] = c.val_metric;
  j["batch_groups"] = c.batch_groups;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  c.embed_width = j.at("embed_width").get<int>();
  c.model_width = j.at("model_width").get<int>();
  c.blocks = j.at("blocks").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.heads = j.at("heads").get<int>();
  c.ff_width = j.at("ff_width").get<int>();
  c.tau = j.at("tau").get<double>();
  c.mu = j.at("mu").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.lr = j.at("lr").get<double>();
  c.scheduler_step = j.at("scheduler_step").get<int>();
  c.scheduler_gamma = j.at("scheduler_gamma").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.val_metric = j.at("val_metric").get<std::string>();
  c.batch_groups = j.at("batch_groups").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["kind"] = to_string(model.kind);
  j["config"] = config_to_json(model.config);
  if (model.kind == ModelKind::pairwise_lr) {
    j["lr_weights"] = model.lr_weights;
    j["lr_bias"] = model.lr_bias;
  } else {
    json params;
    model.tmlp.visit([&](const std::string& name, const Mat& m) {
      params[name] = mat_to_json(m);
    });
    j["params"] = std::move(params);
    j["tmlp_blocks"] = static_cast<int>(model.tmlp.blocks.size());
  }
  json hist = json::array();
  for (const auto& h : model.history) {
    json e;
    e["epoch"] = h.epoch;
    if (h.train_loss) e["train_loss"] = *h.train_loss;
    e["val_ndcg5"] = h.val_ndcg5;
    hist.push_back(std::move(e));
  }
  j["history"] = std::move(hist);
  return j.dump(2);
}

TrainedModel model_from_json(const std::string& text,
                             const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(origin + ": model file is not valid JSON");
  TrainedModel model;
  model.kind = model_kind_from_string(j.at("kind").get<std::string>());
  model.config = config_from_json(j.at("config"));
  if (model.kind == ModelKind::pairwise_lr) {
    model.lr_weights = j.at("lr_weights").get<std::vector<double>>();
    model.lr_bias = j.at("lr_bias").get<double>();
    if (model.lr_weights.size() != features::kFeatureCount)
      throw Error(origin + ": lr_weights must have 18 entries");
  } else {
    int blocks = j.at("tmlp_blocks").get<int>();
    model.tmlp.blocks.resize(static_cast<size_t>(blocks));
    const json& params = j.at("params");
    model.tmlp.visit([&](const std::string& name, Mat& m) {
      if (!params.contains(name))
        throw Error(origin + ": model file missing parameter " + name);
      m = mat_from_json(params[name]);
    });
  }
  if (j.contains("history")) {
    for (const auto& e : j["history"]) {
      EpochStats h;
      h.epoch = e.at("epoch").get<int>();
      if (e.contains("train_loss")) h.train_loss = e["train_loss"].get<double>();
      h.val_ndcg5 = e.at("val_ndcg5").get<double>();
      model.history.push_back(h);
    }
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file(path, model_to_json(model) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_file(path), path.string());
}

}  // namespace howto::rerank
