// Copyright (c) 2026 howto-verify contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "howto/autodiff.hpp"
#include "howto/extract.hpp"
#include "howto/features.hpp"
#include "howto/util.hpp"

namespace howto::rerank {

/// One candidate page inside a query's rank group, carrying everything the
/// gate and the models need.
struct RankItem {
  std::string page_id;
  features::FeatureVector features;
  std::optional<int> label;
  int original_rank = 1;
  bool has_instructions = false;
  extract::GroundingStatus grounding = extract::GroundingStatus::none;
  size_t applied_actions = 0;
  bool stage_failed = false;  // feature computation failed; never verified
  bool verified = false;
};

struct RankGroup {
  std::string query_id;
  std::vector<RankItem> items;
};

/// verified <=> grounded at all, >= 1 applied action, and F4 > 0.
void gate_verified(RankGroup& group);

// ---------------------------------------------------------------------------
// Differentiable sorting
// ---------------------------------------------------------------------------

struct RelaxedPermutation {
  nn::Mat matrix;
  double temperature = 1.0;
};

/// NeuralSort relaxation: row i is a softmax favoring the i-th largest
/// score; at low temperature rows approach the descending-argsort one-hots.
RelaxedPermutation neural_sort(const std::vector<double>& scores, double tau);

struct SinkhornResult {
  nn::Mat matrix;
  double achieved_tol = 0.0;  // max |row/col sum - 1| on exit
  int iterations = 0;
};

/// Alternating row/column normalization with a 1e-30 positivity floor.
SinkhornResult sinkhorn_scale(const nn::Mat& matrix, int max_iters = 50,
                              double tol = 1e-6);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d scores
};

/// -NeuralNDCG@k with gain 2^y-1 and discount 1/log2(j+1). Sinkhorn is
/// unrolled a fixed number of iterations, so the gradient is exact for the
/// computation as implemented. All-negative groups yield loss 0.
LossResult neural_ndcg_loss(const std::vector<double>& scores,
                            const std::vector<int>& labels, int k, double tau,
                            int sinkhorn_iters = 50);

/// Graph-composable form: returns the scalar loss node built on top of an
/// existing scores node (n x 1). Returns -1 when the group is skippable
/// (maxDCG@k == 0).
nn::Graph::Id neural_ndcg_loss_node(nn::Graph& g, nn::Graph::Id scores,
                                    const std::vector<int>& labels, int k,
                                    double tau, int sinkhorn_iters = 50);

/// LambdaLoss: swap-delta-weighted pairwise logistic loss. Ranks are taken
/// from the current descending-score order and treated as constants.
LossResult lambda_loss(const std::vector<double>& scores,
                       const std::vector<int>& labels, double sigma, double mu);

/// Loss value at explicitly frozen ranks (1-based, from descending scores).
/// This is the function the gradient of lambda_loss differentiates; exposed
/// so finite-difference checks can hold the ranks fixed.
double lambda_loss_at(const std::vector<double>& scores,
                      const std::vector<int>& labels, double sigma, double mu,
                      const std::vector<int>& ranks);

nn::Graph::Id lambda_loss_node(nn::Graph& g, nn::Graph::Id scores,
                               const std::vector<int>& labels, double sigma,
                               double mu);

/// 1-based ranks by descending score; ties broken by lower index.
std::vector<int> ranks_from_scores(const std::vector<double>& scores);

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

enum class ModelKind { pairwise_lr, tmlp_neuralndcg, tmlp_lambdaloss };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind model_kind = ModelKind::tmlp_neuralndcg;
  int embed_width = 96;
  int model_width = 384;
  int blocks = 2;
  double dropout = 0.1;
  int heads = 4;
  int ff_width = 768;
  double tau = 1.0;
  double mu = 10.0;
  double sigma = 1.0;
  double lr = 0.001;
  int scheduler_step = 50;
  double scheduler_gamma = 0.1;
  int epochs = 20;
  int patience = 20;
  std::string val_metric = "ndcg@5";
  int batch_groups = 16;
  uint64_t seed = 7;

  void validate() const;
};

struct TmlpBlockParams {
  nn::Mat wq, bq, wk, bk, wv, bv, wo, bo;
  nn::Mat ln1_g, ln1_b;
  nn::Mat ff1_w, ff1_b, ff2_w, ff2_b;
  nn::Mat ln2_g, ln2_b;
};

struct TmlpParams {
  nn::Mat emb1_w, emb1_b;  // 18 -> 96
  nn::Mat emb2_w, emb2_b;  // 96 -> 384
  std::vector<TmlpBlockParams> blocks;
  nn::Mat out_w, out_b;  // 384 -> 1

  /// Fixed-order traversal used by the optimizer and the serializer.
  void visit(const std::function<void(const std::string&, nn::Mat&)>& fn);
  void visit(const std::function<void(const std::string&, const nn::Mat&)>& fn) const;
};

TmlpParams tmlp_init(const ModelConfig& config, Rng rng);

/// Builds the network on a graph; features is n (incl. padding) x 18,
/// the first n_real rows are real items. Padding columns are masked out of
/// attention. Returns the n x 1 score node; param_ids receives the leaf ids
/// in visit order when non-null.
nn::Graph::Id build_tmlp(nn::Graph& g, nn::Graph::Id features,
                         const TmlpParams& params, const ModelConfig& config,
                         bool train_mode, int n_real, Rng dropout_rng,
                         std::vector<nn::Graph::Id>* param_ids = nullptr);

/// Inference-mode forward pass (no dropout).
std::vector<double> tmlp_forward(const nn::Mat& features,
                                 const TmlpParams& params,
                                 const ModelConfig& config,
                                 bool train_mode = false,
                                 int n_real = -1,
                                 Rng dropout_rng = Rng(0));

struct EpochStats {
  int epoch = 0;  // 0 = untrained baseline
  std::optional<double> train_loss;
  double val_ndcg5 = 0.0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::pairwise_lr;
  ModelConfig config;
  std::vector<double> lr_weights;  // 18, pairwise_lr only
  double lr_bias = 0.0;
  TmlpParams tmlp;  // tmlp_* only
  std::vector<EpochStats> history;

  std::vector<double> score(const std::vector<const RankItem*>& items) const;
};

/// Pairwise logistic regression over within-group ordered pairs of verified
/// items, stochastic gradient descent at config.lr, best-validation weights.
TrainedModel train_pairwise_lr(const std::vector<RankGroup>& train,
                               const std::vector<RankGroup>& val,
                               const ModelConfig& config);

enum class TmlpLoss { neuralndcg, lambdaloss };

/// Adam + step LR schedule + NDCG@5 early stopping, best checkpoint kept.
/// Deterministic for a fixed config.seed.
TrainedModel train_tmlp(const std::vector<RankGroup>& train,
                        const std::vector<RankGroup>& val,
                        const ModelConfig& config, TmlpLoss loss_kind);

/// Final ordering: verified items by descending model score (ties by
/// original rank), then unverified items in original relative order.
std::vector<std::string> rerank_group(const RankGroup& group,
                                      const TrainedModel& model);

/// Mean NDCG@5 of rerank_group orderings over labeled groups; the training
/// validation metric.
double validation_ndcg5(const std::vector<RankGroup>& groups,
                        const TrainedModel& model);

// Model persistence: named parameter arrays + config + history, exact.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text,
                             const std::string& origin = "<memory>");
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace howto::rerank
