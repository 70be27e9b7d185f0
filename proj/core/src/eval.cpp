#include "btm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace btm {

void EvalConfig::validate() const {
  if (lr <= 0.0 || momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("bad eval optimizer settings");
  if (epochs <= 0 || batch_size <= 0) throw std::invalid_argument("bad eval epochs/batch");
  if (seeds.empty() && n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
}

std::vector<std::uint64_t> EvalConfig::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(static_cast<std::size_t>(n_seeds));
  for (int i = 0; i < n_seeds; ++i) out[static_cast<std::size_t>(i)] = seed_base + i;
  return out;
}

double auroc(const Vec& scores, const Vec& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("length mismatch");
  const auto n = scores.size();
  Eigen::Index n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) n_pos += labels[i] == 1.0;
  const Eigen::Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auroc needs both classes present");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  // average ranks over tie groups, 1-based
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1.0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auprc(const Vec& scores, const Vec& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("length mismatch");
  const auto n = scores.size();
  Eigen::Index n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) n_pos += labels[i] == 1.0;
  if (n_pos == 0) throw std::invalid_argument("auprc needs at least one positive");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1.0)
        tp += 1.0;
      else
        fp += 1.0;
    }
    const double recall = tp / static_cast<double>(n_pos);
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return ap;
}

namespace {

struct TrainOutcome {
  ParamVector params;
  bool diverged = false;
};

TrainOutcome train_from_scratch(const Mat& inputs, const Vec& labels, const MlpSpec& spec,
                                const EvalConfig& cfg, std::uint64_t seed) {
  ParamVector params = init_params(spec, seed);
  ParamVector velocity = ParamVector::Zero(params.size());
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.batch_size < static_cast<int>(n)) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t at = 0; at < n; at += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - at);
      Batch batch;
      batch.inputs.resize(static_cast<Eigen::Index>(count), inputs.cols());
      batch.labels.resize(static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        batch.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(order[at + k]);
        batch.labels[static_cast<Eigen::Index>(k)] = labels[order[at + k]];
      }
      const ParamVector grad = grad_params(spec, params, batch);
      sgd_step(params, velocity, grad, cfg.lr, cfg.momentum);
    }
    if (!params.allFinite()) return {std::move(params), true};
  }
  return {std::move(params), false};
}

double population_std(const std::vector<double>& xs, double mean) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

MetricSummary evaluate_synthetic(const SyntheticDataset& synth, const MlpSpec& spec,
                                 const DataSplit& test_set, const EvalConfig& config) {
  synth.validate();
  return evaluate_training_set(synth.inputs, synth.labels, spec, test_set, config);
}

MetricSummary evaluate_training_set(const Mat& train_inputs, const Vec& train_labels,
                                    const MlpSpec& spec, const DataSplit& test_set,
                                    const EvalConfig& config) {
  config.validate();
  if (train_inputs.cols() != spec.input_dim() || test_set.inputs.cols() != spec.input_dim())
    throw std::invalid_argument("dimension mismatch between train/test and spec");
  if (train_inputs.rows() != train_labels.size())
    throw std::invalid_argument("train inputs/labels row mismatch");

  MetricSummary summary;
  const auto seeds = config.seed_list();
  std::vector<double> aurocs, auprcs;
  for (const auto seed : seeds) {
    SeedResult r;
    r.seed = seed;
    auto outcome = train_from_scratch(train_inputs, train_labels, spec, config, seed);
    if (outcome.diverged) {
      r.diverged = true;
      summary.has_failures = true;
    } else {
      const Vec scores = forward(spec, outcome.params, test_set.inputs);
      r.auroc = auroc(scores, test_set.labels);
      r.auprc = auprc(scores, test_set.labels);
      aurocs.push_back(r.auroc);
      auprcs.push_back(r.auprc);
    }
    summary.per_seed.push_back(r);
  }
  if ((seeds.size() - aurocs.size()) * 2 >= seeds.size())
    throw std::runtime_error("at least half of the evaluation seeds diverged");
  summary.auroc_mean = std::accumulate(aurocs.begin(), aurocs.end(), 0.0) / aurocs.size();
  summary.auprc_mean = std::accumulate(auprcs.begin(), auprcs.end(), 0.0) / auprcs.size();
  summary.auroc_std = population_std(aurocs, summary.auroc_mean);
  summary.auprc_std = population_std(auprcs, summary.auprc_mean);
  return summary;
}

SyntheticDataset random_coreset(const TabularDataset& dataset, int ipc, std::uint64_t seed) {
  return init_synthetic(dataset, ipc, InitStrategy::real, seed);
}

}  // namespace btm
