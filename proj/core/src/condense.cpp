#include "btm/condense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace btm {

void CondenseConfig::validate() const {
  if (segment_length <= 0.0 || segment_length > 1.0)
    throw std::invalid_argument("segment_length must be in (0,1]");
  if (t_start_max < 0.0 || t_start_max + segment_length > 1.0 + 1e-12)
    throw std::invalid_argument("t_start_max + segment_length must not exceed 1");
  if (student_steps < 1) throw std::invalid_argument("student_steps must be >= 1");
  if (meta_lr <= 0.0 || eta_s_lr <= 0.0) throw std::invalid_argument("meta rates must be positive");
  if (meta_momentum < 0.0 || meta_momentum >= 1.0 || eta_s_momentum < 0.0 ||
      eta_s_momentum >= 1.0)
    throw std::invalid_argument("momenta must be in [0,1)");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
}

int CondenseConfig::effective_batch(int ipc) const {
  return batch_size > 0 ? batch_size : std::max(2 * ipc, 256);
}

MatchSegment sample_segment(std::span<const BezierPath> paths, const CondenseConfig& config,
                            std::mt19937_64& rng) {
  if (paths.empty()) throw std::invalid_argument("no surrogate paths to sample");
  std::uniform_int_distribution<std::size_t> pick(0, paths.size() - 1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const BezierPath& path = paths[pick(rng)];
    double t0, t1;
    if (config.uniform_pair_sampling) {
      t0 = uni(rng);
      t1 = uni(rng);
      if (t0 > t1) std::swap(t0, t1);
    } else {
      t0 = uni(rng) * config.t_start_max;
      t1 = t0 + config.segment_length;
    }
    MatchSegment seg{eval_path(path, t0), eval_path(path, std::min(t1, 1.0)), t0, t1};
    if ((seg.theta_start - seg.theta_target).norm() >= kDegenerateSegmentNorm) return seg;
  }
  throw std::runtime_error("could not sample a non-degenerate segment in 100 attempts");
}

MatchSegment mtt_baseline_segment(const Trajectory& traj, int expert_epochs,
                                  std::mt19937_64& rng) {
  const int K = traj.segments();
  if (expert_epochs < 1) throw std::invalid_argument("expert_epochs must be >= 1");
  if (K < expert_epochs)
    throw std::invalid_argument("trajectory has fewer than M+1 checkpoints");
  std::uniform_int_distribution<int> pick(0, K - expert_epochs);
  const int k = pick(rng);
  return MatchSegment{traj.checkpoints[static_cast<std::size_t>(k)],
                      traj.checkpoints[static_cast<std::size_t>(k + expert_epochs)],
                      static_cast<double>(k) / K, static_cast<double>(k + expert_epochs) / K};
}

namespace {

Batch gather_rows(const SyntheticDataset& synth, const std::vector<int>& rows) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(rows.size()), synth.inputs.cols());
  b.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.inputs.row(static_cast<Eigen::Index>(i)) = synth.inputs.row(rows[i]);
    b.labels[static_cast<Eigen::Index>(i)] = synth.labels[rows[i]];
  }
  return b;
}

}  // namespace

std::pair<ParamVector, std::vector<TapeStep>> student_unroll(const MlpSpec& spec,
                                                             const ParamVector& theta_start,
                                                             const SyntheticDataset& synth,
                                                             const CondenseConfig& config,
                                                             std::mt19937_64& rng) {
  synth.validate();
  const auto n = static_cast<int>(synth.size());
  const int b = std::min(config.effective_batch(synth.ipc), n);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  ParamVector theta = theta_start;
  std::vector<TapeStep> tape;
  tape.reserve(static_cast<std::size_t>(config.student_steps));
  for (int i = 0; i < config.student_steps; ++i) {
    std::vector<int> rows;
    if (b >= n) {
      rows = order;
    } else {
      std::shuffle(order.begin(), order.end(), rng);
      rows.assign(order.begin(), order.begin() + b);
    }
    const Batch batch = gather_rows(synth, rows);
    const ParamVector grad = grad_params(spec, theta, batch);
    tape.push_back(TapeStep{std::move(rows), theta});
    theta -= synth.eta_s * grad;
    if (!theta.allFinite())
      throw DivergenceError("student unroll diverged at step " + std::to_string(i), i);
  }
  return {std::move(theta), std::move(tape)};
}

double matching_loss(const ParamVector& theta_n, const MatchSegment& segment) {
  const double denom = (segment.theta_start - segment.theta_target).squaredNorm();
  if (denom <= 1e-24) throw std::invalid_argument("degenerate matching segment");
  return (theta_n - segment.theta_target).squaredNorm() / denom;
}

ParamVector loss_grad_gL(const ParamVector& theta_n, const MatchSegment& segment) {
  const double denom = (segment.theta_start - segment.theta_target).squaredNorm();
  if (denom <= 1e-24) throw std::invalid_argument("degenerate matching segment");
  return 2.0 * (theta_n - segment.theta_target) / denom;
}

Mat meta_grad_inputs(const MlpSpec& spec, const std::vector<TapeStep>& tape,
                     const ParamVector& g_l, const SyntheticDataset& synth,
                     const CondenseConfig& config) {
  (void)config;
  if (tape.empty()) throw std::invalid_argument("empty unroll tape");
  if (!g_l.allFinite()) throw std::invalid_argument("non-finite g_L");
  Mat out = Mat::Zero(synth.inputs.rows(), synth.inputs.cols());
  for (const auto& step : tape) {
    const Batch batch = gather_rows(synth, step.batch_rows);
    // grad_params averages over the batch, so the paper's 1/|B_i| factor is
    // already inside the inner product being differentiated.
    const Mat g = grad_inputs_of_inner_product(spec, step.theta, batch, g_l);
    for (std::size_t j = 0; j < step.batch_rows.size(); ++j) {
      const int row = step.batch_rows[j];
      if (row < 0 || row >= out.rows())
        throw std::out_of_range("tape references synthetic row " + std::to_string(row));
      out.row(row) -= synth.eta_s * g.row(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

double meta_grad_eta_s(const MlpSpec& spec, const std::vector<TapeStep>& tape,
                       const ParamVector& g_l, const SyntheticDataset& synth) {
  if (tape.empty()) throw std::invalid_argument("empty unroll tape");
  double acc = 0.0;
  for (const auto& step : tape) {
    const Batch batch = gather_rows(synth, step.batch_rows);
    acc -= g_l.dot(grad_params(spec, step.theta, batch));
  }
  return acc;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::pair<SyntheticDataset, CondenseHistory> condense_run(
    const SegmentSampler& sampler, const TabularDataset& dataset, const MlpSpec& spec,
    const SyntheticDataset& synth0, const CondenseConfig& config) {
  config.validate();
  synth0.validate();
  if (dataset.val.inputs.rows() == 0)
    throw std::invalid_argument("condense_run needs a validation split");

  SyntheticDataset synth = synth0;
  SyntheticDataset best = synth0;
  CondenseHistory history;
  Mat vel_inputs = Mat::Zero(synth.inputs.rows(), synth.inputs.cols());
  double vel_eta = 0.0;
  std::mt19937_64 rng(config.seed);

  for (long iter = 0; iter < config.max_iters; ++iter) {
    const MatchSegment segment = sampler(rng);
    auto [theta_n, tape] = student_unroll(spec, segment.theta_start, synth, config, rng);
    const double loss = matching_loss(theta_n, segment);
    const ParamVector g_l = loss_grad_gL(theta_n, segment);
    const Mat g_inputs = meta_grad_inputs(spec, tape, g_l, synth, config);
    const double g_eta = meta_grad_eta_s(spec, tape, g_l, synth);

    vel_inputs = config.meta_momentum * vel_inputs + g_inputs;
    synth.inputs -= config.meta_lr * vel_inputs;
    vel_eta = config.eta_s_momentum * vel_eta + g_eta;
    synth.eta_s = std::max(synth.eta_s - config.eta_s_lr * vel_eta, kEtaSFloor);
    if (!synth.inputs.allFinite())
      throw DivergenceError("synthetic inputs diverged at iteration " + std::to_string(iter),
                            iter);

    HistoryRow row;
    row.iteration = iter;
    row.btm_loss = loss;
    row.eta_s = synth.eta_s;
    if ((iter + 1) % config.eval_every == 0) {
      EvalConfig eval_cfg = config.periodic_eval;
      eval_cfg.seeds = {mix_seed(config.seed, 0xe7a1u + static_cast<std::uint64_t>(iter))};
      const MetricSummary summary = evaluate_synthetic(synth, spec, dataset.val, eval_cfg);
      row.val_auroc = summary.auroc_mean;
      row.val_auprc = summary.auprc_mean;
      if (std::isnan(history.best_val_auprc) || summary.auprc_mean > history.best_val_auprc) {
        history.best_val_auprc = summary.auprc_mean;
        history.best_val_auroc = summary.auroc_mean;
        history.best_iteration = iter;
        best = synth;
      }
    }
    history.rows.push_back(row);
  }
  if (history.best_iteration < 0) best = synth;  // no evaluation ever ran
  return {std::move(best), std::move(history)};
}

std::pair<SyntheticDataset, CondenseHistory> condense_run(
    std::span<const BezierPath> paths, const TabularDataset& dataset, const MlpSpec& spec,
    const SyntheticDataset& synth0, const CondenseConfig& config) {
  SegmentSampler sampler = [paths, &config](std::mt19937_64& rng) {
    return sample_segment(paths, config, rng);
  };
  return condense_run(sampler, dataset, spec, synth0, config);
}

}  // namespace btm
