#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "btm/bezier.hpp"
#include "btm/data.hpp"
#include "btm/eval.hpp"
#include "btm/mlp.hpp"
#include "btm/synthetic.hpp"
#include "btm/trajectory.hpp"

namespace btm {

struct CondenseConfig {
  double segment_length = 0.2;
  double t_start_max = 0.8;
  bool uniform_pair_sampling = false;  // sorted U(0,1) pair instead of fixed length
  int student_steps = 30;              // N
  double meta_lr = 100.0;              // eta_x
  double meta_momentum = 0.9;
  double eta_s_lr = 1e-4;
  double eta_s_momentum = 0.5;
  int batch_size = 0;  // 0 -> max(2*ipc, 256)
  int max_iters = 40000;
  int eval_every = 10;
  std::uint64_t seed = 0;
  EvalConfig periodic_eval{.lr = 0.05, .momentum = 0.9, .epochs = 50, .n_seeds = 1,
                           .batch_size = 256};

  void validate() const;
  int effective_batch(int ipc) const;
};

struct MatchSegment {
  ParamVector theta_start;
  ParamVector theta_target;
  double t_start = 0.0;
  double t_end = 0.0;
};

// One recorded student step: the pre-step parameters and the minibatch rows
// (synthetic-dataset indices) it consumed.
struct TapeStep {
  std::vector<int> batch_rows;
  ParamVector theta;
};

struct HistoryRow {
  long iteration = 0;
  double btm_loss = 0.0;
  double eta_s = 0.0;
  double val_auroc = std::numeric_limits<double>::quiet_NaN();
  double val_auprc = std::numeric_limits<double>::quiet_NaN();
};

struct CondenseHistory {
  std::vector<HistoryRow> rows;
  double best_val_auprc = std::numeric_limits<double>::quiet_NaN();
  double best_val_auroc = std::numeric_limits<double>::quiet_NaN();
  long best_iteration = -1;
};

using SegmentSampler = std::function<MatchSegment(std::mt19937_64&)>;

// Uniform surrogate choice; t_start ~ U(0, t_start_max) with
// t_end = t_start + segment_length (or the sorted-uniform-pair variant).
// Resamples degenerate segments, errors after 100 failures.
MatchSegment sample_segment(std::span<const BezierPath> paths, const CondenseConfig& config,
                            std::mt19937_64& rng);

// Discrete-checkpoint segment for the MTT baseline: k ~ U{0..K-M}, target at
// k+M expert epochs.
MatchSegment mtt_baseline_segment(const Trajectory& traj, int expert_epochs,
                                  std::mt19937_64& rng);

// N plain-SGD steps with step size synth.eta_s; minibatches are drawn without
// replacement within a step and reshuffled across steps; dropout stays off.
std::pair<ParamVector, std::vector<TapeStep>> student_unroll(const MlpSpec& spec,
                                                             const ParamVector& theta_start,
                                                             const SyntheticDataset& synth,
                                                             const CondenseConfig& config,
                                                             std::mt19937_64& rng);

// ||theta_N - theta_target||^2 / ||theta_start - theta_target||^2
double matching_loss(const ParamVector& theta_n, const MatchSegment& segment);

// g_L = 2 (theta_N - theta_target) / ||theta_start - theta_target||^2
ParamVector loss_grad_gL(const ParamVector& theta_n, const MatchSegment& segment);

// First-order meta-gradient w.r.t. the synthetic inputs: per tape step,
// -eta_s * grad_inputs_of_inner_product(theta_i, B_i, g_L), scattered back to
// the synthetic rows. Exact for N = 1 plain SGD.
Mat meta_grad_inputs(const MlpSpec& spec, const std::vector<TapeStep>& tape,
                     const ParamVector& g_l, const SyntheticDataset& synth,
                     const CondenseConfig& config);

// First-order meta-gradient w.r.t. eta_s: <g_L, -sum_i mean-batch-grad_i>.
double meta_grad_eta_s(const MlpSpec& spec, const std::vector<TapeStep>& tape,
                       const ParamVector& g_l, const SyntheticDataset& synth);

// Full condensation loop with momentum updates of the inputs and eta_s and
// periodic best-by-validation-AUPRC checkpointing.
std::pair<SyntheticDataset, CondenseHistory> condense_run(
    const SegmentSampler& sampler, const TabularDataset& dataset, const MlpSpec& spec,
    const SyntheticDataset& synth0, const CondenseConfig& config);
std::pair<SyntheticDataset, CondenseHistory> condense_run(
    std::span<const BezierPath> paths, const TabularDataset& dataset, const MlpSpec& spec,
    const SyntheticDataset& synth0, const CondenseConfig& config);

inline constexpr double kEtaSFloor = 1e-6;
inline constexpr double kDegenerateSegmentNorm = 1e-12;

}  // namespace btm
