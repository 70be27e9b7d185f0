#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "btm/data.hpp"
#include "btm/mlp.hpp"

namespace btm {

struct SgdConfig {
  double lr = 0.02;
  double momentum = 0.9;
  int epochs = 100;
  int batch_size = 256;
  int snapshot_every = 1;  // epochs between stored checkpoints
  std::uint64_t seed = 0;

  void validate() const;
};

// One expert run: per-epoch parameter checkpoints on the real train split.
struct Trajectory {
  MlpSpec spec;
  SgdConfig config;
  std::vector<ParamVector> checkpoints;  // theta_0 ... theta_K
  std::vector<double> train_losses;      // full-train loss at each checkpoint
  double endpoint_grad_norm = 0.0;       // ||grad L(theta_K)|| on the train split

  int segments() const { return static_cast<int>(checkpoints.size()) - 1; }
};

// Momentum SGD on the train split with per-epoch reshuffling; dropout active
// when spec.dropout_rate > 0. Throws DivergenceError on non-finite loss.
Trajectory train_expert(const TabularDataset& dataset, const MlpSpec& spec,
                        const SgdConfig& config);

// Piecewise-linear interpolation of the checkpoints over uniform time:
// gamma(0) = theta_0, gamma(1) = theta_K.
ParamVector interp_gamma(const Trajectory& traj, double t);

// ||theta_{k+1} - 2 theta_k + theta_{k-1}|| for k = 1..K-1.
std::vector<double> second_differences(const Trajectory& traj);

// Binary container "BTMT" (f32 payload + CRC32) plus a JSON sidecar holding
// spec, config, and endpoint_grad_norm at <path>.json.
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

}  // namespace btm
