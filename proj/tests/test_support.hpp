#pragma once

// Small shared fixtures: a fast-to-train dataset and expert, used anywhere a
// test needs real trajectories without paying desk-scale runtimes.

#include "btm/data.hpp"
#include "btm/mlp.hpp"
#include "btm/trajectory.hpp"

namespace testsupport {

inline btm::TabularDataset tiny_dataset(std::uint64_t seed = 77) {
  btm::GenConfig cfg;
  cfg.n_samples = 240;
  cfg.n_features = 4;
  cfg.prevalence = 0.3;
  cfg.class_separation = 1.5;
  cfg.noise_scale = 1.0;
  cfg.seed = seed;
  return btm::generate_synthetic_clinical(cfg);
}

inline btm::MlpSpec tiny_spec(double dropout = 0.0) {
  btm::MlpSpec spec;
  spec.layer_widths = {4, 6, 1};
  spec.dropout_rate = dropout;
  return spec;
}

inline btm::Trajectory tiny_expert(const btm::TabularDataset& ds, std::uint64_t seed,
                                   int epochs = 20) {
  btm::SgdConfig cfg;
  cfg.lr = 0.05;
  cfg.momentum = 0.9;
  cfg.epochs = epochs;
  cfg.batch_size = 64;
  cfg.snapshot_every = 1;
  cfg.seed = seed;
  return btm::train_expert(ds, tiny_spec(), cfg);
}

}  // namespace testsupport
