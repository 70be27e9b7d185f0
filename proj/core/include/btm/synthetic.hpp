#pragma once

#include "btm/mlp.hpp"

namespace btm {

// Learnable condensed dataset: inputs are optimized, labels stay fixed
// (hard, class-balanced), and the student step size is itself learnable.
struct SyntheticDataset {
  Mat inputs;   // (2*ipc) x d
  Vec labels;   // fixed {0,1}, ipc per class
  double eta_s = 0.01;
  int ipc = 0;

  Eigen::Index size() const { return inputs.rows(); }
  void validate() const;
};

}  // namespace btm
