#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "btm/data.hpp"
#include "btm/mlp.hpp"
#include "btm/synthetic.hpp"

namespace btm {

struct EvalConfig {
  double lr = 0.05;
  double momentum = 0.9;
  int epochs = 100;
  int n_seeds = 10;
  int batch_size = 256;
  std::uint64_t seed_base = 0;
  std::vector<std::uint64_t> seeds;  // overrides seed_base..+n_seeds-1 when set

  void validate() const;
  std::vector<std::uint64_t> seed_list() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double auroc = 0.0;
  double auprc = 0.0;
  bool diverged = false;
};

struct MetricSummary {
  double auroc_mean = 0.0, auroc_std = 0.0;
  double auprc_mean = 0.0, auprc_std = 0.0;
  std::vector<SeedResult> per_seed;
  bool has_failures = false;
};

// Mann-Whitney probability P(s+ > s-) + 0.5 P(tie), via average ranks.
double auroc(const Vec& scores, const Vec& labels);

// Average precision with tied scores grouped into one threshold.
double auprc(const Vec& scores, const Vec& labels);

// Train a fresh network per seed on the synthetic set, score the given split,
// aggregate mean and (population) std over the non-diverged seeds.
MetricSummary evaluate_synthetic(const SyntheticDataset& synth, const MlpSpec& spec,
                                 const DataSplit& test_set, const EvalConfig& config);

// Same protocol over an arbitrary labeled training set; the "Full Dataset"
// upper-bound row evaluates the real train split through this.
MetricSummary evaluate_training_set(const Mat& train_inputs, const Vec& train_labels,
                                    const MlpSpec& spec, const DataSplit& test_set,
                                    const EvalConfig& config);

// Per-class uniform sample of real train rows; the lower-bound baseline.
SyntheticDataset random_coreset(const TabularDataset& dataset, int ipc, std::uint64_t seed);

}  // namespace btm
