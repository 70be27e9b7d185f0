#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "btm/mlp.hpp"
#include "btm/synthetic.hpp"

namespace btm {

// Parsed CSV before preprocessing; missing cells are NaN.
struct RawTable {
  std::vector<std::string> feature_names;
  Mat values;  // n x d, NaN = missing
  Vec labels;  // n entries in {0,1}
};

struct DataSplit {
  Mat inputs;
  Vec labels;
  double prevalence() const {
    return labels.size() ? labels.mean() : 0.0;
  }
};

// Per-feature statistics, always computed from the train split only.
struct NormStats {
  Vec median;  // imputation value
  Vec mean;
  Vec stddev;  // as used for scaling (1.0 for constant columns)
};

struct TabularDataset {
  DataSplit train, val, test;
  std::vector<std::string> feature_names;
  NormStats stats;
  int feature_dim() const { return static_cast<int>(train.inputs.cols()); }
};

struct GenConfig {
  int n_samples = 10000;
  int n_features = 20;
  double prevalence = 0.05;
  double class_separation = 2.0;  // ||mu_pos - mu_neg||
  double noise_scale = 1.0;
  double missing_rate = 0.0;
  std::uint64_t seed = 1;
};

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, long row, long col)
      : std::runtime_error(what), row_(row), col_(col) {}
  long row() const { return row_; }
  long col() const { return col_; }

 private:
  long row_, col_;
};

// Header row required; empty cells mark missing values; labels must be 0/1.
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column);
void save_csv(const RawTable& table, const std::filesystem::path& path,
              const std::string& label_column);

// Stratified 70/15/15 split, train-median imputation, train-stats z-scoring.
TabularDataset preprocess(const RawTable& raw, std::uint64_t split_seed);

// Two-class isotropic Gaussian mixture with optional missingness, then
// preprocess(). A controllable stand-in for restricted clinical tables; it
// does not claim clinical realism.
TabularDataset generate_synthetic_clinical(const GenConfig& cfg);
RawTable generate_synthetic_clinical_raw(const GenConfig& cfg);

enum class InitStrategy { real, random };

// Seed a synthetic set: per-class real samples, or class-conditional
// Gaussians matching per-class train means/variances. eta_s starts at the
// condensation default 0.01.
SyntheticDataset init_synthetic(const TabularDataset& dataset, int ipc,
                                InitStrategy strategy, std::uint64_t seed);

// Undersample the train-split majority class to the minority count.
TabularDataset balance_train_split(const TabularDataset& dataset, std::uint64_t seed);

}  // namespace btm
