#include "btm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "btm/io.hpp"

namespace btm {

void SyntheticDataset::validate() const {
  if (ipc <= 0) throw std::invalid_argument("ipc must be positive");
  if (inputs.rows() != 2L * ipc || inputs.rows() != labels.size())
    throw std::invalid_argument("synthetic set must hold exactly ipc rows per class");
  if (eta_s < 0.0 || !std::isfinite(eta_s))
    throw std::invalid_argument("eta_s must be finite and nonnegative");
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw std::invalid_argument("synthetic labels must be binary");
    pos += labels[i] == 1.0;
  }
  if (pos != ipc) throw std::invalid_argument("synthetic labels must be class-balanced");
  if (!inputs.allFinite()) throw std::invalid_argument("synthetic inputs must be finite");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Per-class index shuffle, then 70/15/15 counts rounded to the nearest row.
struct SplitIdx {
  std::vector<int> train, val, test;
};

SplitIdx stratified_split(const Vec& labels, std::uint64_t seed) {
  std::vector<int> by_class[2];
  for (int i = 0; i < labels.size(); ++i) by_class[labels[i] == 1.0].push_back(i);
  std::mt19937_64 rng(seed);
  SplitIdx idx;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<long>(members.size());
    const long n_train = std::lround(0.70 * n);
    const long n_val = std::lround(0.15 * n);
    for (long i = 0; i < n; ++i) {
      if (i < n_train)
        idx.train.push_back(members[i]);
      else if (i < n_train + n_val)
        idx.val.push_back(members[i]);
      else
        idx.test.push_back(members[i]);
    }
  }
  return idx;
}

DataSplit gather(const Mat& values, const Vec& labels, const std::vector<int>& rows) {
  DataSplit s;
  s.inputs.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  s.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.inputs.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
    s.labels[static_cast<Eigen::Index>(i)] = labels[rows[i]];
  }
  return s;
}

void impute(Mat& m, const Vec& median) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::isnan(m(i, j))) m(i, j) = median[j];
}

constexpr double kStdFloor = 1e-12;

}  // namespace

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV: " + path.string(), 0, 0);
  auto header = split_line(line);
  for (auto& h : header) h = trim(h);
  long label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = static_cast<long>(j);
  if (label_idx < 0)
    throw CsvError("label column '" + label_column + "' not found", 0, 0);

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  long row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw CsvError("row has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()),
                     row_no, static_cast<long>(cells.size()));
    std::vector<double> feat;
    feat.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = trim(cells[j]);
      const bool is_label = static_cast<long>(j) == label_idx;
      if (cell.empty()) {
        if (is_label) throw CsvError("missing label", row_no, static_cast<long>(j));
        feat.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw CsvError("cannot parse cell '" + cell + "'", row_no, static_cast<long>(j));
      }
      if (is_label) {
        if (v != 0.0 && v != 1.0)
          throw CsvError("label must be 0 or 1, got '" + cell + "'", row_no,
                         static_cast<long>(j));
        labels.push_back(v);
      } else {
        feat.push_back(v);
      }
    }
    rows.push_back(std::move(feat));
  }

  RawTable t;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<long>(j) != label_idx) t.feature_names.push_back(header[j]);
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.feature_names.size()));
  t.labels.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    t.labels[static_cast<Eigen::Index>(i)] = labels[i];
  }
  return t;
}

void save_csv(const RawTable& table, const std::filesystem::path& path,
              const std::string& label_column) {
  std::string out;
  for (const auto& name : table.feature_names) {
    out += name;
    out += ',';
  }
  out += label_column;
  out += '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      const double v = table.values(i, j);
      if (!std::isnan(v)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
      }
      out += ',';
    }
    std::snprintf(buf, sizeof buf, "%g", table.labels[i]);
    out += buf;
    out += '\n';
  }
  atomic_write_text(path, out);
}

TabularDataset preprocess(const RawTable& raw, std::uint64_t split_seed) {
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < raw.labels.size(); ++i) pos += raw.labels[i] == 1.0;
  const Eigen::Index neg = raw.labels.size() - pos;
  if (pos < 10 || neg < 10)
    throw std::invalid_argument("need at least 10 rows per class to split");

  const SplitIdx idx = stratified_split(raw.labels, split_seed);
  TabularDataset ds;
  ds.feature_names = raw.feature_names;
  ds.train = gather(raw.values, raw.labels, idx.train);
  ds.val = gather(raw.values, raw.labels, idx.val);
  ds.test = gather(raw.values, raw.labels, idx.test);

  const Eigen::Index d = raw.values.cols();
  ds.stats.median.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> seen;
    seen.reserve(static_cast<std::size_t>(ds.train.inputs.rows()));
    for (Eigen::Index i = 0; i < ds.train.inputs.rows(); ++i)
      if (!std::isnan(ds.train.inputs(i, j))) seen.push_back(ds.train.inputs(i, j));
    ds.stats.median[j] = median_of(std::move(seen));
  }
  impute(ds.train.inputs, ds.stats.median);
  impute(ds.val.inputs, ds.stats.median);
  impute(ds.test.inputs, ds.stats.median);

  ds.stats.mean = ds.train.inputs.colwise().mean();
  ds.stats.stddev.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var =
        (ds.train.inputs.col(j).array() - ds.stats.mean[j]).square().mean();
    const double sd = std::sqrt(var);
    ds.stats.stddev[j] = sd <= kStdFloor ? 1.0 : sd;  // constant columns unscaled
  }
  for (Mat* m : {&ds.train.inputs, &ds.val.inputs, &ds.test.inputs})
    *m = ((m->rowwise() - ds.stats.mean.transpose()).array().rowwise() /
          ds.stats.stddev.transpose().array())
             .matrix();
  return ds;
}

RawTable generate_synthetic_clinical_raw(const GenConfig& cfg) {
  if (cfg.prevalence <= 0.0 || cfg.prevalence >= 1.0)
    throw std::invalid_argument("prevalence must be in (0,1)");
  if (cfg.missing_rate < 0.0 || cfg.missing_rate >= 1.0)
    throw std::invalid_argument("missing_rate must be in [0,1)");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vec mu(cfg.n_features);
  for (int j = 0; j < cfg.n_features; ++j) mu[j] = gauss(rng);
  mu *= cfg.class_separation / std::max(mu.norm(), 1e-300);

  const long n_pos = std::lround(cfg.prevalence * cfg.n_samples);
  RawTable t;
  t.values.resize(cfg.n_samples, cfg.n_features);
  t.labels.resize(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) {
    const bool positive = i < n_pos;
    t.labels[i] = positive ? 1.0 : 0.0;
    for (int j = 0; j < cfg.n_features; ++j)
      t.values(i, j) = cfg.noise_scale * gauss(rng) + (positive ? mu[j] : 0.0);
  }
  if (cfg.missing_rate > 0.0) {
    std::bernoulli_distribution drop(cfg.missing_rate);
    for (int i = 0; i < cfg.n_samples; ++i)
      for (int j = 0; j < cfg.n_features; ++j)
        if (drop(rng)) t.values(i, j) = std::numeric_limits<double>::quiet_NaN();
  }
  t.feature_names.resize(cfg.n_features);
  for (int j = 0; j < cfg.n_features; ++j) t.feature_names[j] = "f" + std::to_string(j);
  return t;
}

TabularDataset generate_synthetic_clinical(const GenConfig& cfg) {
  return preprocess(generate_synthetic_clinical_raw(cfg), cfg.seed);
}

namespace {

std::vector<int> class_indices(const DataSplit& split, double label) {
  std::vector<int> idx;
  for (int i = 0; i < split.labels.size(); ++i)
    if (split.labels[i] == label) idx.push_back(i);
  return idx;
}

std::vector<int> sample_without_replacement(std::vector<int> pool, int k,
                                            std::mt19937_64& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace

SyntheticDataset init_synthetic(const TabularDataset& dataset, int ipc,
                                InitStrategy strategy, std::uint64_t seed) {
  if (ipc <= 0) throw std::invalid_argument("ipc must be positive");
  const int d = dataset.feature_dim();
  SyntheticDataset synth;
  synth.ipc = ipc;
  synth.inputs.resize(2L * ipc, d);
  synth.labels.resize(2L * ipc);
  std::mt19937_64 rng(seed);

  for (int cls = 0; cls < 2; ++cls) {
    const auto members = class_indices(dataset.train, static_cast<double>(cls));
    if (strategy == InitStrategy::real && static_cast<int>(members.size()) < ipc)
      throw std::invalid_argument("class " + std::to_string(cls) +
                                  " has fewer train rows than ipc");
    const Eigen::Index base = static_cast<Eigen::Index>(cls) * ipc;
    if (strategy == InitStrategy::real) {
      const auto chosen = sample_without_replacement(members, ipc, rng);
      for (int i = 0; i < ipc; ++i)
        synth.inputs.row(base + i) = dataset.train.inputs.row(chosen[i]);
    } else {
      if (members.empty())
        throw std::invalid_argument("class " + std::to_string(cls) + " missing from train");
      Vec mean = Vec::Zero(d), var = Vec::Zero(d);
      for (int r : members) mean += dataset.train.inputs.row(r).transpose();
      mean /= static_cast<double>(members.size());
      for (int r : members)
        var += (dataset.train.inputs.row(r).transpose() - mean).array().square().matrix();
      var /= static_cast<double>(members.size());
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int i = 0; i < ipc; ++i)
        for (int j = 0; j < d; ++j)
          synth.inputs(base + i, j) = mean[j] + std::sqrt(var[j]) * gauss(rng);
    }
    synth.labels.segment(base, ipc).setConstant(static_cast<double>(cls));
  }
  synth.eta_s = 0.01;
  synth.validate();
  return synth;
}

TabularDataset balance_train_split(const TabularDataset& dataset, std::uint64_t seed) {
  const auto neg = class_indices(dataset.train, 0.0);
  const auto pos = class_indices(dataset.train, 1.0);
  if (neg.empty() || pos.empty())
    throw std::invalid_argument("both classes required to balance");
  const auto& majority = neg.size() >= pos.size() ? neg : pos;
  const auto& minority = neg.size() >= pos.size() ? pos : neg;
  std::mt19937_64 rng(seed);
  auto kept = sample_without_replacement(majority, static_cast<int>(minority.size()), rng);
  std::vector<int> rows(minority);
  rows.insert(rows.end(), kept.begin(), kept.end());
  std::sort(rows.begin(), rows.end());

  TabularDataset out = dataset;
  out.train = gather(dataset.train.inputs, dataset.train.labels, rows);
  return out;
}

}  // namespace btm
