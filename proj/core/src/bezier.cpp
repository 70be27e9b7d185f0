#include "btm/bezier.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "btm/io.hpp"

namespace btm {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

Batch subsample(const DataSplit& split, int batch_size, std::mt19937_64& rng) {
  const auto n = split.inputs.rows();
  if (batch_size >= n) return Batch{split.inputs, split.labels};
  Batch b;
  b.inputs.resize(batch_size, split.inputs.cols());
  b.labels.resize(batch_size);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  for (int i = 0; i < batch_size; ++i) {
    const auto r = pick(rng);
    b.inputs.row(i) = split.inputs.row(r);
    b.labels[i] = split.labels[r];
  }
  return b;
}

}  // namespace

void BezierPath::validate() const {
  if (theta0.size() != phi.size() || theta0.size() != thetaT.size())
    throw std::invalid_argument("path vectors must share one length");
  if (!theta0.allFinite() || !phi.allFinite() || !thetaT.allFinite())
    throw std::invalid_argument("path vectors must be finite");
}

void ControlOptConfig::validate() const {
  if (lr <= 0.0 || tol <= 0.0) throw std::invalid_argument("lr and tol must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (mc_samples <= 0 || batch_size <= 0)
    throw std::invalid_argument("mc_samples and batch_size must be positive");
}

PathObjective dataset_objective(const TabularDataset& dataset, const MlpSpec& spec,
                                int batch_size, bool full_batch) {
  if (dataset.feature_dim() != spec.input_dim())
    throw std::invalid_argument("dataset feature dim does not match spec");
  PathObjective obj;
  obj.loss = [&dataset, spec](const ParamVector& theta) {
    return loss_value(spec, theta, Batch{dataset.train.inputs, dataset.train.labels});
  };
  obj.sample_loss_grad = [&dataset, spec, batch_size, full_batch](
                             const ParamVector& theta, std::mt19937_64& rng) {
    const Batch batch = full_batch ? Batch{dataset.train.inputs, dataset.train.labels}
                                   : subsample(dataset.train, batch_size, rng);
    return std::make_pair(loss_value(spec, theta, batch), grad_params(spec, theta, batch));
  };
  return obj;
}

ParamVector eval_path(const BezierPath& path, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("t must be in [0,1]");
  const double a = (1.0 - t) * (1.0 - t);
  const double b = 2.0 * t * (1.0 - t);
  const double c = t * t;
  return a * path.theta0 + b * path.phi + c * path.thetaT;
}

double path_curvature(const BezierPath& path) {
  return 2.0 * (path.theta0 - 2.0 * path.phi + path.thetaT).norm();
}

double avg_loss_along_path(const BezierPath& path,
                           const std::function<double(const ParamVector&)>& loss,
                           int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) acc += loss(eval_path(path, uni(rng)));
  return acc / n_samples;
}

double avg_loss_along_path(const BezierPath& path, const TabularDataset& dataset,
                           const MlpSpec& spec, int n_samples, std::uint64_t seed) {
  const auto obj = dataset_objective(dataset, spec, 0, true);
  return avg_loss_along_path(path, obj.loss, n_samples, seed);
}

std::pair<BezierPath, OptTrace> optimize_control_point(const ParamVector& theta0,
                                                       const ParamVector& thetaT,
                                                       const PathObjective& objective,
                                                       const ControlOptConfig& config) {
  config.validate();
  if (theta0.size() != thetaT.size())
    throw std::invalid_argument("endpoint length mismatch");

  BezierPath path{theta0, 0.5 * (theta0 + thetaT), thetaT};
  OptTrace trace;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    double avg_loss = 0.0;
    ParamVector g = ParamVector::Zero(theta0.size());
    for (int s = 0; s < config.mc_samples; ++s) {
      const double t = uni(rng);
      const ParamVector theta_t = eval_path(path, t);
      auto [loss, grad] = objective.sample_loss_grad(theta_t, rng);
      if (!std::isfinite(loss))
        throw DivergenceError("control-point fit diverged at iteration " +
                                  std::to_string(iter),
                              iter);
      avg_loss += loss / config.mc_samples;
      // d theta_t / d phi = 2t(1-t)
      g += (2.0 * t * (1.0 - t) / config.mc_samples) * grad;
    }
    const double gnorm = g.norm();
    trace.loss.push_back(avg_loss);
    trace.grad_norm.push_back(gnorm);
    if (gnorm < config.tol) {
      trace.converged = true;
      break;
    }
    path.phi -= config.lr * g;
  }
  return {std::move(path), std::move(trace)};
}

std::pair<BezierPath, OptTrace> optimize_control_point(const ParamVector& theta0,
                                                       const ParamVector& thetaT,
                                                       const TabularDataset& dataset,
                                                       const MlpSpec& spec,
                                                       const ControlOptConfig& config) {
  if (dataset.train.inputs.rows() == 0) throw std::invalid_argument("empty dataset");
  const auto obj = dataset_objective(dataset, spec, config.batch_size, config.full_batch);
  return optimize_control_point(theta0, thetaT, obj, config);
}

void save_path(const BezierPath& path, const std::filesystem::path& file,
               const std::string& source_id, const ControlOptConfig* config) {
  path.validate();
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u64(buf, static_cast<std::uint64_t>(path.theta0.size()));
  const std::size_t payload_start = buf.size();
  put_f32_array(buf, path.theta0);
  put_f32_array(buf, path.phi);
  put_f32_array(buf, path.thetaT);
  put_u32(buf, crc32_of(buf, payload_start));
  atomic_write_text(file, buf);

  nlohmann::json side;
  side["source_trajectory"] = source_id;
  if (config) {
    side["fit_config"] = {{"lr", config->lr},           {"tol", config->tol},
                          {"max_iters", config->max_iters}, {"mc_samples", config->mc_samples},
                          {"batch_size", config->batch_size}, {"full_batch", config->full_batch},
                          {"seed", config->seed}};
  }
  atomic_write_text(file.string() + ".json", side.dump(2) + "\n");
}

BezierPath load_path(const std::filesystem::path& file) {
  const std::string buf = read_file(file);
  Cursor cur{buf};
  cur.expect_magic(kMagic);
  const auto version = cur.u32();
  if (version != kVersion)
    throw FormatError("unsupported surrogate version " + std::to_string(version));
  const auto n = cur.u64();
  const std::size_t payload_start = cur.pos;
  BezierPath path;
  path.theta0 = cur.f32_array(n);
  path.phi = cur.f32_array(n);
  path.thetaT = cur.f32_array(n);
  const std::size_t payload_end = cur.pos;
  const auto stored_crc = cur.u32();
  if (!cur.exhausted()) throw FormatError("trailing bytes after CRC");
  if (stored_crc != crc32_of(buf.substr(0, payload_end), payload_start))
    throw FormatError("payload checksum mismatch");
  return path;
}

void write_trace_csv(const OptTrace& trace, const std::filesystem::path& file) {
  std::string out = "iteration,loss,grad_norm\n";
  char buf[96];
  for (std::size_t i = 0; i < trace.loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, trace.loss[i],
                  trace.grad_norm[i]);
    out += buf;
  }
  atomic_write_text(file, out);
}

}  // namespace btm
