#include "btm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "btm/io.hpp"

namespace btm {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;

// distinct streams derived from one seed
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Batch gather_batch(const DataSplit& split, const std::vector<int>& order, std::size_t from,
                   std::size_t count) {
  Batch b;
  b.inputs.resize(static_cast<Eigen::Index>(count), split.inputs.cols());
  b.labels.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    b.inputs.row(static_cast<Eigen::Index>(i)) = split.inputs.row(order[from + i]);
    b.labels[static_cast<Eigen::Index>(i)] = split.labels[order[from + i]];
  }
  return b;
}

}  // namespace

void SgdConfig::validate() const {
  if (lr < 0.0) throw std::invalid_argument("expert lr must be nonnegative");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("expert momentum must be in [0,1)");
  if (epochs <= 0 || batch_size <= 0) throw std::invalid_argument("epochs/batch_size must be positive");
  if (snapshot_every <= 0 || snapshot_every > epochs)
    throw std::invalid_argument("snapshot_every must be in [1, epochs]");
}

Trajectory train_expert(const TabularDataset& dataset, const MlpSpec& spec,
                        const SgdConfig& config) {
  spec.validate();
  config.validate();
  if (dataset.train.inputs.rows() == 0) throw std::invalid_argument("empty train split");
  if (dataset.feature_dim() != spec.input_dim())
    throw std::invalid_argument("dataset feature dim does not match spec");

  const Batch full{dataset.train.inputs, dataset.train.labels};
  Trajectory traj;
  traj.spec = spec;
  traj.config = config;

  ParamVector params = init_params(spec, config.seed);
  ParamVector velocity = ParamVector::Zero(params.size());
  std::mt19937_64 shuffle_rng(mix_seed(config.seed, 1));
  std::mt19937_64 dropout_rng(mix_seed(config.seed, 2));
  std::mt19937_64* drop = spec.dropout_rate > 0.0 ? &dropout_rng : nullptr;

  traj.checkpoints.push_back(params);
  traj.train_losses.push_back(loss_value(spec, params, full));

  const auto n = static_cast<std::size_t>(dataset.train.inputs.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t at = 0; at < n; at += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, n - at);
      const Batch batch = gather_batch(dataset.train, order, at, count);
      const ParamVector grad = grad_params(spec, params, batch, drop);
      sgd_step(params, velocity, grad, config.lr, config.momentum);
    }
    if (!params.allFinite())
      throw DivergenceError("expert diverged at epoch " + std::to_string(epoch), epoch);
    if (epoch % config.snapshot_every == 0) {
      const double loss = loss_value(spec, params, full);
      if (!std::isfinite(loss))
        throw DivergenceError("expert loss non-finite at epoch " + std::to_string(epoch),
                              epoch);
      traj.checkpoints.push_back(params);
      traj.train_losses.push_back(loss);
    }
  }
  traj.endpoint_grad_norm = grad_params(spec, params, full).norm();
  return traj;
}

ParamVector interp_gamma(const Trajectory& traj, double t) {
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("t must be in [0,1]");
  const int K = traj.segments();
  if (K < 0 || traj.checkpoints.empty()) throw std::invalid_argument("empty trajectory");
  if (K == 0) return traj.checkpoints.front();
  const double u = t * K;
  const int k = std::min(static_cast<int>(std::floor(u)), K - 1);
  const double w = u - k;
  return (1.0 - w) * traj.checkpoints[k] + w * traj.checkpoints[k + 1];
}

std::vector<double> second_differences(const Trajectory& traj) {
  if (traj.checkpoints.size() < 3)
    throw std::invalid_argument("second differences need at least 3 checkpoints");
  std::vector<double> out;
  out.reserve(traj.checkpoints.size() - 2);
  for (std::size_t k = 1; k + 1 < traj.checkpoints.size(); ++k)
    out.push_back((traj.checkpoints[k + 1] - 2.0 * traj.checkpoints[k] +
                   traj.checkpoints[k - 1])
                      .norm());
  return out;
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  if (traj.checkpoints.empty()) throw std::invalid_argument("nothing to save");
  const auto n_params = static_cast<std::uint64_t>(traj.checkpoints.front().size());

  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u64(buf, n_params);
  put_u32(buf, static_cast<std::uint32_t>(traj.checkpoints.size()));
  const std::size_t payload_start = buf.size();
  for (const auto& ck : traj.checkpoints) {
    if (static_cast<std::uint64_t>(ck.size()) != n_params)
      throw std::invalid_argument("inconsistent checkpoint sizes");
    put_f32_array(buf, ck);
  }
  Vec losses(static_cast<Eigen::Index>(traj.train_losses.size()));
  for (std::size_t i = 0; i < traj.train_losses.size(); ++i)
    losses[static_cast<Eigen::Index>(i)] = traj.train_losses[i];
  put_f32_array(buf, losses);
  put_u32(buf, crc32_of(buf, payload_start));
  atomic_write_text(path, buf);

  nlohmann::json side;
  side["spec"] = {{"layer_widths", traj.spec.layer_widths},
                  {"activation", "relu"},
                  {"dropout_rate", traj.spec.dropout_rate},
                  {"seed", traj.spec.seed}};
  side["config"] = {{"lr", traj.config.lr},
                    {"momentum", traj.config.momentum},
                    {"epochs", traj.config.epochs},
                    {"batch_size", traj.config.batch_size},
                    {"snapshot_every", traj.config.snapshot_every},
                    {"seed", traj.config.seed}};
  side["endpoint_grad_norm"] = traj.endpoint_grad_norm;
  atomic_write_text(path.string() + ".json", side.dump(2) + "\n");
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  const std::string buf = read_file(path);
  Cursor cur{buf};
  cur.expect_magic(kMagic);
  const auto version = cur.u32();
  if (version != kVersion)
    throw FormatError("unsupported trajectory version " + std::to_string(version));
  const auto n_params = cur.u64();
  const auto n_checkpoints = cur.u32();
  const std::size_t payload_start = cur.pos;

  Trajectory traj;
  traj.checkpoints.reserve(n_checkpoints);
  for (std::uint32_t i = 0; i < n_checkpoints; ++i)
    traj.checkpoints.push_back(cur.f32_array(n_params));
  const Vec losses = cur.f32_array(n_checkpoints);
  traj.train_losses.assign(losses.data(), losses.data() + losses.size());
  const std::size_t payload_end = cur.pos;
  const auto stored_crc = cur.u32();
  if (!cur.exhausted()) throw FormatError("trailing bytes after CRC");
  if (stored_crc != crc32_of(buf.substr(0, payload_end), payload_start))
    throw FormatError("payload checksum mismatch");

  const auto side_path = path.string() + ".json";
  const auto side = nlohmann::json::parse(read_file(side_path));
  traj.spec.layer_widths = side.at("spec").at("layer_widths").get<std::vector<int>>();
  traj.spec.dropout_rate = side.at("spec").at("dropout_rate").get<double>();
  traj.spec.seed = side.at("spec").at("seed").get<std::uint64_t>();
  const auto& cfg = side.at("config");
  traj.config.lr = cfg.at("lr").get<double>();
  traj.config.momentum = cfg.at("momentum").get<double>();
  traj.config.epochs = cfg.at("epochs").get<int>();
  traj.config.batch_size = cfg.at("batch_size").get<int>();
  traj.config.snapshot_every = cfg.at("snapshot_every").get<int>();
  traj.config.seed = cfg.at("seed").get<std::uint64_t>();
  traj.endpoint_grad_norm = side.at("endpoint_grad_norm").get<double>();
  if (traj.spec.param_count() != n_params)
    throw FormatError("sidecar spec does not match checkpoint size");
  return traj;
}

}  // namespace btm
