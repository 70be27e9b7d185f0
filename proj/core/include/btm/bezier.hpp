#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "btm/data.hpp"
#include "btm/mlp.hpp"

namespace btm {

// Quadratic Bezier surrogate: Phi(t) = (1-t)^2 theta0 + 2t(1-t) phi + t^2 thetaT.
struct BezierPath {
  ParamVector theta0;
  ParamVector phi;
  ParamVector thetaT;

  void validate() const;
};

struct ControlOptConfig {
  double lr = 1e-2;
  double tol = 1e-5;      // stop when ||g||_2 drops below
  int max_iters = 300;
  int mc_samples = 2;     // t draws per iteration
  int batch_size = 256;
  bool full_batch = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptTrace {
  std::vector<double> loss;       // averaged minibatch loss per iteration
  std::vector<double> grad_norm;  // ||g|| per iteration
  bool converged = false;         // tol reached before max_iters
};

// Loss landscape seen by the path fitter; lets tests swap in closed-form
// objectives for the network loss.
struct PathObjective {
  std::function<double(const ParamVector&)> loss;  // full training loss
  // loss and gradient on one sampled minibatch
  std::function<std::pair<double, ParamVector>(const ParamVector&, std::mt19937_64&)>
      sample_loss_grad;
};

PathObjective dataset_objective(const TabularDataset& dataset, const MlpSpec& spec,
                                int batch_size, bool full_batch);

ParamVector eval_path(const BezierPath& path, double t);

// kappa = 2 ||theta0 - 2 phi + thetaT||; Phi''(t) is constant in t.
double path_curvature(const BezierPath& path);

// Monte-Carlo estimate of the [0,1] loss integral along the path.
double avg_loss_along_path(const BezierPath& path,
                           const std::function<double(const ParamVector&)>& loss,
                           int n_samples, std::uint64_t seed);
double avg_loss_along_path(const BezierPath& path, const TabularDataset& dataset,
                           const MlpSpec& spec, int n_samples, std::uint64_t seed);

// Midpoint-initialized control-point descent: each iteration averages
// 2t(1-t)-weighted minibatch gradients at mc_samples path positions.
std::pair<BezierPath, OptTrace> optimize_control_point(const ParamVector& theta0,
                                                       const ParamVector& thetaT,
                                                       const PathObjective& objective,
                                                       const ControlOptConfig& config);
std::pair<BezierPath, OptTrace> optimize_control_point(const ParamVector& theta0,
                                                       const ParamVector& thetaT,
                                                       const TabularDataset& dataset,
                                                       const MlpSpec& spec,
                                                       const ControlOptConfig& config);

// Binary container "BTMB" (three f32 vectors + CRC32); sidecar JSON records
// the source trajectory and fit config.
void save_path(const BezierPath& path, const std::filesystem::path& file,
               const std::string& source_id = "", const ControlOptConfig* config = nullptr);
BezierPath load_path(const std::filesystem::path& file);

void write_trace_csv(const OptTrace& trace, const std::filesystem::path& file);

}  // namespace btm
