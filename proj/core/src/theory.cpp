#include "btm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <nlohmann/json.hpp>

namespace btm {

namespace {

void check_endpoints(const Trajectory& traj, const BezierPath& path) {
  if (traj.checkpoints.empty()) throw std::invalid_argument("empty trajectory");
  const double d0 = (traj.checkpoints.front() - path.theta0).norm();
  const double dT = (traj.checkpoints.back() - path.thetaT).norm();
  // f32 round-trips pass through here, so the gate is absolute-plus-relative
  const double scale = std::max(1.0, traj.checkpoints.back().norm());
  if (d0 > 1e-6 * scale || dT > 1e-6 * scale)
    throw std::invalid_argument("surrogate endpoints do not match trajectory endpoints");
}

std::vector<ParamVector> path_probes(const Trajectory& traj, const BezierPath& path,
                                     int per_path) {
  std::vector<ParamVector> probes;
  probes.reserve(static_cast<std::size_t>(2 * per_path));
  for (int i = 0; i < per_path; ++i) {
    const double t = per_path == 1 ? 0.5 : static_cast<double>(i) / (per_path - 1);
    probes.push_back(eval_path(path, t));
    probes.push_back(interp_gamma(traj, t));
  }
  return probes;
}

}  // namespace

double estimate_beta(const std::function<ParamVector(const ParamVector&)>& gradient,
                     std::span<const ParamVector> probe_points, int n_pairs, double radius,
                     std::uint64_t seed) {
  if (probe_points.empty()) throw std::invalid_argument("need at least one probe point");
  if (n_pairs < 1 || radius <= 0.0)
    throw std::invalid_argument("n_pairs must be >= 1 and radius positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double beta = 0.0;
  for (const auto& theta : probe_points) {
    const ParamVector g0 = gradient(theta);
    for (int p = 0; p < n_pairs; ++p) {
      ParamVector dir(theta.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = gauss(rng);
      dir *= radius / std::max(dir.norm(), 1e-300);
      const ParamVector g1 = gradient(theta + dir);
      beta = std::max(beta, (g1 - g0).norm() / dir.norm());
    }
  }
  return beta;
}

double estimate_beta(const MlpSpec& spec, const TabularDataset& dataset,
                     std::span<const ParamVector> probe_points, int n_pairs, double radius,
                     std::uint64_t seed) {
  const Batch full{dataset.train.inputs, dataset.train.labels};
  auto gradient = [&](const ParamVector& theta) { return grad_params(spec, theta, full); };
  return estimate_beta(gradient, probe_points, n_pairs, radius, seed);
}

double grid_integral(const std::function<double(double)>& f, int n_t) {
  if (n_t < 3 || n_t % 2 == 0)
    throw std::invalid_argument("grid_integral needs an odd point count >= 3");
  const double h = 1.0 / (n_t - 1);
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < n_t - 1; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

TheoremReport check_bound_avg_loss(const Trajectory& traj, const BezierPath& path,
                                   const TabularDataset& dataset, const MlpSpec& spec,
                                   int n_t, std::uint64_t seed) {
  check_endpoints(traj, path);
  const Batch full{dataset.train.inputs, dataset.train.labels};
  auto loss = [&](const ParamVector& theta) { return loss_value(spec, theta, full); };

  TheoremReport r;
  r.n_t_samples = n_t;
  r.kappa = path_curvature(path);
  r.eps_hat = traj.endpoint_grad_norm;
  r.avg_loss_bezier = grid_integral([&](double t) { return loss(eval_path(path, t)); }, n_t);
  r.avg_loss_gamma = grid_integral([&](double t) { return loss(interp_gamma(traj, t)); }, n_t);
  const auto probes = path_probes(traj, path, 9);
  r.beta_hat = estimate_beta(spec, dataset, probes, 4, 1e-2, seed);
  r.bound_rhs = r.avg_loss_gamma + r.beta_hat * r.kappa * r.kappa / 240.0;
  r.avg_loss_bound_holds = r.avg_loss_bezier <= r.bound_rhs;
  return r;
}

TheoremReport check_curvature(const Trajectory& traj, const BezierPath& path) {
  TheoremReport r;
  r.kappa = path_curvature(path);

  // Phi'' is constant, so uniform-grid second differences recover kappa.
  const int grid = 33;
  const double h = 1.0 / (grid - 1);
  double sup = 0.0;
  for (int i = 1; i + 1 < grid; ++i) {
    const ParamVector dd = eval_path(path, (i + 1) * h) - 2.0 * eval_path(path, i * h) +
                           eval_path(path, (i - 1) * h);
    sup = std::max(sup, dd.norm() / (h * h));
  }
  r.bezier_sup_curv = sup;

  const auto diffs = second_differences(traj);
  const double max_dd = *std::max_element(diffs.begin(), diffs.end());
  double mean_dd = 0.0;
  for (double d : diffs) mean_dd += d;
  mean_dd /= static_cast<double>(diffs.size());
  const double k2 = static_cast<double>(traj.segments()) * traj.segments();
  r.sgd_second_diff_max = max_dd;
  r.sgd_second_diff_mean = mean_dd;
  r.sgd_curv_rescaled_max = max_dd * k2;
  r.curvature_holds = r.sgd_curv_rescaled_max >= r.kappa;
  return r;
}

TheoremReport check_prediction_deviation(const Trajectory& traj, const BezierPath& path,
                                         const TabularDataset& dataset, const MlpSpec& spec,
                                         int n_t, int n_x, std::uint64_t seed) {
  check_endpoints(traj, path);
  if (n_t < 2 || n_x < 1) throw std::invalid_argument("need n_t >= 2 and n_x >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, dataset.train.inputs.rows() - 1);
  Mat xs(std::min<Eigen::Index>(n_x, dataset.train.inputs.rows()), dataset.feature_dim());
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    xs.row(i) = dataset.train.inputs.row(pick(rng));

  TheoremReport r;
  r.kappa = path_curvature(path);
  r.n_t_samples = n_t;
  r.n_x_samples = static_cast<int>(xs.rows());

  std::vector<ParamVector> thetas;  // grid points on both paths, for L_f pairs
  double dev_sup = 0.0;
  for (int i = 0; i < n_t; ++i) {
    const double t = static_cast<double>(i) / (n_t - 1);
    const ParamVector a = eval_path(path, t);
    const ParamVector b = interp_gamma(traj, t);
    const Vec fa = forward_logits(spec, a, xs);
    const Vec fb = forward_logits(spec, b, xs);
    dev_sup = std::max(dev_sup, (fa - fb).cwiseAbs().maxCoeff());
    thetas.push_back(a);
    thetas.push_back(b);
  }
  r.pred_dev_sup = dev_sup;

  // Lipschitz lower bound over sampled theta pairs (pre-sigmoid outputs,
  // matching the assumption the theorem places on the model map).
  double lf = 0.0;
  std::uniform_int_distribution<std::size_t> pair(0, thetas.size() - 1);
  const int n_pairs = 4 * static_cast<int>(thetas.size());
  for (int p = 0; p < n_pairs; ++p) {
    const auto i = pair(rng);
    const auto j = pair(rng);
    const double dist = (thetas[i] - thetas[j]).norm();
    if (dist < 1e-12) continue;
    const Vec fi = forward_logits(spec, thetas[i], xs);
    const Vec fj = forward_logits(spec, thetas[j], xs);
    lf = std::max(lf, (fi - fj).cwiseAbs().maxCoeff() / dist);
  }
  r.lipschitz_hat = lf;
  r.pred_bound_rhs = lf * r.kappa / 8.0;
  r.pred_dev_ratio = r.pred_bound_rhs > 0.0
                         ? r.pred_dev_sup / r.pred_bound_rhs
                         : (r.pred_dev_sup == 0.0 ? 0.0
                                                  : std::numeric_limits<double>::infinity());
  return r;
}

TheoremReport theorem_report(const Trajectory& traj, const BezierPath& path,
                             const TabularDataset& dataset, const MlpSpec& spec, int n_t,
                             int n_x, std::uint64_t seed) {
  TheoremReport r = check_bound_avg_loss(traj, path, dataset, spec, n_t, seed);
  const TheoremReport c = check_curvature(traj, path);
  r.bezier_sup_curv = c.bezier_sup_curv;
  r.sgd_second_diff_max = c.sgd_second_diff_max;
  r.sgd_second_diff_mean = c.sgd_second_diff_mean;
  r.sgd_curv_rescaled_max = c.sgd_curv_rescaled_max;
  r.curvature_holds = c.curvature_holds;
  const TheoremReport p = check_prediction_deviation(traj, path, dataset, spec,
                                                     std::min(n_t, 65), n_x, seed + 1);
  r.lipschitz_hat = p.lipschitz_hat;
  r.pred_dev_sup = p.pred_dev_sup;
  r.pred_bound_rhs = p.pred_bound_rhs;
  r.pred_dev_ratio = p.pred_dev_ratio;
  r.n_x_samples = p.n_x_samples;
  return r;
}

std::string report_to_json(const TheoremReport& r) {
  nlohmann::json j;
  j["kappa"] = r.kappa;
  j["beta_hat"] = r.beta_hat;
  j["eps_hat"] = r.eps_hat;
  j["avg_loss_bezier"] = r.avg_loss_bezier;
  j["avg_loss_gamma"] = r.avg_loss_gamma;
  j["bound_rhs"] = r.bound_rhs;
  j["avg_loss_bound_holds"] = r.avg_loss_bound_holds;
  j["bezier_sup_curv"] = r.bezier_sup_curv;
  j["sgd_second_diff_max"] = r.sgd_second_diff_max;
  j["sgd_second_diff_mean"] = r.sgd_second_diff_mean;
  j["sgd_curv_rescaled_max"] = r.sgd_curv_rescaled_max;
  j["curvature_holds"] = r.curvature_holds;
  j["lipschitz_hat"] = r.lipschitz_hat;
  j["pred_dev_sup"] = r.pred_dev_sup;
  j["pred_bound_rhs"] = r.pred_bound_rhs;
  j["pred_dev_ratio"] = r.pred_dev_ratio;
  j["n_t_samples"] = r.n_t_samples;
  j["n_x_samples"] = r.n_x_samples;
  return j.dump(2) + "\n";
}

std::string report_to_text(const TheoremReport& r) {
  char buf[256];
  std::string out;
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
    out += '\n';
  };
  line("kappa                    %.6g", r.kappa);
  line("beta_hat                 %.6g   eps_hat %.6g", r.beta_hat, r.eps_hat);
  line("(i)   avg loss: bezier   %.6g  vs  gamma + beta*kappa^2/240 = %.6g  [%s]",
       r.avg_loss_bezier, r.bound_rhs, r.avg_loss_bound_holds ? "holds" : "advisory");
  line("(ii)  curvature: bezier  %.6g  vs  rescaled SGD max %.6g  [%s]", r.kappa,
       r.sgd_curv_rescaled_max, r.curvature_holds ? "holds" : "advisory");
  line("(iii) pred dev sup       %.6g  vs  L_f*kappa/8 = %.6g  (ratio %.3g, advisory)",
       r.pred_dev_sup, r.pred_bound_rhs, r.pred_dev_ratio);
  return out;
}

}  // namespace btm
