#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>

#include "btm/bezier.hpp"
#include "btm/data.hpp"
#include "btm/mlp.hpp"
#include "btm/trajectory.hpp"

namespace btm {

// Measured quantities for the three surrogate guarantees. beta_hat and
// lipschitz_hat are empirical lower bounds of the true constants, so the
// bound checks they feed are reported rather than silently asserted.
struct TheoremReport {
  double kappa = 0.0;
  double beta_hat = 0.0;
  double eps_hat = 0.0;  // ||grad L(theta_T)|| from the expert run
  double avg_loss_bezier = 0.0;
  double avg_loss_gamma = 0.0;
  double bound_rhs = 0.0;  // avg_loss_gamma + beta_hat * kappa^2 / 240
  bool avg_loss_bound_holds = false;
  double bezier_sup_curv = 0.0;  // grid second-difference recovery of kappa
  double sgd_second_diff_max = 0.0;
  double sgd_second_diff_mean = 0.0;
  double sgd_curv_rescaled_max = 0.0;  // max ||Delta_k|| * K^2, unit-time scale
  bool curvature_holds = false;        // rescaled SGD max >= kappa
  double lipschitz_hat = 0.0;
  double pred_dev_sup = 0.0;
  double pred_bound_rhs = 0.0;  // lipschitz_hat * kappa / 8
  double pred_dev_ratio = 0.0;  // pred_dev_sup / pred_bound_rhs (advisory)
  int n_t_samples = 0;
  int n_x_samples = 0;
};

// Max over sampled probe pairs of ||grad(theta + r d) - grad(theta)|| / r;
// exact for quadratic losses, a lower bound on the local smoothness constant
// in general.
double estimate_beta(const std::function<ParamVector(const ParamVector&)>& gradient,
                     std::span<const ParamVector> probe_points, int n_pairs, double radius,
                     std::uint64_t seed);
double estimate_beta(const MlpSpec& spec, const TabularDataset& dataset,
                     std::span<const ParamVector> probe_points, int n_pairs, double radius,
                     std::uint64_t seed);

// Composite-Simpson integral over a uniform t-grid (n_t odd, >= 3).
double grid_integral(const std::function<double(double)>& f, int n_t);

// Guarantee (i): integral of the loss along Phi vs along gamma plus
// beta_hat kappa^2 / 240, both integrals on the same deterministic grid.
TheoremReport check_bound_avg_loss(const Trajectory& traj, const BezierPath& path,
                                   const TabularDataset& dataset, const MlpSpec& spec,
                                   int n_t, std::uint64_t seed);

// Guarantee (ii): constant Bezier curvature vs rescaled discrete SGD
// second differences (both on unit-interval parameterization).
TheoremReport check_curvature(const Trajectory& traj, const BezierPath& path);

// Guarantee (iii): sup over (t, x) of the logit deviation between the two
// paths, against lipschitz_hat * kappa / 8. Advisory ratio, not an assert.
TheoremReport check_prediction_deviation(const Trajectory& traj, const BezierPath& path,
                                         const TabularDataset& dataset, const MlpSpec& spec,
                                         int n_t, int n_x, std::uint64_t seed);

// All three checks on one (trajectory, surrogate) pair.
TheoremReport theorem_report(const Trajectory& traj, const BezierPath& path,
                             const TabularDataset& dataset, const MlpSpec& spec, int n_t,
                             int n_x, std::uint64_t seed);

std::string report_to_json(const TheoremReport& report);
std::string report_to_text(const TheoremReport& report);

inline constexpr int kDefaultTSamples = 257;
inline constexpr int kDefaultXSamples = 64;

}  // namespace btm
