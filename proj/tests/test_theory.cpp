#include <doctest.h>

#include <cmath>

#include "btm/bezier.hpp"
#include "btm/theory.hpp"
#include "test_support.hpp"

using namespace btm;

namespace {

Trajectory straight_trajectory(const ParamVector& a, const ParamVector& b, int segments) {
  Trajectory t;
  t.spec = testsupport::tiny_spec();
  for (int k = 0; k <= segments; ++k) {
    const double w = static_cast<double>(k) / segments;
    t.checkpoints.push_back((1.0 - w) * a + w * b);
    t.train_losses.push_back(0.0);
  }
  return t;
}

}  // namespace

TEST_SUITE("theory") {

TEST_CASE("estimate_beta is exact for quadratic losses") {
  const double lambda = 3.75;
  auto gradient = [lambda](const ParamVector& theta) { return ParamVector(lambda * theta); };
  std::vector<ParamVector> probes{ParamVector::Constant(6, 1.0),
                                  ParamVector::Constant(6, -2.0)};

  const double beta1 = estimate_beta(gradient, probes, 5, 1e-2, 3);
  CHECK(beta1 == doctest::Approx(lambda).epsilon(1e-8));

  // radius independence on a quadratic
  const double beta2 = estimate_beta(gradient, probes, 5, 2e-2, 3);
  CHECK(beta2 == doctest::Approx(beta1).epsilon(1e-8));
}

TEST_CASE("estimate_beta on a trained net is positive and seed-stable within 20%") {
  const auto ds = testsupport::tiny_dataset();
  const Trajectory traj = testsupport::tiny_expert(ds, 31, 10);
  std::vector<ParamVector> probes{traj.checkpoints.front(), traj.checkpoints.back()};
  const double a = estimate_beta(testsupport::tiny_spec(), ds, probes, 8, 1e-2, 1);
  const double b = estimate_beta(testsupport::tiny_spec(), ds, probes, 8, 1e-2, 2);
  CHECK(a > 0.0);
  CHECK(std::abs(a - b) / std::max(a, b) < 0.2);
}

TEST_CASE("grid_integral reproduces the proof constant 1/30") {
  const double q = grid_integral([](double t) { return t * t * (1 - t) * (1 - t); },
                                 kDefaultTSamples);
  CHECK(std::abs(q - 1.0 / 30.0) <= 1e-10);
}

TEST_CASE("grid_integral converges: doubling the grid moves smooth integrals < 1%") {
  auto f = [](double t) { return std::exp(-t) * std::cos(5.0 * t) + 2.0; };
  const double a = grid_integral(f, 65);
  const double b = grid_integral(f, 129);
  CHECK(std::abs(a - b) / std::abs(b) < 0.01);
}

TEST_CASE("check_bound_avg_loss holds with equality for coincident straight paths") {
  const auto ds = testsupport::tiny_dataset();
  const MlpSpec spec = testsupport::tiny_spec();
  const ParamVector a = init_params(spec, 1);
  const ParamVector b = init_params(spec, 2);
  const Trajectory traj = straight_trajectory(a, b, 1);  // gamma is the chord
  const BezierPath path{a, 0.5 * (a + b), b};            // Phi is the same chord

  const TheoremReport r = check_bound_avg_loss(traj, path, ds, spec, 65, 5);
  CHECK(r.kappa <= 1e-9);
  CHECK(r.avg_loss_bezier == doctest::Approx(r.avg_loss_gamma).epsilon(1e-9));
  CHECK(r.avg_loss_bound_holds);
}

TEST_CASE("check_bound_avg_loss rejects mismatched endpoints") {
  const auto ds = testsupport::tiny_dataset();
  const MlpSpec spec = testsupport::tiny_spec();
  const ParamVector a = init_params(spec, 3);
  const ParamVector b = init_params(spec, 4);
  const Trajectory traj = straight_trajectory(a, b, 2);
  BezierPath path{a, 0.5 * (a + b), b};
  path.thetaT.array() += 1.0;
  CHECK_THROWS_AS(check_bound_avg_loss(traj, path, ds, spec, 65, 5),
                  std::invalid_argument);
}

TEST_CASE("check_curvature: zero for straight data, grid recovery of kappa") {
  const MlpSpec spec = testsupport::tiny_spec();
  const ParamVector a = init_params(spec, 5);
  const ParamVector b = init_params(spec, 6);

  SUBCASE("straight checkpoints and midpoint control point both measure zero") {
    const Trajectory traj = straight_trajectory(a, b, 4);
    const BezierPath path{a, 0.5 * (a + b), b};
    const TheoremReport r = check_curvature(traj, path);
    CHECK(r.sgd_second_diff_max <= 1e-9);
    CHECK(r.kappa <= 1e-9);
  }

  SUBCASE("grid second differences recover kappa to 1e-6 relative") {
    const Trajectory traj = straight_trajectory(a, b, 4);
    BezierPath path{a, 0.5 * (a + b), b};
    path.phi.array() += 0.37;  // bend the curve
    const TheoremReport r = check_curvature(traj, path);
    CHECK(r.bezier_sup_curv ==
          doctest::Approx(path_curvature(path)).epsilon(1e-6));
  }
}

TEST_CASE("check_prediction_deviation on coincident paths reports zero everywhere") {
  const auto ds = testsupport::tiny_dataset();
  const MlpSpec spec = testsupport::tiny_spec();
  const ParamVector a = init_params(spec, 7);
  const ParamVector b = init_params(spec, 8);
  const Trajectory traj = straight_trajectory(a, b, 1);
  const BezierPath path{a, 0.5 * (a + b), b};

  const TheoremReport r = check_prediction_deviation(traj, path, ds, spec, 17, 16, 3);
  CHECK(r.pred_dev_sup <= 1e-9);
  CHECK(r.pred_bound_rhs <= 1e-6);
  CHECK(r.lipschitz_hat > 0.0);  // distinct points along the path still move outputs
}

TEST_CASE("theorem_report on a trained pair is finite and serializable") {
  const auto ds = testsupport::tiny_dataset();
  const MlpSpec spec = testsupport::tiny_spec();
  const Trajectory traj = testsupport::tiny_expert(ds, 91, 12);
  ControlOptConfig fit;
  fit.max_iters = 60;
  fit.batch_size = 64;
  auto [path, trace] =
      optimize_control_point(traj.checkpoints.front(), traj.checkpoints.back(), ds, spec, fit);

  const TheoremReport r = theorem_report(traj, path, ds, spec, 65, 16, 9);
  CHECK(std::isfinite(r.kappa));
  CHECK(r.beta_hat > 0.0);
  CHECK(std::isfinite(r.pred_dev_ratio));
  CHECK(r.sgd_curv_rescaled_max > 0.0);

  const std::string json_text = report_to_json(r);
  CHECK(json_text.find("\"kappa\"") != std::string::npos);
  const std::string text = report_to_text(r);
  CHECK(text.find("curvature") != std::string::npos);
}

}  // TEST_SUITE
