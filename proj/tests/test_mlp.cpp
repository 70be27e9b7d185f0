#include <doctest.h>

#include <cmath>
#include <random>

#include "btm/mlp.hpp"
#include "oracles.hpp"

using namespace btm;

TEST_SUITE("mlp") {

TEST_CASE("init_params is deterministic and zero-biased") {
  MlpSpec spec{.layer_widths = {4, 3, 1}};
  const ParamVector a = init_params(spec, 42);
  const ParamVector b = init_params(spec, 42);
  CHECK((a.array() == b.array()).all());

  const ParamVector c = init_params(spec, 43);
  CHECK((a - c).norm() > 0.0);

  // layout: W0 (12), b0 (3), W1 (3), b1 (1)
  CHECK(a.segment(12, 3).norm() == 0.0);
  CHECK(a[15 + 3] == 0.0);
  CHECK(a.size() == 19);
  CHECK(spec.param_count() == 19);
}

TEST_CASE("forward of the zero network is 0.5 and rows are independent") {
  MlpSpec spec{.layer_widths = {3, 2, 1}};
  const ParamVector zero = ParamVector::Zero(static_cast<Eigen::Index>(spec.param_count()));
  Mat x(4, 3);
  x << 1, 2, 3, -1, 0, 1, 0, 0, 0, 5, 5, 5;
  const Vec p = forward(spec, zero, x);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(0.5));

  Mat rep(3, 3);
  rep << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  const ParamVector w = init_params(spec, 7);
  const Vec q = forward(spec, w, rep);
  CHECK(q[0] == q[1]);
  CHECK(q[1] == q[2]);
}

TEST_CASE("forward matches a hand-evaluated 2-2-1 network") {
  MlpSpec spec{.layer_widths = {2, 2, 1}};
  ParamVector p(9);
  // W0 rows (1,-1) and (0.5,2); b0 (0.1,-0.2); W1 (1.5,-0.5); b1 0.3
  p << 1.0, -1.0, 0.5, 2.0, 0.1, -0.2, 1.5, -0.5, 0.3;
  Mat x(1, 2);
  x << 1.0, 0.0;
  // z0 = (1.1, 0.3), relu keeps both, logit = 1.65 - 0.15 + 0.3 = 1.8
  const double expected = 1.0 / (1.0 + std::exp(-1.8));
  CHECK(forward(spec, p, x)[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(forward_logits(spec, p, x)[0] == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("bce_loss analytic values") {
  Vec half(2), labels(2);
  half << 0.5, 0.5;
  labels << 1.0, 0.0;
  CHECK(bce_loss(half, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Vec exact(2);
  exact << 1.0, 0.0;  // clamped internally
  CHECK(bce_loss(exact, labels) == doctest::Approx(0.0).epsilon(1e-10));

  Vec p(2);
  p << 0.9, 0.1;
  CHECK(bce_loss(p, labels) == doctest::Approx(-std::log(0.9)).epsilon(1e-12));

  Vec bad(3);
  CHECK_THROWS_AS(bce_loss(bad, labels), std::invalid_argument);
}

TEST_CASE("grad_params matches central finite differences on a 4-3-1 net") {
  std::mt19937_64 rng(1);
  MlpSpec spec{.layer_widths = {4, 3, 1}};
  const ParamVector theta = init_params(spec, 5);
  const Batch batch = oracles::random_batch(rng, 8, 4);

  const ParamVector g = grad_params(spec, theta, batch);
  const Vec fd = oracles::fd_gradient(
      [&](const Vec& t) { return loss_value(spec, t, batch); }, theta);
  CHECK(oracles::rel_error(g, fd) <= 1e-5);
}

TEST_CASE("grad_params is invariant to duplicating batch rows") {
  std::mt19937_64 rng(2);
  MlpSpec spec{.layer_widths = {3, 4, 1}};
  const ParamVector theta = init_params(spec, 9);
  const Batch batch = oracles::random_batch(rng, 5, 3);

  Batch doubled;
  doubled.inputs.resize(10, 3);
  doubled.labels.resize(10);
  doubled.inputs << batch.inputs, batch.inputs;
  doubled.labels << batch.labels, batch.labels;
  const ParamVector a = grad_params(spec, theta, batch);
  const ParamVector b = grad_params(spec, theta, doubled);
  CHECK((a - b).norm() <= 1e-14 * std::max(1.0, a.norm()));
}

TEST_CASE("zero network with balanced labels has zero output-bias gradient") {
  MlpSpec spec{.layer_widths = {2, 2, 1}};
  const ParamVector zero = ParamVector::Zero(9);
  Batch batch;
  batch.inputs.resize(4, 2);
  batch.inputs << 1, 1, -1, -1, 2, 0, -2, 0;
  batch.labels.resize(4);
  batch.labels << 1, 0, 1, 0;
  const ParamVector g = grad_params(spec, zero, batch);
  CHECK(g[8] == doctest::Approx(0.0).epsilon(1e-15));  // b1 is the last entry
}

TEST_CASE("grad_inputs_of_inner_product: zero direction, finite differences, linearity") {
  std::mt19937_64 rng(3);
  MlpSpec spec{.layer_widths = {4, 3, 1}};
  const ParamVector theta = init_params(spec, 11);
  const Batch batch = oracles::random_batch(rng, 6, 4);
  const Eigen::Index n = theta.size();

  SUBCASE("v = 0 gives the zero matrix") {
    const Mat g = grad_inputs_of_inner_product(spec, theta, batch, ParamVector::Zero(n));
    CHECK(g.norm() == 0.0);
  }

  SUBCASE("matches finite differences of the inner product") {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ParamVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    const Mat got = grad_inputs_of_inner_product(spec, theta, batch, v);

    auto s_of = [&](const Mat& x) {
      return grad_params(spec, theta, Batch{x, batch.labels}).dot(v);
    };
    Mat fd(batch.inputs.rows(), batch.inputs.cols());
    Mat x = batch.inputs;
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double keep = x(i, j);
        x(i, j) = keep + h;
        const double hi = s_of(x);
        x(i, j) = keep - h;
        const double lo = s_of(x);
        x(i, j) = keep;
        fd(i, j) = (hi - lo) / (2.0 * h);
      }
    const double denom = std::max(fd.norm(), 1e-12);
    CHECK((got - fd).norm() / denom <= 1e-4);
  }

  SUBCASE("linear in v") {
    std::normal_distribution<double> gauss(0.0, 1.0);
    ParamVector v1(n), v2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v1[i] = gauss(rng);
      v2[i] = gauss(rng);
    }
    const Mat sum = grad_inputs_of_inner_product(spec, theta, batch, v1 + v2);
    const Mat parts = grad_inputs_of_inner_product(spec, theta, batch, v1) +
                      grad_inputs_of_inner_product(spec, theta, batch, v2);
    CHECK((sum - parts).norm() <= 1e-10 * std::max(1.0, parts.norm()));

    const Mat scaled = grad_inputs_of_inner_product(spec, theta, batch, 3.5 * v1);
    const Mat base = grad_inputs_of_inner_product(spec, theta, batch, v1);
    CHECK((scaled - 3.5 * base).norm() <= 1e-10 * std::max(1.0, base.norm()));
  }
}

TEST_CASE("gradient exactness property over random small nets") {
  std::mt19937_64 rng(20240);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    MlpSpec spec = oracles::random_small_spec(rng);
    REQUIRE(spec.param_count() <= 200);
    const ParamVector theta = init_params(spec, 1000 + trial);
    std::uniform_int_distribution<int> rows(2, 10);
    const Batch batch = oracles::random_batch(rng, rows(rng), spec.input_dim());

    const ParamVector g = grad_params(spec, theta, batch);
    const Vec fd = oracles::fd_gradient(
        [&](const Vec& t) { return loss_value(spec, t, batch); }, theta);
    CHECK(oracles::rel_error(g, fd) <= 1e-4);

    ParamVector v(theta.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const Mat gi = grad_inputs_of_inner_product(spec, theta, batch, v);
    auto s_of = [&](const Mat& x) {
      return grad_params(spec, theta, Batch{x, batch.labels}).dot(v);
    };
    Mat x = batch.inputs;
    Mat fdx(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double keep = x(i, j);
        x(i, j) = keep + 1e-5;
        const double hi = s_of(x);
        x(i, j) = keep - 1e-5;
        const double lo = s_of(x);
        x(i, j) = keep;
        fdx(i, j) = (hi - lo) / 2e-5;
      }
    CHECK((gi - fdx).norm() / std::max(fdx.norm(), 1e-12) <= 1e-4);
  }
}

TEST_CASE("repeated gradient calls are bit-identical") {
  std::mt19937_64 rng(4);
  MlpSpec spec{.layer_widths = {5, 4, 1}};
  const ParamVector theta = init_params(spec, 21);
  const Batch batch = oracles::random_batch(rng, 7, 5);
  const ParamVector a = grad_params(spec, theta, batch);
  const ParamVector b = grad_params(spec, theta, batch);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("sgd_step recurrences") {
  ParamVector p = ParamVector::Constant(3, 1.0);
  ParamVector vel = ParamVector::Zero(3);
  ParamVector g = ParamVector::Constant(3, 2.0);

  SUBCASE("momentum zero is plain descent") {
    sgd_step(p, vel, g, 0.1, 0.0);
    CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 2.0));
  }

  SUBCASE("zero gradient with zero velocity is a no-op") {
    sgd_step(p, vel, ParamVector::Zero(3), 0.1, 0.9);
    CHECK(p[0] == 1.0);
  }

  SUBCASE("two momentum steps displace by lr*g*(1 + 1.9)") {
    sgd_step(p, vel, g, 0.1, 0.9);
    sgd_step(p, vel, g, 0.1, 0.9);
    CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 2.0 * (1.0 + 1.9)).epsilon(1e-12));
  }
}

TEST_CASE("dimension mismatches throw") {
  MlpSpec spec{.layer_widths = {4, 3, 1}};
  const ParamVector theta = init_params(spec, 1);
  Mat x(2, 3);  // wrong width
  x.setZero();
  CHECK_THROWS_AS(forward(spec, theta, x), std::invalid_argument);
  CHECK_THROWS_AS(forward(spec, ParamVector::Zero(5), Mat::Zero(2, 4)),
                  std::invalid_argument);
  MlpSpec bad{.layer_widths = {4, 2}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

}  // TEST_SUITE
