#include <doctest.h>

#include <cmath>
#include <random>

#include "btm/eval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace btm;

TEST_SUITE("eval") {

TEST_CASE("auroc basics and the hand-worked example") {
  Vec s(4), y(4);
  s << 0.1, 0.2, 0.8, 0.9;
  y << 0, 0, 1, 1;
  CHECK(auroc(s, y) == 1.0);

  Vec inv = -s;
  CHECK(auroc(inv, y) == 0.0);

  Vec hand_s(4), hand_y(4);
  hand_s << 0.1, 0.4, 0.35, 0.8;
  hand_y << 0, 0, 1, 1;
  // pairs: (0.35>0.1), (0.35<0.4), (0.8>0.1), (0.8>0.4) -> 3/4
  CHECK(auroc(hand_s, hand_y) == doctest::Approx(0.75).epsilon(1e-15));

  Vec ones(3), one_class(3);
  ones << 0.2, 0.3, 0.4;
  one_class << 1, 1, 1;
  CHECK_THROWS_AS(auroc(ones, one_class), std::invalid_argument);
}

TEST_CASE("auprc basics and the hand-worked example") {
  Vec s(4), y(4);
  s << 0.9, 0.8, 0.2, 0.1;
  y << 1, 1, 0, 0;
  CHECK(auprc(s, y) == 1.0);

  Vec flat = Vec::Constant(10, 0.5);
  Vec labels(10);
  labels << 1, 0, 0, 0, 1, 0, 0, 0, 0, 1;  // prevalence 0.3
  CHECK(auprc(flat, labels) == doctest::Approx(0.3).epsilon(1e-15));

  Vec hand_s(4), hand_y(4);
  hand_s << 0.9, 0.8, 0.7, 0.6;
  hand_y << 1, 0, 1, 0;
  // thresholds: P=1 at R=1/2, then P=2/3 at R=1 -> 0.5 + (1/2)(2/3)
  CHECK(auprc(hand_s, hand_y) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-15));

  Vec none(2), no_pos(2);
  none << 0.1, 0.2;
  no_pos << 0, 0;
  CHECK_THROWS_AS(auprc(none, no_pos), std::invalid_argument);
}

TEST_CASE("metrics agree with brute force on random tied instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(4, 100);
  std::uniform_int_distribution<int> levels(2, 6);
  std::bernoulli_distribution coin(0.35);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    const int k = levels(rng);  // few distinct scores -> many ties
    std::uniform_int_distribution<int> level(0, k - 1);
    Vec s(n), y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(level(rng)) / k;
      y[i] = coin(rng) ? 1.0 : 0.0;
    }
    if (y.sum() == 0.0) y[0] = 1.0;
    if (y.sum() == n) y[n - 1] = 0.0;
    CHECK(auroc(s, y) == doctest::Approx(oracles::auroc_bruteforce(s, y)).epsilon(1e-12));
    CHECK(auprc(s, y) == doctest::Approx(oracles::auprc_bruteforce(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("auroc is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec s(60), y(60);
  for (int i = 0; i < 60; ++i) {
    s[i] = gauss(rng);
    y[i] = i % 3 == 0;
  }
  const double base = auroc(s, y);
  const Vec affine = (2.5 * s).array() + 7.0;
  const Vec expo = s.array().exp();
  const Vec atan_t = s.array().atan();
  CHECK(auroc(affine, y) == doctest::Approx(base).epsilon(1e-15));
  CHECK(auroc(expo, y) == doctest::Approx(base).epsilon(1e-15));
  CHECK(auroc(atan_t, y) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("evaluate_synthetic per-seed behaviour") {
  const auto ds = testsupport::tiny_dataset();
  const MlpSpec spec = testsupport::tiny_spec();
  const SyntheticDataset synth = init_synthetic(ds, 10, InitStrategy::real, 5);

  EvalConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 64;

  SUBCASE("single seed has zero std") {
    cfg.n_seeds = 1;
    const MetricSummary m = evaluate_synthetic(synth, spec, ds.test, cfg);
    CHECK(m.auroc_std == 0.0);
    CHECK(m.auprc_std == 0.0);
    CHECK(m.per_seed.size() == 1);
  }

  SUBCASE("duplicate explicit seeds give identical rows") {
    cfg.seeds = {42, 42};
    const MetricSummary m = evaluate_synthetic(synth, spec, ds.test, cfg);
    REQUIRE(m.per_seed.size() == 2);
    CHECK(m.per_seed[0].auroc == m.per_seed[1].auroc);
    CHECK(m.per_seed[0].auprc == m.per_seed[1].auprc);
  }

  SUBCASE("repeat evaluation is deterministic") {
    cfg.n_seeds = 3;
    const MetricSummary a = evaluate_synthetic(synth, spec, ds.test, cfg);
    const MetricSummary b = evaluate_synthetic(synth, spec, ds.test, cfg);
    CHECK(a.auprc_mean == b.auprc_mean);
    CHECK(a.auroc_mean == b.auroc_mean);
  }

  SUBCASE("the full train split runs through the same protocol") {
    cfg.n_seeds = 2;
    const MetricSummary m =
        evaluate_training_set(ds.train.inputs, ds.train.labels, spec, ds.test, cfg);
    CHECK(m.auroc_mean > 0.5);  // separable generator
  }
}

TEST_CASE("random_coreset selection") {
  const auto ds = testsupport::tiny_dataset();

  SUBCASE("fixed seed reproduces the selection; classes stay balanced") {
    const SyntheticDataset a = random_coreset(ds, 8, 3);
    const SyntheticDataset b = random_coreset(ds, 8, 3);
    CHECK((a.inputs - b.inputs).norm() == 0.0);
    CHECK(a.labels.sum() == 8.0);
    CHECK(a.inputs.rows() == 16);
    CHECK(a.eta_s == 0.01);
  }

  SUBCASE("ipc equal to the class size takes the whole class") {
    double n_pos = ds.train.labels.sum();
    const SyntheticDataset all = random_coreset(ds, static_cast<int>(n_pos), 5);
    // every positive train row must appear exactly once
    Eigen::Index found = 0;
    for (Eigen::Index r = 0; r < ds.train.labels.size(); ++r) {
      if (ds.train.labels[r] != 1.0) continue;
      for (Eigen::Index i = 0; i < all.inputs.rows(); ++i)
        if (all.labels[i] == 1.0 &&
            (all.inputs.row(i) - ds.train.inputs.row(r)).norm() == 0.0) {
          ++found;
          break;
        }
    }
    CHECK(found == static_cast<Eigen::Index>(n_pos));
  }

  SUBCASE("insufficient class members throw") {
    CHECK_THROWS_AS(random_coreset(ds, 100000, 1), std::invalid_argument);
  }
}

}  // TEST_SUITE
