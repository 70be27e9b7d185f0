#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "btm/io.hpp"
#include "btm/trajectory.hpp"
#include "test_support.hpp"

using namespace btm;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "btm_traj_tests";
  fs::create_directories(dir);
  return dir / name;
}

Trajectory synthetic_trajectory(const std::vector<ParamVector>& checkpoints) {
  Trajectory t;
  t.spec = testsupport::tiny_spec();
  t.checkpoints = checkpoints;
  t.train_losses.assign(checkpoints.size(), 0.0);
  return t;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("checkpoint count follows epochs / snapshot_every") {
  const auto ds = testsupport::tiny_dataset();
  SgdConfig cfg;
  cfg.lr = 0.02;
  cfg.momentum = 0.9;
  cfg.epochs = 12;
  cfg.batch_size = 64;
  cfg.snapshot_every = 1;
  cfg.seed = 1;
  const Trajectory traj = train_expert(ds, testsupport::tiny_spec(), cfg);
  CHECK(traj.checkpoints.size() == 13);
  CHECK(traj.train_losses.size() == 13);
  CHECK(traj.endpoint_grad_norm >= 0.0);

  cfg.snapshot_every = 4;
  const Trajectory sparse = train_expert(ds, testsupport::tiny_spec(), cfg);
  CHECK(sparse.checkpoints.size() == 4);  // init + epochs/4
}

TEST_CASE("training reduces the loss on the tiny dataset across seeds") {
  const auto ds = testsupport::tiny_dataset();
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Trajectory traj = testsupport::tiny_expert(ds, seed);
    CHECK(traj.train_losses.back() < traj.train_losses.front());
  }
}

TEST_CASE("lr 0 leaves every checkpoint at the initialization") {
  const auto ds = testsupport::tiny_dataset();
  SgdConfig cfg;
  cfg.lr = 0.0;
  cfg.momentum = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 64;
  cfg.seed = 9;
  const Trajectory traj = train_expert(ds, testsupport::tiny_spec(), cfg);
  for (const auto& ck : traj.checkpoints)
    CHECK((ck - traj.checkpoints.front()).norm() == 0.0);
}

TEST_CASE("identical config gives bit-identical trajectories") {
  const auto ds = testsupport::tiny_dataset();
  const Trajectory a = testsupport::tiny_expert(ds, 3, 6);
  const Trajectory b = testsupport::tiny_expert(ds, 3, 6);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i)
    CHECK((a.checkpoints[i].array() == b.checkpoints[i].array()).all());
}

TEST_CASE("divergent settings raise DivergenceError with the epoch") {
  const auto ds = testsupport::tiny_dataset();
  SgdConfig cfg;
  cfg.lr = 1e9;
  cfg.momentum = 0.9;
  cfg.epochs = 5;
  cfg.batch_size = 64;
  cfg.seed = 4;
  CHECK_THROWS_AS(train_expert(ds, testsupport::tiny_spec(), cfg), DivergenceError);
}

TEST_CASE("interp_gamma endpoint and segment arithmetic") {
  ParamVector a = ParamVector::Constant(5, 0.0);
  ParamVector b = ParamVector::Constant(5, 1.0);
  ParamVector c = ParamVector::Constant(5, 3.0);
  const Trajectory traj = synthetic_trajectory({a, b, c});

  CHECK((interp_gamma(traj, 0.0) - a).norm() == 0.0);
  CHECK((interp_gamma(traj, 1.0) - c).norm() == 0.0);
  // K = 2: t = 0.25 -> u = 0.5 inside segment 0
  CHECK((interp_gamma(traj, 0.25) - 0.5 * (a + b)).norm() == 0.0);
  CHECK_THROWS_AS(interp_gamma(traj, 1.5), std::invalid_argument);
}

TEST_CASE("second differences: straight line, hand values, real run") {
  ParamVector base = ParamVector::Constant(7, 1.0);
  const Trajectory line =
      synthetic_trajectory({0.0 * base, 1.0 * base, 2.0 * base, 3.0 * base});
  for (double d : second_differences(line)) CHECK(d == 0.0);

  const Trajectory bent = synthetic_trajectory({0.0 * base, 1.0 * base, 3.0 * base});
  const auto diffs = second_differences(bent);
  REQUIRE(diffs.size() == 1);
  CHECK(diffs[0] == doctest::Approx(std::sqrt(7.0)).epsilon(1e-12));

  const auto ds = testsupport::tiny_dataset();
  const Trajectory real = testsupport::tiny_expert(ds, 5, 8);
  const auto real_diffs = second_differences(real);
  double max_diff = 0.0;
  for (double d : real_diffs) max_diff = std::max(max_diff, d);
  CHECK(max_diff > 0.0);

  const Trajectory two = synthetic_trajectory({base, 2.0 * base});
  CHECK_THROWS_AS(second_differences(two), std::invalid_argument);
}

TEST_CASE("save/load round-trips at f32 precision with the documented layout") {
  const auto ds = testsupport::tiny_dataset();
  const Trajectory traj = testsupport::tiny_expert(ds, 6, 5);
  const auto file = temp_path("expert.btmt");
  save_trajectory(traj, file);

  // 4 magic + 4 version + 8 N + 4 count, payload, 4 CRC
  const auto n = traj.checkpoints.front().size();
  const auto k1 = traj.checkpoints.size();
  CHECK(fs::file_size(file) == 20 + k1 * n * 4 + k1 * 4 + 4);

  const Trajectory back = load_trajectory(file);
  REQUIRE(back.checkpoints.size() == traj.checkpoints.size());
  for (std::size_t i = 0; i < k1; ++i) {
    const ParamVector& orig = traj.checkpoints[i];
    const ParamVector& got = back.checkpoints[i];
    for (Eigen::Index j = 0; j < n; ++j)
      CHECK(got[j] == doctest::Approx(orig[j]).epsilon(1e-6));
  }
  CHECK(back.config.epochs == traj.config.epochs);
  CHECK(back.spec.layer_widths == traj.spec.layer_widths);
  CHECK(back.endpoint_grad_norm ==
        doctest::Approx(traj.endpoint_grad_norm).epsilon(1e-12));
}

TEST_CASE("corrupt containers are rejected") {
  const auto ds = testsupport::tiny_dataset();
  const Trajectory traj = testsupport::tiny_expert(ds, 7, 3);
  const auto file = temp_path("corrupt.btmt");
  save_trajectory(traj, file);

  SUBCASE("flipped magic") {
    std::string bytes = read_file(file);
    bytes[0] = 'X';
    atomic_write_text(file, bytes);
    CHECK_THROWS_AS(load_trajectory(file), FormatError);
  }
  SUBCASE("truncated payload") {
    std::string bytes = read_file(file);
    bytes.resize(bytes.size() / 2);
    atomic_write_text(file, bytes);
    CHECK_THROWS_AS(load_trajectory(file), FormatError);
  }
  SUBCASE("payload bit flip fails the checksum") {
    std::string bytes = read_file(file);
    bytes[bytes.size() / 2] ^= 0x40;
    atomic_write_text(file, bytes);
    CHECK_THROWS_AS(load_trajectory(file), FormatError);
  }
}

}  // TEST_SUITE
