#include <bathyreg/features.hpp>
#include <bathyreg/preprocess.hpp>

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace bathyreg;

namespace {

PointCloudd with_random_normals(PointCloudd c, Rng& rng) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.normals.push_back(Point3d(rng.normal(), rng.normal(), rng.normal()).normalized());
  }
  return c;
}

void check_blocks(const FeatureSet& fs) {
  for (Eigen::Index r = 0; r < fs.descriptors.rows(); ++r) {
    REQUIRE(fs.descriptors.row(r).allFinite());
    for (int b = 0; b < 3; ++b) {
      const double s = fs.descriptors.row(r).segment(b * kFpfhBins, kFpfhBins).sum();
      CHECK((std::abs(s - 100.0) < 1e-6 || s == 0.0));
    }
  }
}

}  // namespace

TEST_CASE("histogram bins") {
  CHECK(histogram_bin(-1.0, -1.0, 1.0) == 0);
  CHECK(histogram_bin(1.0, -1.0, 1.0) == 10);
  CHECK(histogram_bin(0.0, -1.0, 1.0) == 5);
  CHECK(histogram_bin(-0.82, -1.0, 1.0) == 0);
  CHECK(histogram_bin(-0.81, -1.0, 1.0) == 1);
  CHECK(histogram_bin(7.0, -1.0, 1.0) == 10);
}

TEST_CASE("isolated point has a zero SPFH") {
  PointCloudd c({Point3d(0, 0, 0), Point3d(100, 0, 0)}, {Point3d::UnitZ(), Point3d::UnitZ()});
  const SpatialIndex index(c);
  CHECK(compute_spfh(c, index, 0, 5.0).isZero(0.0));
  const auto fs = compute_fpfh(c, 5.0);
  CHECK(fs.descriptors.isZero(0.0));
}

TEST_CASE("normals aligned with the separation: alpha 0, phi 1, theta 0") {
  PointCloudd c({Point3d(1, 2, 3), Point3d(1, 2, 4)}, {Point3d::UnitZ(), Point3d::UnitZ()});
  const auto f = pair_feature(c.points[0], c.normals[0], c.points[1], c.normals[1]);
  CHECK(f.alpha == 0.0);
  CHECK(f.phi == 1.0);
  CHECK(f.theta == 0.0);
  // alpha 0 -> bin 5 of [-1, 1]; phi 1 -> last bin; theta 0 -> bin 5 of [-pi, pi].
  FpfhVector expected = FpfhVector::Zero();
  expected[5] = 100.0;
  expected[11 + 10] = 100.0;
  expected[22 + 5] = 100.0;
  CHECK(compute_spfh(c, SpatialIndex(c), 0, 2.0) == expected);
}

TEST_CASE("a duplicate neighbour is skipped") {
  PointCloudd c({Point3d(0, 0, 0), Point3d(0, 0, 0), Point3d(0, 0, 1)},
                {Point3d::UnitZ(), Point3d::UnitZ(), Point3d::UnitZ()});
  const auto h = compute_spfh(c, SpatialIndex(c), 0, 2.0);
  CHECK(h.allFinite());
  CHECK(h[11 + 10] == 100.0);
}

TEST_CASE("SPFH and FPFH are invariant under rigid motion") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = with_random_normals(testutil::random_cloud(rng, 150, 4.0), rng);
    const auto t = testutil::random_transform(rng);
    const auto moved = apply_transform(c, t);
    const auto a = compute_fpfh(c, 3.0);
    const auto b = compute_fpfh(moved, 3.0);
    CHECK(testutil::max_abs(a.descriptors - b.descriptors) < 1e-6);
    const SpatialIndex ia(c), ib(moved);
    CHECK(testutil::max_abs(compute_spfh(c, ia, 7, 3.0) - compute_spfh(moved, ib, 7, 3.0)) < 1e-9);
  }
}

TEST_CASE("plane interior descriptors agree") {
  PointCloudd plane;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      plane.points.emplace_back(i, j, 0.0);
      plane.normals.push_back(Point3d::UnitZ());
    }
  }
  const auto fs = compute_fpfh(plane, 5.0);
  const Eigen::RowVectorXd first = fs.descriptors.row(20 * 40 + 20);
  for (int i = 11; i < 29; ++i) {
    for (int j = 11; j < 29; ++j) CHECK(testutil::max_abs(fs.descriptors.row(i * 40 + j) - first) < 1e-3);
  }
  check_blocks(fs);
}

TEST_CASE("FPFH matches a brute-force implementation") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto c = with_random_normals(testutil::random_cloud(rng, 20, 2.0), rng);
    const oracle::NaiveFpfh naive{c, 2.5};
    const auto fs = compute_fpfh(c, 2.5);
    REQUIRE(fs.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(fs.point_indices[i] == i);
      const auto want = naive.fpfh(i);
      for (int b = 0; b < kFpfhDim; ++b) CHECK(fs.descriptors(static_cast<Eigen::Index>(i), b) == doctest::Approx(want[b]).epsilon(1e-9));
    }
  }
}

TEST_CASE("FPFH on estimated normals: blocks, determinism, errors") {
  Rng rng(5);
  PointCloudd terrain;
  for (int i = 0; i < 900; ++i) {
    const double x = rng.uniform(0, 30), y = rng.uniform(0, 30);
    terrain.points.emplace_back(x, y, std::sin(x / 4.0) * 2.0 + 0.3 * std::cos(y / 2.0));
  }
  const auto with_normals = estimate_normals(terrain, 3.0);
  const auto a = compute_fpfh(with_normals);
  const auto b = compute_fpfh(with_normals);
  check_blocks(a);
  CHECK(a.descriptors == b.descriptors);
  CHECK_THROWS_AS(compute_fpfh(terrain), Error);
  CHECK_THROWS_AS(compute_fpfh(with_normals, 0.0), Error);
}

TEST_CASE("FEAT dump round trip and corruption") {
  FeatureSet fs;
  fs.descriptors = DescriptorMatrix::Random(17, kFpfhDim) * 50.0;
  fs.point_indices.resize(17);
  const auto dir = testutil::scratch_dir("feat");
  write_features(fs, dir / "a.feat");
  CHECK(std::filesystem::file_size(dir / "a.feat") == 16 + 17 * 33 * 4);
  const auto back = read_features(dir / "a.feat");
  REQUIRE(back.size() == 17);
  CHECK(back.dim() == kFpfhDim);
  CHECK(testutil::max_abs(back.descriptors - fs.descriptors) < 1e-5);
  CHECK(back.descriptors == fs.descriptors.cast<float>().cast<double>());

  // Header bytes as documented: magic, version 1, n, dim.
  std::ifstream in(dir / "a.feat", std::ios::binary);
  char head[16];
  in.read(head, 16);
  CHECK(std::string(head, 4) == "FEAT");
  CHECK(head[4] == 1);
  CHECK(head[8] == 17);
  CHECK(head[12] == 33);

  std::filesystem::resize_file(dir / "a.feat", 16 + 17 * 33 * 4 - 1);
  CHECK_THROWS_WITH_AS(read_features(dir / "a.feat"), "size mismatch", Error);
  std::ofstream(dir / "b.feat") << "JUNKJUNKJUNKJUNK";
  CHECK_THROWS_WITH_AS(read_features(dir / "b.feat"), "unrecognized format", Error);
}
