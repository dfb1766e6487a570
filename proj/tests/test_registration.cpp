#include <bathyreg/metrics.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/registration.hpp>
#include <bathyreg/terrain.hpp>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <limits>

#include "test_util.hpp"

using namespace bathyreg;

namespace {

double sse(const RigidTransformd& t, const std::vector<Point3d>& src, const std::vector<Point3d>& ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) s += (t * src[i] - ref[i]).squaredNorm();
  return s;
}

void check_rigid(const RigidTransformd& t) {
  CHECK(RigidTransformd::is_valid_rotation(t.rotation()));
  CHECK(t.matrix().allFinite());
}

FeatureSet features_from(const DescriptorMatrix& d) {
  FeatureSet fs;
  fs.descriptors = d;
  for (Eigen::Index i = 0; i < d.rows(); ++i) fs.point_indices.push_back(static_cast<std::size_t>(i));
  return fs;
}

PointCloudd terrain_patch() {
  TerrainConfig cfg;
  cfg.roughness_sigma = 0.5;
  SurveyGeometry g;
  g.n_pings = 125;
  g.n_beams = 120;
  g.swath_width = 100.0;
  const auto subs = build_submaps(generate_terrain_pings(cfg, g));
  return voxel_downsample(subs.at(0).cloud, 1.0);
}

}  // namespace

TEST_CASE("matching identical sets is the identity") {
  const auto fs = features_from(DescriptorMatrix::Random(40, kFpfhDim));
  for (const bool mutual : {false, true}) {
    const auto corr = match_features(fs, fs, mutual);
    REQUIRE(corr.size() == 40);
    for (std::size_t i = 0; i < 40; ++i) {
      CHECK(corr.pairs[i] == Correspondence{i, i});
      CHECK(corr.feature_distances[i] == 0.0);
    }
  }
}

TEST_CASE("one query against many candidates gives the argmin") {
  const auto ref = features_from(DescriptorMatrix::Random(30, 5));
  DescriptorMatrix q = ref.descriptors.row(17) + DescriptorMatrix::Constant(1, 5, 1e-3);
  const auto corr = match_features(features_from(q), ref);
  REQUIRE(corr.size() == 1);
  CHECK(corr.pairs[0] == Correspondence{0, 17});
  CHECK(corr.feature_distances[0] == doctest::Approx(std::sqrt(5.0) * 1e-3));
}

TEST_CASE("matching agrees with a brute-force argmin table") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    DescriptorMatrix a(50, kFpfhDim), b(50, kFpfhDim);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(0, 100), b.data()[i] = rng.uniform(0, 100);
    std::vector<std::size_t> forward(50), backward(50);
    for (int i = 0; i < 50; ++i) {
      double best = std::numeric_limits<double>::infinity(), best_back = best;
      for (int j = 0; j < 50; ++j) {
        double d = 0.0, e = 0.0;
        for (int c = 0; c < kFpfhDim; ++c) {
          d += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
          e += (b(i, c) - a(j, c)) * (b(i, c) - a(j, c));
        }
        if (d < best) best = d, forward[i] = j;
        if (e < best_back) best_back = e, backward[i] = j;
      }
    }
    const auto corr = match_features(features_from(a), features_from(b));
    REQUIRE(corr.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(corr.pairs[i].ref == forward[i]);
      CHECK(corr.feature_distances[i] == doctest::Approx((a.row(i) - b.row(forward[i])).norm()));
    }
    const auto mutual = match_features(features_from(a), features_from(b), true);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < 50; ++i) expected += backward[forward[i]] == i;
    CHECK(mutual.size() == expected);
    for (const auto& p : mutual.pairs) CHECK(backward[p.ref] == p.src);
  }
}

TEST_CASE("matching ties, index mapping and errors") {
  DescriptorMatrix ref(3, 2);
  ref << 1, 0, 0, 0, 1, 0;
  DescriptorMatrix q(1, 2);
  q << 1, 0;
  CHECK(nearest_rows(q, ref) == std::vector<std::size_t>{0});  // rows 0 and 2 tie

  FeatureSet src = features_from(q);
  src.point_indices = {42};
  FeatureSet r = features_from(ref);
  r.point_indices = {7, 8, 9};
  const auto corr = match_features(src, r);
  CHECK(corr.pairs[0] == Correspondence{42, 7});

  CHECK_THROWS_AS(match_features(FeatureSet{}, r), Error);
  CHECK_THROWS_AS(match_features(features_from(DescriptorMatrix::Zero(2, 3)), r), Error);
}

TEST_CASE("kabsch recovers known transforms") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = testutil::random_cloud(rng, 3 + trial % 20, 20.0);
    const auto t = testutil::random_transform(rng);
    const auto moved = apply_transform(cloud, t);
    const auto fit = kabsch_fit(cloud.points, moved.points);
    check_rigid(fit);
    CHECK(rre(fit, t) < 1e-7);
    CHECK(rte(fit, t) < 1e-9);
  }
  const auto c = testutil::random_cloud(rng, 10);
  CHECK(testutil::max_abs(kabsch_fit(c.points, c.points).matrix() - Eigen::Matrix4d::Identity()) < 1e-12);
}

TEST_CASE("kabsch returns a proper rotation for mirrored sets") {
  Rng rng(5);
  const auto c = testutil::random_cloud(rng, 30);
  std::vector<Point3d> mirrored;
  for (const auto& p : c.points) mirrored.emplace_back(-p.x(), p.y(), p.z());
  const auto fit = kabsch_fit(c.points, mirrored);
  CHECK(fit.rotation().determinant() == doctest::Approx(1.0));
  check_rigid(fit);
}

TEST_CASE("kabsch rejects degenerate input") {
  const std::vector<Point3d> two = {Point3d(0, 0, 0), Point3d(1, 0, 0)};
  const std::vector<Point3d> line = {Point3d(0, 0, 0), Point3d(1, 1, 1), Point3d(2, 2, 2), Point3d(5, 5, 5)};
  const std::vector<Point3d> same(5, Point3d(3, 2, 1));
  CHECK_THROWS_WITH_AS(kabsch_fit(two, two), "rank deficient", Error);
  CHECK_THROWS_WITH_AS(kabsch_fit(line, line), "rank deficient", Error);
  CHECK_THROWS_WITH_AS(kabsch_fit(same, same), "rank deficient", Error);
  CHECK_FALSE(try_kabsch_fit(line, line).has_value());
}

TEST_CASE("kabsch is a global least-squares optimum") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto src = testutil::random_cloud(rng, 25, 10.0);
    auto ref = apply_transform(src, testutil::random_transform(rng)).points;
    for (auto& p : ref) p += Point3d(rng.normal(), rng.normal(), rng.normal());
    const auto fit = kabsch_fit(src.points, ref);
    const double best = sse(fit, src.points, ref);
    for (int k = 0; k < 100; ++k) {
      const double scale = (k % 3 == 0) ? 1.0 : (k % 3 == 1 ? 0.05 : 1e-3);
      const Eigen::AngleAxisd aa(scale * rng.uniform(0, 3.14), Point3d(rng.normal(), rng.normal(), rng.normal()).normalized());
      const RigidTransformd delta(aa.toRotationMatrix(), scale * Point3d(rng.normal(), rng.normal(), rng.normal()));
      CHECK(sse(delta * fit, src.points, ref) >= best * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("ransac with exact correspondences") {
  Rng rng(7);
  const auto src = testutil::random_cloud(rng, 200, 50.0);
  const auto t = testutil::random_transform(rng);
  const auto ref = apply_transform(src, t);
  CorrespondenceSet corr;
  for (std::size_t i = 0; i < src.size(); ++i) corr.pairs.push_back({i, i});
  RansacParams p;
  p.iterations = 200;
  const auto r = ransac_registration(src, ref, corr, p);
  CHECK(r.converged);
  CHECK(r.inlier_count == 200);
  CHECK(testutil::max_abs(r.transform.matrix() - t.matrix()) < 1e-6);
  check_rigid(r.transform);
}

TEST_CASE("ransac tolerates 70 percent outliers") {
  Rng rng(8);
  int recovered = 0;
  for (int run = 0; run < 100; ++run) {
    const auto src = testutil::random_cloud(rng, 1000, 50.0);
    const auto t = testutil::random_transform(rng);
    const auto ref = apply_transform(src, t);
    CorrespondenceSet corr;
    for (std::size_t i = 0; i < 1000; ++i) {
      corr.pairs.push_back({i, i < 300 ? i : static_cast<std::size_t>(rng.index(1000))});
    }
    RansacParams p;
    p.seed = static_cast<std::uint64_t>(run);
    const auto r = ransac_registration(src, ref, corr, p);
    check_rigid(r.transform);
    recovered += r.converged && rte(r.transform, t) < 0.5;
  }
  CHECK(recovered >= 99);
}

TEST_CASE("ransac is deterministic per seed and validates input") {
  Rng rng(9);
  const auto src = testutil::random_cloud(rng, 300, 50.0);
  const auto ref = apply_transform(src, testutil::random_transform(rng));
  CorrespondenceSet corr;
  for (std::size_t i = 0; i < 300; ++i) corr.pairs.push_back({i, static_cast<std::size_t>(rng.index(300))});
  for (std::size_t i = 0; i < 40; ++i) corr.pairs[i].ref = corr.pairs[i].src;
  RansacParams p;
  p.iterations = 3000;
  p.seed = 77;
  const auto a = ransac_registration(src, ref, corr, p);
  const auto b = ransac_registration(src, ref, corr, p);
  CHECK(a.transform.matrix() == b.transform.matrix());
  CHECK(a.inlier_count == b.inlier_count);
  CHECK(a.residual == b.residual);

  CorrespondenceSet two;
  two.pairs = {{0, 0}, {1, 1}};
  CHECK_THROWS_WITH_AS(ransac_registration(src, ref, two), "too few correspondences", Error);
}

TEST_CASE("ransac on pure noise does not converge") {
  Rng rng(10);
  const auto src = testutil::random_cloud(rng, 500, 50.0);
  const auto ref = testutil::random_cloud(rng, 500, 50.0);
  CorrespondenceSet corr;
  for (std::size_t i = 0; i < 500; ++i) corr.pairs.push_back({i, i});
  RansacParams p;
  p.iterations = 2000;
  CHECK_FALSE(ransac_registration(src, ref, corr, p).converged);
}

TEST_CASE("gicp covariances are plane-like") {
  PointCloudd plane;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) plane.points.emplace_back(i, j, 0.0);
  const auto cov = gicp_covariances(plane, SpatialIndex(plane), 20, 1e-3);
  REQUIRE(cov.size() == 100);
  const Eigen::SelfAdjointEigenSolver<Matrix3d> es(cov[55]);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1e-3));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.0));
  CHECK(std::abs(es.eigenvectors().col(0).z()) == doctest::Approx(1.0));
}

TEST_CASE("gicp on identical clouds stays at identity") {
  const auto cloud = terrain_patch();
  const auto r = gicp(cloud, cloud, RigidTransformd::Identity());
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK(testutil::max_abs(r.transform.matrix() - Eigen::Matrix4d::Identity()) < 1e-6);
}

TEST_CASE("gicp recovers a 5 degree, (10, 10, 1) offset on rough terrain") {
  const auto ref = terrain_patch();
  const auto gt = transform_from_euler_z(5.0, Point3d(10, 10, 1));
  // Crop the source so the two clouds only partly coincide.
  PointCloudd crop;
  for (const auto& p : ref.points)
    if (p.x() > 15.0) crop.points.push_back(p);
  const auto src = apply_transform(crop, gt.inverse());
  const auto r = gicp(src, ref, RigidTransformd::Identity());
  CHECK(r.converged);
  CHECK(rre(r.transform, gt) < 0.5);
  CHECK(rte(r.transform, gt) < 0.5);
  check_rigid(r.transform);

  // Every accepted step is non-increasing in the weighted objective.
  REQUIRE_FALSE(r.steps.empty());
  for (const auto& s : r.steps) {
    CHECK(s.cost_after <= s.cost_before);
    CHECK(s.halvings >= 0);
  }
}

TEST_CASE("gicp failure modes") {
  const auto ref = terrain_patch();
  const auto far = apply_transform(ref, RigidTransformd(Matrix3d::Identity(), Point3d(10000, 0, 0)));
  const auto r = gicp(far, ref, RigidTransformd::Identity());
  CHECK_FALSE(r.converged);

  PointCloudd tiny;
  for (int i = 0; i < 9; ++i) tiny.points.emplace_back(i, i * i, 0.0);
  CHECK_THROWS_WITH_AS(gicp(tiny, ref, RigidTransformd::Identity()), "insufficient points", Error);
  CHECK_THROWS_WITH_AS(gicp(ref, tiny, RigidTransformd::Identity()), "insufficient points", Error);
}
