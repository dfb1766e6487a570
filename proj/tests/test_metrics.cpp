#include <bathyreg/metrics.hpp>
#include <bathyreg/pairgen.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/terrain.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "test_util.hpp"

using namespace bathyreg;

namespace {

PointCloudd planar_cloud(Rng& rng, std::size_t n, double extent) {
  PointCloudd c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(rng.uniform(0, extent), rng.uniform(0, extent), rng.normal());
  return c;
}

}  // namespace

TEST_CASE("grid binning basics") {
  const PointCloudd a({Point3d(1, 1, 5)}), b({Point3d(1, 1, 7)});
  const auto g = grid_clouds(a, b);
  REQUIRE(g.cells.size() == 1);
  CHECK(g.cells.begin()->second.z_a == std::vector<double>{5});
  CHECK(g.cells.begin()->second.z_b == std::vector<double>{7});

  const auto split = grid_clouds(PointCloudd({Point3d(0, 0, 0)}), PointCloudd({Point3d(3, 0, 0)}), 2.0);
  CHECK(split.cells.size() == 2);
  CHECK_THROWS_AS(grid_clouds(PointCloudd{}, a), Error);
}

TEST_CASE("grid counts match a dense binning oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = planar_cloud(rng, 500, 30.0);
    auto b = planar_cloud(rng, 400, 30.0);
    for (auto& p : b.points) p.x() += 10.0;
    const double cell = rng.uniform(0.5, 4.0);
    const auto g = grid_clouds(a, b, cell);
    const oracle::DenseGrid d(a, b, cell);
    CHECK(g.origin.x() == d.ox);
    CHECK(g.origin.y() == d.oy);
    std::size_t occupied = 0, total_a = 0, total_b = 0;
    for (long i = 0; i < d.nx * d.ny; ++i) occupied += d.cnt_a[i] || d.cnt_b[i];
    CHECK(g.cells.size() == occupied);
    for (const auto& [key, c] : g.cells) {
      const long at = key[0] * d.ny + key[1];
      CHECK(static_cast<long>(c.z_a.size()) == d.cnt_a[at]);
      CHECK(static_cast<long>(c.z_b.size()) == d.cnt_b[at]);
      total_a += c.z_a.size(), total_b += c.z_b.size();
    }
    CHECK(total_a == a.size());
    CHECK(total_b == b.size());
  }
}

TEST_CASE("consistency analytic cases") {
  Rng rng(2);
  const auto c = planar_cloud(rng, 800, 40.0);
  const auto self = consistency_error(c, c, RigidTransformd::Identity());
  CHECK(*self.error == 0.0);
  CHECK(self.overlap_pct == 100.0);

  const auto lifted = consistency_error(c, c, RigidTransformd(Matrix3d::Identity(), Point3d(0, 0, 1)));
  CHECK(*lifted.error == doctest::Approx(1.0).epsilon(1e-12));

  const auto apart = consistency_error(c, c, RigidTransformd(Matrix3d::Identity(), Point3d(1000, 0, 0)));
  CHECK_FALSE(apart.error.has_value());
  CHECK(apart.overlap_pct == 0.0);
}

TEST_CASE("consistency on terrain pairs matches the dense oracle") {
  TerrainConfig cfg;
  SurveyGeometry geo;
  geo.n_pings = 200;
  geo.n_beams = 80;
  geo.swath_width = 80.0;
  auto subs = build_submaps(generate_terrain_pings(cfg, geo));
  for (auto& s : subs) s.cloud = voxel_downsample(s.cloud, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PairSpec spec;
    spec.seed = seed;
    const auto pair = make_pair(subs[seed % 3], subs[seed % 3 + 2], spec);
    const auto got = consistency_error(pair.ref_cloud, pair.src_cloud, pair.gt);
    const auto [err, overlap] = oracle::DenseGrid(pair.ref_cloud, apply_transform(pair.src_cloud, pair.gt), 2.0).consistency();
    REQUIRE(got.error.has_value());
    CHECK(std::abs(*got.error - err) < 1e-9);
    CHECK(std::abs(got.overlap_pct - overlap) < 1e-9);
  }
}

TEST_CASE("ground truth beats the null transform on generated pairs") {
  TerrainConfig cfg;
  SurveyGeometry geo;
  geo.n_pings = 300;
  geo.n_beams = 80;
  geo.swath_width = 80.0;
  auto subs = build_submaps(generate_terrain_pings(cfg, geo));
  for (auto& s : subs) s.cloud = voxel_downsample(s.cloud, 1.0);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    PairSpec spec;
    spec.seed = hash_seed(seed, "gt-vs-null");
    const std::size_t i = seed % (subs.size() - 2);
    const auto pair = make_pair(subs[i], subs[i + seed % 3], spec);
    const auto gt = consistency_error(pair.ref_cloud, pair.src_cloud, pair.gt);
    const auto null = consistency_error(pair.ref_cloud, pair.src_cloud, RigidTransformd::Identity());
    ok += (gt.error && (!null.error || *gt.error <= *null.error)) || null.overlap_pct < gt.overlap_pct;
  }
  CHECK(ok >= 190);
}

TEST_CASE("per-cell consistency export") {
  const PointCloudd ref({Point3d(0.5, 0.5, 1.0), Point3d(2.5, 0.5, 0.0)});
  const PointCloudd src({Point3d(0.5, 0.5, 4.0)});
  const auto csv = consistency_cells_csv(ref, src, RigidTransformd::Identity());
  CHECK(csv ==
        "ix,iy,x,y,n_ref,n_src,mean_z_ref,mean_z_src,abs_diff\n"
        "0,0,1.5,1.5,1,1,1,4,3\n"
        "1,0,3.5,1.5,1,0,0,,\n");
}

TEST_CASE("rotation error") {
  Rng rng(3);
  const auto gt = testutil::random_transform(rng);
  CHECK(rre(gt, gt) == doctest::Approx(0.0));
  const RigidTransformd extra(gt.rotation() * transform_from_euler_z(10.0, Point3d::Zero()).rotation(), gt.translation());
  CHECK(std::abs(rre(gt, extra) - 10.0) < 1e-9);

  for (int i = 0; i < 1000; ++i) {
    const auto a = testutil::random_transform(rng), b = testutil::random_transform(rng), c = testutil::random_transform(rng);
    const double ab = rre(a, b);
    CHECK(std::abs(ab - oracle::quaternion_angle_deg(a.rotation(), b.rotation())) < 1e-9);
    CHECK(ab == doctest::Approx(rre(b, a)));
    CHECK(ab >= 0.0);
    CHECK(ab <= 180.0);
    CHECK(rre(a, c) <= ab + rre(b, c) + 1e-6);
  }
  // Tiny angles stay resolved instead of rounding to zero.
  const Eigen::AngleAxisd tiny(1e-10, Point3d::UnitX());
  CHECK(rre(RigidTransformd::Identity(), RigidTransformd(tiny.toRotationMatrix(), Point3d::Zero())) ==
        doctest::Approx(1e-10 * 180.0 / std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("translation error") {
  const RigidTransformd a(Matrix3d::Identity(), Point3d(1, 1, 1)), b(Matrix3d::Identity(), Point3d(4, 5, 1));
  CHECK(rte(a, a) == 0.0);
  CHECK(rte(a, b) == 5.0);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto x = testutil::random_transform(rng), y = testutil::random_transform(rng);
    const Point3d d = x.translation() - y.translation();
    CHECK(rte(x, y) == doctest::Approx(std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z())));
  }
}

TEST_CASE("recall thresholds") {
  const auto gt = transform_from_euler_z(3.0, Point3d(1, 2, 3));
  CHECK(is_recalled(gt, gt));
  CHECK_FALSE(is_recalled(gt, transform_from_euler_z(9.0, Point3d(1, 2, 3))));
  CHECK_FALSE(is_recalled(gt, transform_from_euler_z(3.0, Point3d(11.5, 2, 3))));
  CHECK(is_recalled(gt, transform_from_euler_z(3.0, Point3d(11, 2, 3))));

  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto pred = transform_from_euler_z(3.0 + rng.uniform(-8, 8), Point3d(1 + rng.uniform(-12, 12), 2, 3));
    const double r1 = rng.uniform(0, 10), r2 = rng.uniform(0, r1), t1 = rng.uniform(0, 15), t2 = rng.uniform(0, t1);
    if (!is_recalled(gt, pred, r1, t1)) {
      CHECK_FALSE(is_recalled(gt, pred, r2, t1));
      CHECK_FALSE(is_recalled(gt, pred, r1, t2));
    }
  }
}

TEST_CASE("inlier ratio") {
  Rng rng(6);
  const auto c = testutil::random_cloud(rng, 100, 20.0);
  CorrespondenceSet id;
  for (std::size_t i = 0; i < 100; ++i) id.pairs.push_back({i, i});
  CHECK(inlier_ratio(c, c, id, RigidTransformd::Identity()) == 1.0);
  CHECK(inlier_ratio(c, c, id, RigidTransformd(Matrix3d::Identity(), Point3d(0, 2.1, 0))) == 0.0);
  CHECK_THROWS_AS(inlier_ratio(c, c, CorrespondenceSet{}, RigidTransformd::Identity()), Error);

  const auto gt = testutil::random_transform(rng, 2.0);
  CorrespondenceSet random;
  for (int i = 0; i < 300; ++i) random.pairs.push_back({static_cast<std::size_t>(rng.index(100)), static_cast<std::size_t>(rng.index(100))});
  const auto ref = apply_transform(c, gt);
  int hits = 0;
  for (const auto& p : random.pairs) {
    const Point3d q = gt.rotation() * c.points[p.src] + gt.translation();
    hits += (q - ref.points[p.ref]).norm() <= 2.0;
  }
  CHECK(inlier_ratio(c, ref, random, gt) == doctest::Approx(hits / 300.0));
}

TEST_CASE("feature match recall") {
  const std::vector<double> ones(7, 1.0);
  CHECK(feature_match_recall(ones) == 1.0);
  const std::vector<double> edge = {0.04, 0.05, 0.06};
  CHECK(feature_match_recall(edge) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(feature_match_recall(std::vector<double>{}), Error);
  Rng rng(7);
  std::vector<double> irs;
  int count = 0;
  for (int i = 0; i < 100; ++i) {
    irs.push_back(rng.uniform(0, 0.1));
    count += irs.back() >= 0.05;
  }
  CHECK(feature_match_recall(irs) == doctest::Approx(count / 100.0));
}

TEST_CASE("pair evaluation and the metrics CSV") {
  Rng rng(8);
  const auto ref = planar_cloud(rng, 300, 20.0);
  const auto gt = transform_from_euler_z(4.0, Point3d(2, 1, 0));
  const auto src = apply_transform(ref, gt.inverse());

  const auto good = evaluate_pair(3, 0.49, "gicp", ref, src, gt, gt, 0.25);
  CHECK(good.success);
  CHECK(good.recalled);
  REQUIRE(good.consistency_m.has_value());
  CHECK(*good.consistency_m < 1e-9);
  CHECK(*good.rre_deg < 1e-9);

  const auto bad = evaluate_pair(4, 0.098, "gicp", ref, src, gt, std::nullopt);
  CHECK_FALSE(bad.success);
  CHECK_FALSE(bad.recalled);
  CHECK_FALSE(bad.consistency_m.has_value());

  const auto far = evaluate_pair(5, 0.2, "x", ref, src, gt, transform_from_euler_z(4.0, Point3d(30, 1, 0)));
  CHECK(far.success);
  CHECK_FALSE(far.recalled);

  const std::string csv = metrics_csv_header() + "\n" + metrics_csv_row(good) + "\n" + metrics_csv_row(bad) + "\n" +
                          metrics_csv_row(far) + "\n";
  CHECK(metrics_csv_header() == "pair_id,effective_overlap,method,success,consistency_m,overlap_pct,rre_deg,rte_m,recalled,inlier_ratio");
  CHECK(metrics_csv_row(bad) == "4,0.098,gicp,0,,,,,0,");
  const auto back = parse_metrics_csv(csv, "m.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[0].consistency_m == good.consistency_m);
  CHECK(back[0].rre_deg == good.rre_deg);
  CHECK(back[0].inlier_ratio == 0.25);
  CHECK(back[1].success == false);
  CHECK_FALSE(back[1].rte_m.has_value());
  CHECK(back[2].rte_m == far.rte_m);
  CHECK(back[2].method == "x");

  CHECK_THROWS_WITH_AS(parse_metrics_csv("nope\n", "m.csv"), "m.csv:1: unrecognized format", Error);
  CHECK_THROWS_WITH_AS(parse_metrics_csv(metrics_csv_header() + "\n1,2,3\n", "m.csv"), doctest::Contains("m.csv:2"), Error);
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
