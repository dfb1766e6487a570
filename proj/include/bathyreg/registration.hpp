#pragma once

#include <bathyreg/core.hpp>
#include <bathyreg/features.hpp>
#include <bathyreg/spatial.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bathyreg {

struct Correspondence {
  std::size_t src = 0;
  std::size_t ref = 0;
  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Putative matches; indices are cloud indices, one entry per source point.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  std::vector<double> feature_distances;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Exact nearest reference descriptor (L2) for every source descriptor; ties
/// go to the lower reference row. With `mutual`, only pairs that are also
/// each other's nearest neighbour in the reverse direction are kept.
CorrespondenceSet match_features(const FeatureSet& src, const FeatureSet& ref, bool mutual = false);

/// Row index in `candidates` nearest to each row of `queries`, exact.
std::vector<std::size_t> nearest_rows(const DescriptorMatrix& queries, const DescriptorMatrix& candidates,
                                      std::vector<double>* distances = nullptr);

/// Least-squares rigid fit minimising sum |R s_i + t - r_i|^2 with det(R) = +1.
/// Throws Error("rank deficient") for fewer than 3 points or collinear /
/// coincident sets.
RigidTransformd kabsch_fit(std::span<const Point3d> src, std::span<const Point3d> ref);
std::optional<RigidTransformd> try_kabsch_fit(std::span<const Point3d> src, std::span<const Point3d> ref);

/// One accepted Gauss-Newton step: objective before and after, fixed
/// correspondences and weights.
struct GaussNewtonStep {
  double cost_before = 0.0;
  double cost_after = 0.0;
  double step_norm = 0.0;
  int halvings = 0;
};

struct RegistrationResult {
  RigidTransformd transform;  // src -> ref; meaningful when converged
  bool converged = false;
  int iterations = 0;
  std::size_t inlier_count = 0;  // RANSAC: best hypothesis; GICP: final correspondences
  double residual = 0.0;         // RANSAC: inlier RMS; GICP: final weighted SSE
  std::vector<GaussNewtonStep> steps;  // GICP only
};

struct RansacParams {
  int iterations = 50000;
  int sample_size = 3;
  double inlier_threshold = 2.0;
  std::uint64_t seed = 0;
};

/// Hypothesise-and-verify over `corr`: iteration i draws its sample from a
/// substream seeded by (seed, i), so results do not depend on scheduling.
/// Throws Error("too few correspondences") when |corr| < sample_size.
RegistrationResult ransac_registration(const PointCloudd& src, const PointCloudd& ref,
                                       const CorrespondenceSet& corr, const RansacParams& params = {});

struct GicpParams {
  double max_correspondence_distance = 50.0;
  int max_iterations = 64;
  double transformation_epsilon = 1e-4;
  int covariance_neighbors = 20;
  double covariance_epsilon = 1e-3;
  std::size_t min_correspondences = 10;
  int max_step_halvings = 10;
};

/// Plane-to-plane covariances U diag(eps, 1, 1) U^T from k-NN neighbourhoods.
std::vector<Matrix3d> gicp_covariances(const PointCloudd& cloud, const SpatialIndex& index, int k, double epsilon);

/// Generalized ICP from `init`. Throws Error("insufficient points") if either
/// cloud has fewer than 10 points. A start with no correspondence inside
/// the distance gate yields converged = false.
RegistrationResult gicp(const PointCloudd& src, const PointCloudd& ref, const RigidTransformd& init,
                        const GicpParams& params = {});

}  // namespace bathyreg
