#include <bathyreg/registration.hpp>
#include <bathyreg/preprocess.hpp>
#include <bathyreg/random.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <limits>

namespace bathyreg {

// ---------------------------------------------------------------------------
// Descriptor matching

std::vector<std::size_t> nearest_rows(const DescriptorMatrix& queries, const DescriptorMatrix& candidates,
                                      std::vector<double>* distances) {
  if (queries.rows() == 0 || candidates.rows() == 0) throw Error("empty input");
  if (queries.cols() != candidates.cols()) throw Error("descriptor dimension mismatch");

  // Candidate screening uses |q|^2 + |c|^2 - 2 q.c from a GEMM; everything
  // within a round-off slack of the screened minimum is then re-scored with
  // the direct difference so the answer equals a brute-force scan.
  const Eigen::VectorXd cand_norm = candidates.rowwise().squaredNorm();
  const double cand_norm_max = cand_norm.maxCoeff();
  const auto dim = static_cast<double>(queries.cols());
  constexpr Eigen::Index kBlock = 256;

  std::vector<std::size_t> out(static_cast<std::size_t>(queries.rows()));
  if (distances) distances->assign(out.size(), 0.0);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> screened;
  for (Eigen::Index r0 = 0; r0 < queries.rows(); r0 += kBlock) {
    const Eigen::Index rows = std::min(kBlock, queries.rows() - r0);
    // |c|^2 - 2 q.c; the |q|^2 term is constant per row and only matters for the slack.
    screened.noalias() = -2.0 * (queries.middleRows(r0, rows) * candidates.transpose());
    screened.rowwise() += cand_norm.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto q = queries.row(r0 + i);
      const double qn = q.squaredNorm();
      const double screened_min = screened.row(i).minCoeff();
      const double slack = 16.0 * (dim + 4.0) * std::numeric_limits<double>::epsilon() * (qn + cand_norm_max);
      double best = std::numeric_limits<double>::infinity();
      Eigen::Index best_j = 0;
      for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
        if (screened(i, j) > screened_min + slack) continue;
        const double exact = (q - candidates.row(j)).squaredNorm();
        if (exact < best) {
          best = exact;
          best_j = j;
        }
      }
      out[static_cast<std::size_t>(r0 + i)] = static_cast<std::size_t>(best_j);
      if (distances) (*distances)[static_cast<std::size_t>(r0 + i)] = std::sqrt(best);
    }
  }
  return out;
}

CorrespondenceSet match_features(const FeatureSet& src, const FeatureSet& ref, bool mutual) {
  if (src.size() == 0 || ref.size() == 0) throw Error("empty input");
  if (src.dim() != ref.dim()) throw Error("descriptor dimension mismatch");
  std::vector<double> dist;
  const auto forward = nearest_rows(src.descriptors, ref.descriptors, &dist);
  std::vector<std::size_t> backward;
  if (mutual) backward = nearest_rows(ref.descriptors, src.descriptors);

  CorrespondenceSet out;
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (mutual && backward[forward[i]] != i) continue;
    out.pairs.push_back({src.point_indices[i], ref.point_indices[forward[i]]});
    out.feature_distances.push_back(dist[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kabsch

namespace {

bool scatter_is_degenerate(const Matrix3d& scatter) {
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver;
  solver.computeDirect(scatter, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return !(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2];
}

}  // namespace

std::optional<RigidTransformd> try_kabsch_fit(std::span<const Point3d> src, std::span<const Point3d> ref) {
  if (src.size() != ref.size()) throw Error("size mismatch");
  if (src.size() < 3) return std::nullopt;
  Point3d ms = Point3d::Zero(), mr = Point3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    ms += src[i];
    mr += ref[i];
  }
  ms /= static_cast<double>(src.size());
  mr /= static_cast<double>(src.size());
  Matrix3d cross = Matrix3d::Zero(), scatter_s = Matrix3d::Zero(), scatter_r = Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point3d ds = src[i] - ms;
    const Point3d dr = ref[i] - mr;
    cross.noalias() += ds * dr.transpose();
    scatter_s.noalias() += ds * ds.transpose();
    scatter_r.noalias() += dr * dr.transpose();
  }
  if (scatter_is_degenerate(scatter_s) || scatter_is_degenerate(scatter_r)) return std::nullopt;

  Eigen::JacobiSVD<Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3d& u = svd.matrixU();
  const Matrix3d& v = svd.matrixV();
  Matrix3d d = Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Matrix3d r = v * d * u.transpose();
  return RigidTransformd(r, mr - r * ms);
}

RigidTransformd kabsch_fit(std::span<const Point3d> src, std::span<const Point3d> ref) {
  auto fit = try_kabsch_fit(src, ref);
  if (!fit) throw Error("rank deficient");
  return *fit;
}

// ---------------------------------------------------------------------------
// RANSAC

namespace {

struct Score {
  std::size_t inliers = 0;
  double sse = 0.0;
};

// Structure-of-arrays copy of the correspondence endpoints for the scoring loop.
struct CorrespondenceArrays {
  std::vector<double> sx, sy, sz, rx, ry, rz;

  CorrespondenceArrays(const PointCloudd& src, const PointCloudd& ref, const CorrespondenceSet& corr) {
    const std::size_t n = corr.size();
    for (auto* v : {&sx, &sy, &sz, &rx, &ry, &rz}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Point3d& s = src.points.at(corr.pairs[i].src);
      const Point3d& r = ref.points.at(corr.pairs[i].ref);
      sx[i] = s.x();
      sy[i] = s.y();
      sz[i] = s.z();
      rx[i] = r.x();
      ry[i] = r.y();
      rz[i] = r.z();
    }
  }

  Score score(const RigidTransformd& t, double threshold_sq) const {
    const Matrix3d& m = t.rotation();
    const double r00 = m(0, 0), r01 = m(0, 1), r02 = m(0, 2);
    const double r10 = m(1, 0), r11 = m(1, 1), r12 = m(1, 2);
    const double r20 = m(2, 0), r21 = m(2, 1), r22 = m(2, 2);
    const double tx = t.translation().x(), ty = t.translation().y(), tz = t.translation().z();
    const std::size_t n = sx.size();
    const double *psx = sx.data(), *psy = sy.data(), *psz = sz.data();
    const double *prx = rx.data(), *pry = ry.data(), *prz = rz.data();
    std::size_t count = 0;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = r00 * psx[i] + r01 * psy[i] + r02 * psz[i] + tx - prx[i];
      const double dy = r10 * psx[i] + r11 * psy[i] + r12 * psz[i] + ty - pry[i];
      const double dz = r20 * psx[i] + r21 * psy[i] + r22 * psz[i] + tz - prz[i];
      const double d2 = dx * dx + dy * dy + dz * dz;
      const bool inlier = d2 <= threshold_sq;
      count += inlier;
      sse += inlier ? d2 : 0.0;
    }
    return {count, sse};
  }
};

}  // namespace

RegistrationResult ransac_registration(const PointCloudd& src, const PointCloudd& ref, const CorrespondenceSet& corr,
                                       const RansacParams& params) {
  if (params.sample_size < 3) throw Error("config error: RANSAC sample size must be >= 3");
  if (params.iterations < 1) throw Error("config error: RANSAC iterations must be >= 1");
  const auto k = static_cast<std::size_t>(params.sample_size);
  if (corr.size() < k) throw Error("too few correspondences");

  const CorrespondenceArrays arrays(src, ref, corr);
  const double threshold_sq = params.inlier_threshold * params.inlier_threshold;
  const std::size_t n = corr.size();

  std::vector<std::size_t> sample(k);
  std::vector<Point3d> sample_src(k), sample_ref(k);
  Score best;
  std::optional<RigidTransformd> best_model;

  for (int it = 0; it < params.iterations; ++it) {
    SplitMix64 rng(hash_seed(params.seed, static_cast<std::uint64_t>(it)));
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t pick = 0;
      do {
        pick = static_cast<std::size_t>(rng.index(n));
      } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(j), pick) !=
               sample.begin() + static_cast<std::ptrdiff_t>(j));
      sample[j] = pick;
      sample_src[j] = src.points[corr.pairs[pick].src];
      sample_ref[j] = ref.points[corr.pairs[pick].ref];
    }
    const auto model = try_kabsch_fit(sample_src, sample_ref);
    if (!model) continue;
    const Score s = arrays.score(*model, threshold_sq);
    if (s.inliers > best.inliers || (s.inliers == best.inliers && s.inliers > 0 && s.sse < best.sse)) {
      best = s;
      best_model = model;
    }
  }

  RegistrationResult result;
  result.iterations = params.iterations;
  if (!best_model) return result;

  std::vector<Point3d> inlier_src, inlier_ref;
  for (std::size_t i = 0; i < n; ++i) {
    const Point3d& s = src.points[corr.pairs[i].src];
    const Point3d& r = ref.points[corr.pairs[i].ref];
    if ((*best_model * s - r).squaredNorm() <= threshold_sq) {
      inlier_src.push_back(s);
      inlier_ref.push_back(r);
    }
  }
  const auto refit = try_kabsch_fit(inlier_src, inlier_ref);
  result.transform = refit ? *refit : *best_model;
  result.inlier_count = best.inliers;
  double sse = 0.0;
  for (std::size_t i = 0; i < inlier_src.size(); ++i) sse += (result.transform * inlier_src[i] - inlier_ref[i]).squaredNorm();
  result.residual = inlier_src.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(inlier_src.size()));
  const double required = std::max(static_cast<double>(k + 1), 0.05 * static_cast<double>(n));
  result.converged = static_cast<double>(best.inliers) >= required;
  return result;
}

// ---------------------------------------------------------------------------
// GICP

namespace {

Matrix3d skew(const Point3d& v) {
  Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Left-multiplied update: translation first, then small-angle rotation.
/// Cholesky solve of the 6x6 normal equations with plain loops. Eigen's LDLT
/// reduces over runtime-sized blocks whose vectorised split follows the
/// stack address, which made results differ by thread; this summation order
/// is fixed. Returns NaNs when h is not positive definite.
Vector6d solve_normal_equations(const Matrix6d& h, const Vector6d& g) {
  double l[6][6] = {};
  for (int j = 0; j < 6; ++j) {
    double diag = h(j, j);
    for (int k = 0; k < j; ++k) diag -= l[j][k] * l[j][k];
    if (!(diag > 0.0)) return Vector6d::Constant(std::numeric_limits<double>::quiet_NaN());
    l[j][j] = std::sqrt(diag);
    for (int i = j + 1; i < 6; ++i) {
      double v = h(i, j);
      for (int k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / l[j][j];
    }
  }
  double y[6];
  for (int i = 0; i < 6; ++i) {
    double v = g(i);
    for (int k = 0; k < i; ++k) v -= l[i][k] * y[k];
    y[i] = v / l[i][i];
  }
  Vector6d x;
  for (int i = 5; i >= 0; --i) {
    double v = y[i];
    for (int k = i + 1; k < 6; ++k) v -= l[k][i] * x(k);
    x(i) = v / l[i][i];
  }
  return x;
}

RigidTransformd apply_update(const Vector6d& delta, const RigidTransformd& t) {
  const Point3d v = delta.head<3>();
  const Point3d w = delta.tail<3>();
  const double angle = w.norm();
  const Matrix3d dr = angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix() : Matrix3d::Identity();
  return RigidTransformd(dr, v) * t;
}

struct Match {
  std::size_t src;
  std::size_t ref;
};

}  // namespace

std::vector<Matrix3d> gicp_covariances(const PointCloudd& cloud, const SpatialIndex& index, int k, double epsilon) {
  std::vector<Matrix3d> out(cloud.size());
  std::vector<Neighbor> neighbors;
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver;
  const Eigen::Vector3d shape(epsilon, 1.0, 1.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.knn(cloud.points[i], static_cast<std::size_t>(k), neighbors);
    solver.compute(neighborhood_covariance(cloud, neighbors));
    const Matrix3d& u = solver.eigenvectors();  // ascending eigenvalues: column 0 is the normal
    out[i] = u * shape.asDiagonal() * u.transpose();
  }
  return out;
}

RegistrationResult gicp(const PointCloudd& src, const PointCloudd& ref, const RigidTransformd& init,
                        const GicpParams& params) {
  if (src.size() < 10 || ref.size() < 10) throw Error("insufficient points");
  const SpatialIndex ref_index(ref);
  const SpatialIndex src_index(src);
  const auto cov_ref = gicp_covariances(ref, ref_index, params.covariance_neighbors, params.covariance_epsilon);
  const auto cov_src = gicp_covariances(src, src_index, params.covariance_neighbors, params.covariance_epsilon);

  auto correspond = [&](const RigidTransformd& t) {
    std::vector<Match> matches;
    matches.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (const auto nb = ref_index.nearest(t * src.points[i], params.max_correspondence_distance)) {
        matches.push_back({i, nb->index});
      }
    }
    return matches;
  };

  RegistrationResult result;
  result.transform = init;
  RigidTransformd current = init;
  bool stopped_by_tolerance = false;
  std::vector<Matrix3d> weights;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const auto matches = correspond(current);
    result.iterations = iter + 1;
    if (matches.empty()) {
      result.transform = current;
      result.converged = false;
      return result;
    }

    const Matrix3d& rot = current.rotation();
    weights.resize(matches.size());
    Matrix6d h = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    double cost = 0.0;
    Eigen::Matrix<double, 3, 6> jac;
    jac.leftCols<3>() = -Matrix3d::Identity();
    for (std::size_t m = 0; m < matches.size(); ++m) {
      const Point3d q = current * src.points[matches[m].src];
      const Point3d d = ref.points[matches[m].ref] - q;
      weights[m] = (cov_ref[matches[m].ref] + rot * cov_src[matches[m].src] * rot.transpose()).inverse();
      jac.rightCols<3>() = skew(q);
      const Eigen::Matrix<double, 6, 3> jt_w = jac.transpose() * weights[m];
      h.noalias() += jt_w * jac;
      g.noalias() += jt_w * d;
      cost += d.dot(weights[m] * d);
    }
    const Vector6d delta = -solve_normal_equations(h, g);
    if (!delta.allFinite()) break;

    auto cost_at = [&](const RigidTransformd& t) {
      double c = 0.0;
      for (std::size_t m = 0; m < matches.size(); ++m) {
        const Point3d d = ref.points[matches[m].ref] - t * src.points[matches[m].src];
        c += d.dot(weights[m] * d);
      }
      return c;
    };

    double scale = 1.0;
    std::optional<RigidTransformd> accepted;
    double accepted_cost = cost;
    int halvings = 0;
    for (; halvings <= params.max_step_halvings; ++halvings, scale *= 0.5) {
      const RigidTransformd trial = apply_update(scale * delta, current);
      const double trial_cost = cost_at(trial);
      if (trial_cost <= cost) {
        accepted = trial;
        accepted_cost = trial_cost;
        break;
      }
    }
    if (!accepted) {
      // No decrease along the Gauss-Newton direction: already at a stationary point.
      stopped_by_tolerance = true;
      break;
    }
    current = *accepted;
    const double step_norm = scale * delta.norm();
    result.steps.push_back({cost, accepted_cost, step_norm, halvings});
    if (step_norm < params.transformation_epsilon) {
      stopped_by_tolerance = true;
      break;
    }
  }

  const auto final_matches = correspond(current);
  result.transform = current;
  result.inlier_count = final_matches.size();
  double residual = 0.0;
  for (const auto& m : final_matches) {
    const Point3d d = ref.points[m.ref] - current * src.points[m.src];
    const Matrix3d w =
        (cov_ref[m.ref] + current.rotation() * cov_src[m.src] * current.rotation().transpose()).inverse();
    residual += d.dot(w * d);
  }
  result.residual = residual;
  result.converged = stopped_by_tolerance && final_matches.size() >= params.min_correspondences;
  return result;
}

}  // namespace bathyreg
