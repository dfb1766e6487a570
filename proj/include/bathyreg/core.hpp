#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>
#include <limits>
#include <type_traits>

namespace bathyreg {

/// Library-wide error. The message carries the failure kind ("empty input",
/// "size mismatch", ...) so callers and tests can discriminate on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Point3d = Point3<double>;
using Matrix3d = Matrix3<double>;

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Proper rigid motion p -> R p + t. Rotation is kept as an explicit 3x3
/// matrix; every instance satisfies |R^T R - I|_max < 1e-9 and det(R) = +1.
template <typename Scalar>
class RigidTransform {
 public:
  using MatrixType = Matrix3<Scalar>;
  using VectorType = Point3<Scalar>;

  static constexpr Scalar kTolerance = Scalar(1e-9);

  RigidTransform() : rotation_(MatrixType::Identity()), translation_(VectorType::Zero()) {}

  /// Throws Error("invalid rotation") unless `rotation` is proper orthonormal.
  RigidTransform(const MatrixType& rotation, const VectorType& translation)
      : rotation_(rotation), translation_(translation) {
    if (!is_valid_rotation(rotation_)) throw Error("invalid rotation");
    if (!translation_.allFinite()) throw Error("invalid translation");
  }

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform Translation(const VectorType& t) {
    return RigidTransform(MatrixType::Identity(), t);
  }

  /// Projects an approximately orthonormal matrix (e.g. read from text with
  /// limited digits) onto SO(3) via polar decomposition. Input that is already
  /// orthonormal to round-off is kept bit for bit, so written transforms read
  /// back unchanged.
  static RigidTransform FromUserInput(const MatrixType& approx_rotation, const VectorType& t) {
    if (!approx_rotation.allFinite()) throw Error("invalid rotation");
    const Scalar round_off = Scalar(16) * std::numeric_limits<Scalar>::epsilon();
    if ((approx_rotation.transpose() * approx_rotation - MatrixType::Identity()).cwiseAbs().maxCoeff() < round_off &&
        std::abs(approx_rotation.determinant() - Scalar(1)) < round_off) {
      return RigidTransform(approx_rotation, t);
    }
    Eigen::JacobiSVD<MatrixType> svd(approx_rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    MatrixType u = svd.matrixU();
    const MatrixType v = svd.matrixV();
    if ((u * v.transpose()).determinant() < Scalar(0)) u.col(2) *= Scalar(-1);
    return RigidTransform(u * v.transpose(), t);
  }

  static bool is_valid_rotation(const MatrixType& r) {
    if (!r.allFinite()) return false;
    const Scalar ortho = (r.transpose() * r - MatrixType::Identity()).cwiseAbs().maxCoeff();
    return ortho < kTolerance && std::abs(r.determinant() - Scalar(1)) < kTolerance;
  }

  const MatrixType& rotation() const { return rotation_; }
  const VectorType& translation() const { return translation_; }

  VectorType operator*(const VectorType& p) const { return rotation_ * p + translation_; }

  /// (a * b)(p) = a(b(p)).
  RigidTransform operator*(const RigidTransform& b) const {
    return RigidTransform(unchecked_tag{}, rotation_ * b.rotation_,
                          rotation_ * b.translation_ + translation_);
  }

  RigidTransform inverse() const {
    const MatrixType rt = rotation_.transpose();
    return RigidTransform(unchecked_tag{}, rt, -(rt * translation_));
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_;
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

 private:
  struct unchecked_tag {};
  // Products and transposes of valid rotations stay valid up to round-off.
  RigidTransform(unchecked_tag, const MatrixType& r, const VectorType& t) : rotation_(r), translation_(t) {}

  MatrixType rotation_;
  VectorType translation_;
};

using RigidTransformd = RigidTransform<double>;

/// Unordered 3D points with optional unit normals (empty = absent).
template <typename Scalar>
struct PointCloud {
  std::vector<Point3<Scalar>> points;
  std::vector<Point3<Scalar>> normals;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3<Scalar>> pts) : points(std::move(pts)) {}
  PointCloud(std::vector<Point3<Scalar>> pts, std::vector<Point3<Scalar>> nrm)
      : points(std::move(pts)), normals(std::move(nrm)) {
    if (!normals.empty() && normals.size() != points.size()) throw Error("normals size mismatch");
  }

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }

  Point3<Scalar> centroid() const {
    Point3<Scalar> c = Point3<Scalar>::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Point3<Scalar>(c / Scalar(points.size()));
  }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.points == b.points && a.normals == b.normals;
  }
};

using PointCloudd = PointCloud<double>;

/// Each point mapped to R p + t; normals rotated by R only.
template <typename Scalar>
PointCloud<Scalar> apply_transform(const PointCloud<Scalar>& cloud, const RigidTransform<Scalar>& t) {
  PointCloud<Scalar> out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t * p);
  out.normals.reserve(cloud.normals.size());
  for (const auto& n : cloud.normals) out.normals.push_back(t.rotation() * n);
  return out;
}

/// compose(a, b) applies b first, then a.
template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> inverse(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

template <typename Scalar>
Matrix3<Scalar> rotation_z(Scalar yaw_rad) {
  const Scalar c = std::cos(yaw_rad);
  const Scalar s = std::sin(yaw_rad);
  Matrix3<Scalar> r;
  r << c, -s, Scalar(0), s, c, Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return r;
}

/// Rotation about +Z by `yaw_deg` degrees followed by translation `t`.
template <typename Scalar>
RigidTransform<Scalar> transform_from_euler_z(Scalar yaw_deg, const Point3<std::type_identity_t<Scalar>>& t) {
  if (!std::isfinite(yaw_deg)) throw Error("yaw must be finite");
  // Exact values at multiples of 90 degrees keep the trivial cases exact.
  const Scalar wrapped = std::fmod(yaw_deg, Scalar(360));
  if (std::fmod(wrapped, Scalar(90)) == Scalar(0)) {
    const int quarter = (static_cast<int>(wrapped / Scalar(90)) % 4 + 4) % 4;
    static constexpr int kCos[4] = {1, 0, -1, 0};
    static constexpr int kSin[4] = {0, 1, 0, -1};
    Matrix3<Scalar> r;
    r << Scalar(kCos[quarter]), Scalar(-kSin[quarter]), Scalar(0), Scalar(kSin[quarter]), Scalar(kCos[quarter]),
        Scalar(0), Scalar(0), Scalar(0), Scalar(1);
    return RigidTransform<Scalar>(r, t);
  }
  return RigidTransform<Scalar>(rotation_z(deg_to_rad(yaw_deg)), t);
}

}  // namespace bathyreg
