#pragma once

#include <bathyreg/core.hpp>
#include <bathyreg/registration.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bathyreg {

inline constexpr double kDefaultGridCell = 2.0;
inline constexpr double kRecallRotationDeg = 5.0;
inline constexpr double kRecallTranslationM = 10.0;
inline constexpr double kInlierThreshold = 2.0;
inline constexpr double kMinInlierRatio = 0.05;

using CellKey = std::array<std::int64_t, 2>;

/// z-values per XY cell, kept separately for each of the two clouds.
struct GridCell {
  std::vector<double> z_a;
  std::vector<double> z_b;
};

struct GridMap {
  double cell_size = kDefaultGridCell;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::map<CellKey, GridCell> cells;
};

CellKey grid_cell(const Point3d& p, const Eigen::Vector2d& origin, double cell_size);

/// Origin is the XY minimum of both clouds together. Throws on empty input.
GridMap grid_clouds(const PointCloudd& a, const PointCloudd& b, double cell_size = kDefaultGridCell);

struct Consistency {
  std::optional<double> error;  // RMS over both-hit cells of |mean z_ref - mean z_src|
  double overlap_pct = 0.0;     // both-hit cells / cells hit by either
};

Consistency consistency_error(const PointCloudd& ref, const PointCloudd& src, const RigidTransformd& t,
                              double cell_size = kDefaultGridCell);

/// One row per occupied cell of the joint grid, for plotting consistency maps:
/// "ix,iy,x,y,n_ref,n_src,mean_z_ref,mean_z_src,abs_diff" with x, y the cell
/// centre and the means / difference left empty where a side has no hits.
std::string consistency_cells_csv(const PointCloudd& ref, const PointCloudd& src, const RigidTransformd& t,
                                  double cell_size = kDefaultGridCell);

/// Geodesic angle between the two rotations, degrees.
double rre(const RigidTransformd& gt, const RigidTransformd& pred);
double rte(const RigidTransformd& gt, const RigidTransformd& pred);
bool is_recalled(const RigidTransformd& gt, const RigidTransformd& pred, double rre_max = kRecallRotationDeg,
                 double rte_max = kRecallTranslationM);

/// Fraction of correspondences within `threshold` under gt. Throws on empty input.
double inlier_ratio(const PointCloudd& src, const PointCloudd& ref, const CorrespondenceSet& corr,
                    const RigidTransformd& gt, double threshold = kInlierThreshold);

/// Fraction of pairs whose inlier ratio reaches `min_ratio` (inclusive).
double feature_match_recall(std::span<const double> ratios, double min_ratio = kMinInlierRatio);

/// One row of the per-pair metrics table; optional fields are blank when not applicable.
struct MetricsReport {
  int pair_id = 0;
  double effective_overlap = 0.0;
  std::string method;
  bool success = false;
  std::optional<double> consistency_m;
  std::optional<double> overlap_pct;
  std::optional<double> rre_deg;
  std::optional<double> rte_m;
  bool recalled = false;
  std::optional<double> inlier_ratio;
};

/// Scores a registration outcome; `pred` is absent for failures.
MetricsReport evaluate_pair(int pair_id, double effective_overlap, const std::string& method,
                            const PointCloudd& ref, const PointCloudd& src, const RigidTransformd& gt,
                            const std::optional<RigidTransformd>& pred, std::optional<double> ir = std::nullopt,
                            double cell_size = kDefaultGridCell);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);
std::vector<MetricsReport> parse_metrics_csv(const std::string& text, const std::string& source = "<memory>");

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace bathyreg
