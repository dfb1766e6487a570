#include <bathyreg/metrics.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bathyreg {

CellKey grid_cell(const Point3d& p, const Eigen::Vector2d& origin, double cell_size) {
  return {static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / cell_size)),
          static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / cell_size))};
}

GridMap grid_clouds(const PointCloudd& a, const PointCloudd& b, double cell_size) {
  if (a.empty() || b.empty()) throw Error("empty input");
  if (!(cell_size > 0.0)) throw Error("config error: grid cell size must be positive");
  GridMap grid;
  grid.cell_size = cell_size;
  grid.origin = a.points.front().head<2>();
  for (const auto* cloud : {&a, &b}) {
    for (const auto& p : cloud->points) grid.origin = grid.origin.cwiseMin(p.head<2>());
  }
  for (const auto& p : a.points) grid.cells[grid_cell(p, grid.origin, cell_size)].z_a.push_back(p.z());
  for (const auto& p : b.points) grid.cells[grid_cell(p, grid.origin, cell_size)].z_b.push_back(p.z());
  return grid;
}

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Consistency consistency_error(const PointCloudd& ref, const PointCloudd& src, const RigidTransformd& t,
                              double cell_size) {
  const GridMap grid = grid_clouds(ref, apply_transform(src, t), cell_size);
  std::size_t both = 0;
  double sum_sq = 0.0;
  for (const auto& [key, cell] : grid.cells) {
    if (cell.z_a.empty() || cell.z_b.empty()) continue;
    const double e = mean(cell.z_a) - mean(cell.z_b);
    sum_sq += e * e;
    ++both;
  }
  Consistency out;
  out.overlap_pct = 100.0 * static_cast<double>(both) / static_cast<double>(grid.cells.size());
  if (both > 0) out.error = std::sqrt(sum_sq / static_cast<double>(both));
  return out;
}

std::string consistency_cells_csv(const PointCloudd& ref, const PointCloudd& src, const RigidTransformd& t,
                                  double cell_size) {
  const GridMap grid = grid_clouds(ref, apply_transform(src, t), cell_size);
  std::string out = "ix,iy,x,y,n_ref,n_src,mean_z_ref,mean_z_src,abs_diff\n";
  for (const auto& [key, cell] : grid.cells) {
    const double cx = grid.origin.x() + (static_cast<double>(key[0]) + 0.5) * cell_size;
    const double cy = grid.origin.y() + (static_cast<double>(key[1]) + 0.5) * cell_size;
    out += std::to_string(key[0]) + ',' + std::to_string(key[1]) + ',' + format_double(cx) + ',' +
           format_double(cy) + ',' + std::to_string(cell.z_a.size()) + ',' + std::to_string(cell.z_b.size()) + ',';
    const bool has_a = !cell.z_a.empty(), has_b = !cell.z_b.empty();
    const double za = has_a ? mean(cell.z_a) : 0.0, zb = has_b ? mean(cell.z_b) : 0.0;
    out += (has_a ? format_double(za) : "") + ',' + (has_b ? format_double(zb) : "") + ',';
    if (has_a && has_b) out += format_double(std::abs(za - zb));
    out += '\n';
  }
  return out;
}

double rre(const RigidTransformd& gt, const RigidTransformd& pred) {
  // Same angle as acos((tr - 1) / 2), but the sine from the skew part keeps
  // full precision near zero where the arccos form flattens out.
  const Matrix3d a = gt.rotation().transpose() * pred.rotation();
  const Point3d skew(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0), a(1, 0) - a(0, 1));
  return rad_to_deg(std::atan2(0.5 * skew.norm(), 0.5 * (a.trace() - 1.0)));
}

double rte(const RigidTransformd& gt, const RigidTransformd& pred) {
  return (pred.translation() - gt.translation()).norm();
}

bool is_recalled(const RigidTransformd& gt, const RigidTransformd& pred, double rre_max, double rte_max) {
  return rre(gt, pred) <= rre_max && rte(gt, pred) <= rte_max;
}

double inlier_ratio(const PointCloudd& src, const PointCloudd& ref, const CorrespondenceSet& corr,
                    const RigidTransformd& gt, double threshold) {
  if (corr.empty()) throw Error("empty correspondences");
  const double t2 = threshold * threshold;
  std::size_t hits = 0;
  for (const auto& c : corr.pairs) {
    if ((gt * src.points.at(c.src) - ref.points.at(c.ref)).squaredNorm() <= t2) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(corr.size());
}

double feature_match_recall(std::span<const double> ratios, double min_ratio) {
  if (ratios.empty()) throw Error("empty input");
  const auto hits = std::count_if(ratios.begin(), ratios.end(), [&](double r) { return r >= min_ratio; });
  return static_cast<double>(hits) / static_cast<double>(ratios.size());
}

MetricsReport evaluate_pair(int pair_id, double effective_overlap, const std::string& method, const PointCloudd& ref,
                            const PointCloudd& src, const RigidTransformd& gt,
                            const std::optional<RigidTransformd>& pred, std::optional<double> ir,
                            double cell_size) {
  MetricsReport r;
  r.pair_id = pair_id;
  r.effective_overlap = effective_overlap;
  r.method = method;
  r.inlier_ratio = ir;
  if (!pred) return r;
  r.success = true;
  const Consistency c = consistency_error(ref, src, *pred, cell_size);
  r.consistency_m = c.error;
  r.overlap_pct = c.overlap_pct;
  r.rre_deg = rre(gt, *pred);
  r.rte_m = rte(gt, *pred);
  r.recalled = *r.rre_deg <= kRecallRotationDeg && *r.rte_m <= kRecallTranslationM;
  return r;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return {buf, res.ptr};
}

std::string metrics_csv_header() {
  return "pair_id,effective_overlap,method,success,consistency_m,overlap_pct,rre_deg,rte_m,recalled,inlier_ratio";
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& field, const std::string& where) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) throw Error(where + ": bad number '" + field + "'");
  return v;
}

bool parse_bool(const std::string& field, const std::string& where) {
  if (field == "1" || field == "true") return true;
  if (field == "0" || field == "false") return false;
  throw Error(where + ": bad boolean '" + field + "'");
}

}  // namespace

std::string metrics_csv_row(const MetricsReport& r) {
  std::string s = std::to_string(r.pair_id);
  s += ',' + format_double(r.effective_overlap);
  s += ',' + r.method;
  s += r.success ? ",1" : ",0";
  s += ',' + opt(r.consistency_m);
  s += ',' + opt(r.overlap_pct);
  s += ',' + opt(r.rre_deg);
  s += ',' + opt(r.rte_m);
  s += r.recalled ? ",1" : ",0";
  s += ',' + opt(r.inlier_ratio);
  return s;
}

std::vector<MetricsReport> parse_metrics_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) throw Error(source + ":1: unrecognized format");
  std::vector<MetricsReport> out;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw Error(where + ": expected 10 fields");
    MetricsReport r;
    const auto id = parse_opt(f[0], where);
    if (!id) throw Error(where + ": missing pair_id");
    r.pair_id = static_cast<int>(*id);
    r.effective_overlap = parse_opt(f[1], where).value_or(0.0);
    r.method = f[2];
    r.success = parse_bool(f[3], where);
    r.consistency_m = parse_opt(f[4], where);
    r.overlap_pct = parse_opt(f[5], where);
    r.rre_deg = parse_opt(f[6], where);
    r.rte_m = parse_opt(f[7], where);
    r.recalled = parse_bool(f[8], where);
    r.inlier_ratio = parse_opt(f[9], where);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace bathyreg
