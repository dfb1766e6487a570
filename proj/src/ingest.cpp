#include <bathyreg/ingest.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace bathyreg {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'P', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan" || s == "NaN" || s == "NAN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("csv parse error at line " + std::to_string(line) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

PingTensor::PingTensor(std::size_t n_pings, std::size_t n_beams, std::vector<double> hits)
    : n_pings_(n_pings), n_beams_(n_beams), hits_(std::move(hits)) {
  if (n_pings_ == 0 || n_beams_ == 0) throw Error("invalid shape: n_pings and n_beams must be >= 1");
  if (hits_.size() != n_pings_ * n_beams_ * 3) throw Error("size mismatch");
  for (std::size_t o = 0; o < hits_.size(); o += 3) {
    const int nans = std::isnan(hits_[o]) + std::isnan(hits_[o + 1]) + std::isnan(hits_[o + 2]);
    if (nans == 3) continue;
    if (nans != 0 || !std::isfinite(hits_[o]) || !std::isfinite(hits_[o + 1]) || !std::isfinite(hits_[o + 2])) {
      throw Error("invalid sample");
    }
  }
}

std::size_t PingTensor::count_valid() const {
  std::size_t n = 0;
  for (std::size_t o = 0; o < hits_.size(); o += 3) n += !std::isnan(hits_[o]);
  return n;
}

std::vector<std::uint8_t> encode_ping_tensor(const PingTensor& tensor) {
  if (tensor.n_pings() > std::numeric_limits<std::uint32_t>::max() ||
      tensor.n_beams() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("tensor too large for MBPT");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kMbptHeaderBytes + tensor.data().size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kMbptVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.n_pings()));
  put_u32(out, static_cast<std::uint32_t>(tensor.n_beams()));
  for (const double v : tensor.data()) put_f64(out, v);
  return out;
}

PingTensor decode_ping_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("unrecognized format");
  if (bytes.size() < kMbptHeaderBytes) throw Error("size mismatch");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kMbptVersion) throw Error("unrecognized format: version " + std::to_string(version));
  const std::size_t n_pings = get_u32(bytes.data() + 8);
  const std::size_t n_beams = get_u32(bytes.data() + 12);
  const std::size_t count = n_pings * n_beams * 3;
  if (bytes.size() != kMbptHeaderBytes + count * 8) throw Error("size mismatch");
  std::vector<double> hits(count);
  for (std::size_t i = 0; i < count; ++i) hits[i] = get_f64(bytes.data() + kMbptHeaderBytes + 8 * i);
  return PingTensor(n_pings, n_beams, std::move(hits));
}

PingTensor read_ping_tensor(const std::filesystem::path& path) { return decode_ping_tensor(read_bytes(path)); }

void write_ping_tensor(const PingTensor& tensor, const std::filesystem::path& path) {
  write_bytes(encode_ping_tensor(tensor), path);
}

PingTensor read_ping_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("csv parse error: missing header");
  struct Row {
    std::size_t ping, beam;
    double x, y, z;
  };
  std::vector<Row> rows;
  std::size_t max_ping = 0, max_beam = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    std::string_view fields[5];
    for (int f = 0; f < 5; ++f) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (f == 4)) {
        throw Error("csv parse error at line " + std::to_string(line_no) + ": expected 5 fields");
      }
      fields[f] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    const double ping = parse_double(fields[0], line_no);
    const double beam = parse_double(fields[1], line_no);
    if (!(ping >= 0) || !(beam >= 0) || ping != std::floor(ping) || beam != std::floor(beam)) {
      throw Error("csv parse error at line " + std::to_string(line_no) + ": bad index");
    }
    Row r{static_cast<std::size_t>(ping), static_cast<std::size_t>(beam), parse_double(fields[2], line_no),
          parse_double(fields[3], line_no), parse_double(fields[4], line_no)};
    max_ping = std::max(max_ping, r.ping);
    max_beam = std::max(max_beam, r.beam);
    rows.push_back(r);
  }
  if (rows.empty()) throw Error("csv parse error: no rows");
  const std::size_t n_pings = max_ping + 1, n_beams = max_beam + 1;
  std::vector<double> hits(n_pings * n_beams * 3, std::numeric_limits<double>::quiet_NaN());
  for (const Row& r : rows) {
    const std::size_t o = (r.ping * n_beams + r.beam) * 3;
    hits[o] = r.x;
    hits[o + 1] = r.y;
    hits[o + 2] = r.z;
  }
  return PingTensor(n_pings, n_beams, std::move(hits));
}

void write_ping_csv(const PingTensor& tensor, const std::filesystem::path& path) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  out << "ping_idx,beam_idx,x,y,z\n";
  for (std::size_t p = 0; p < tensor.n_pings(); ++p) {
    for (std::size_t b = 0; b < tensor.n_beams(); ++b) {
      const Point3d h = tensor.hit(p, b);
      out << p << ',' << b << ',' << format_double(h.x()) << ',' << format_double(h.y()) << ','
          << format_double(h.z()) << '\n';
    }
  }
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

PointCloudd read_cloud(const std::filesystem::path& path) {
  const PingTensor t = read_ping_tensor(path);
  if (t.n_beams() != 1) throw Error("unrecognized format: cloud files must have n_beams = 1");
  PointCloudd cloud;
  cloud.points.reserve(t.n_pings());
  for (std::size_t p = 0; p < t.n_pings(); ++p) {
    if (t.is_valid(p, 0)) cloud.points.push_back(t.hit(p, 0));
  }
  return cloud;
}

void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path) {
  if (cloud.empty()) throw Error("empty input");
  std::vector<double> hits;
  hits.reserve(cloud.size() * 3);
  for (const auto& p : cloud.points) hits.insert(hits.end(), {p.x(), p.y(), p.z()});
  write_ping_tensor(PingTensor(cloud.size(), 1, std::move(hits)), path);
}

Submap make_submap(const PingTensor& tensor, int id, std::size_t start, std::size_t end) {
  if (start >= end || end > tensor.n_pings()) throw Error("invalid ping range");
  Submap s;
  s.id = id;
  s.start = start;
  s.end = end;
  for (std::size_t p = start; p < end; ++p) {
    for (std::size_t b = 0; b < tensor.n_beams(); ++b) {
      if (tensor.is_valid(p, b)) s.cloud.points.push_back(tensor.hit(p, b));
    }
  }
  if (s.cloud.empty()) return s;
  // Two-pass centroid: the second pass removes the round-off left by the
  // UTM-scale magnitudes of the first.
  Point3d c = s.cloud.centroid();
  Point3d residual = Point3d::Zero();
  for (const auto& p : s.cloud.points) residual += p - c;
  c += residual / static_cast<double>(s.cloud.size());
  for (auto& p : s.cloud.points) p -= c;
  s.centroid_offset = c;
  return s;
}

std::vector<Submap> build_submaps(const PingTensor& tensor, std::size_t window, std::size_t step) {
  if (step == 0) throw Error("config error: step must be >= 1");
  if (window == 0) throw Error("config error: window must be >= 1");
  if (window > tensor.n_pings()) throw Error("survey too short");
  std::vector<Submap> out;
  int id = 0;
  for (std::size_t offset = 0; offset + window <= tensor.n_pings(); offset += step) {
    out.push_back(make_submap(tensor, id++, offset, offset + window));
  }
  return out;
}

std::vector<DatasetManifest> split_dataset(const std::vector<Submap>& submaps,
                                           const std::vector<SplitBoundary>& boundaries, std::size_t window,
                                           std::size_t step) {
  for (const auto& b : boundaries) {
    if (b.start >= b.end) throw Error("config error: empty split interval '" + b.name + "'");
  }
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    for (std::size_t j = i + 1; j < boundaries.size(); ++j) {
      const auto& a = boundaries[i];
      const auto& b = boundaries[j];
      if (a.start < b.end && b.start < a.end) {
        throw Error("config error: overlapping split boundaries '" + a.name + "' and '" + b.name + "'");
      }
    }
  }
  std::vector<DatasetManifest> out;
  for (const auto& b : boundaries) {
    DatasetManifest m;
    m.split = b.name;
    m.window = window;
    m.step = step;
    for (const auto& s : submaps) {
      if (s.start >= b.start && s.end <= b.end) m.submaps.push_back({s.id, s.start, s.end, s.centroid_offset});
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<SplitBoundary> boundaries_from_fractions(std::size_t n_pings, const std::vector<std::string>& names,
                                                     const std::vector<double>& fractions) {
  if (names.size() != fractions.size() || names.empty()) throw Error("config error: split names/fractions mismatch");
  double total = 0.0;
  for (const double f : fractions) {
    if (!(f > 0.0)) throw Error("config error: split fractions must be positive");
    total += f;
  }
  if (total > 1.0 + 1e-9) throw Error("config error: split fractions exceed 1");
  std::vector<SplitBoundary> out;
  double acc = 0.0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    acc += fractions[i];
    const auto end = std::min(n_pings, static_cast<std::size_t>(std::llround(acc * static_cast<double>(n_pings))));
    out.push_back({names[i], start, end});
    start = end;
  }
  return out;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["split"] = m.split;
  j["window"] = m.window;
  j["step"] = m.step;
  j["source"] = m.source;
  j["seed"] = m.seed;
  j["submap"] = nlohmann::json::array();
  for (const auto& s : m.submaps) {
    j["submap"].push_back({{"id", s.id},
                           {"start", s.start},
                           {"end", s.end},
                           {"centroid_offset", {s.centroid_offset.x(), s.centroid_offset.y(), s.centroid_offset.z()}}});
  }
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.split = j.at("split").get<std::string>();
    m.window = j.at("window").get<std::size_t>();
    m.step = j.at("step").get<std::size_t>();
    m.source = j.value("source", std::string());
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.at("submap")) {
      const auto& c = s.at("centroid_offset");
      m.submaps.push_back({s.at("id").get<int>(), s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>(),
                           Point3d(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>())});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest parse error: ") + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  if (path.empty()) throw Error("I/O error: empty path");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("I/O error: cannot open " + path.string() + " for writing");
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw Error("I/O error: write failed for " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("I/O error: cannot open " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": manifest parse error: " + e.what());
  }
}

}  // namespace bathyreg
