#include "spmm/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace spmm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

double civil_to_epoch(int y, unsigned mo, unsigned d, int h, int mi, double sec) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

bool valid_clock(int h, int mi, double sec) {
  return h >= 0 && h < 24 && mi >= 0 && mi < 60 && sec >= 0.0 && sec < 61.0;
}

// hh:mm:ss[.fff]
bool parse_clock(std::string_view s, int& h, int& mi, double& sec) {
  if (s.size() < 8 || s[2] != ':' || s[5] != ':') return false;
  if (!parse_int(s.substr(0, 2), h) || !parse_int(s.substr(3, 2), mi)) return false;
  auto v = parse_number(s.substr(6));
  if (!v) return false;
  sec = *v;
  return valid_clock(h, mi, sec);
}

std::optional<double> parse_iso(std::string_view s) {
  // YYYY-MM-DD[T ]hh:mm:ss[.fff][Z]
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ')) {
    return std::nullopt;
  }
  if (s.back() == 'Z' || s.back() == 'z') s.remove_suffix(1);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
      !parse_int(s.substr(8, 2), d) || !parse_clock(s.substr(11), h, mi, sec)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(mo),
                                        std::chrono::day(d)};
  if (!ymd.ok()) return std::nullopt;
  return civil_to_epoch(y, mo, d, h, mi, sec);
}

std::optional<double> parse_dd_mon_yyyy(std::string_view s) {
  // DD-Mon-YYYY hh:mm:ss
  static constexpr std::string_view kMonths[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                                 "jul", "aug", "sep", "oct", "nov", "dec"};
  const auto dash1 = s.find('-');
  if (dash1 == std::string_view::npos) return std::nullopt;
  const auto dash2 = s.find('-', dash1 + 1);
  const auto space = s.find(' ', dash2 == std::string_view::npos ? 0 : dash2);
  if (dash2 == std::string_view::npos || space == std::string_view::npos) return std::nullopt;
  int d = 0, y = 0, h = 0, mi = 0;
  double sec = 0;
  if (!parse_int(s.substr(0, dash1), d) ||
      !parse_int(s.substr(dash2 + 1, space - dash2 - 1), y)) {
    return std::nullopt;
  }
  const std::string mon = lower(s.substr(dash1 + 1, dash2 - dash1 - 1));
  const auto it = std::find(std::begin(kMonths), std::end(kMonths), mon);
  if (it == std::end(kMonths)) return std::nullopt;
  const unsigned mo = static_cast<unsigned>(it - std::begin(kMonths)) + 1;
  if (!parse_clock(trim(s.substr(space + 1)), h, mi, sec)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(mo),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) return std::nullopt;
  return civil_to_epoch(y, mo, static_cast<unsigned>(d), h, mi, sec);
}

bool is_skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseErrorKind::Io, 0, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (lower(trim(header[i])) == lower(name)) return i;
  }
  return std::nullopt;
}

// Header cells whose lowercase text contains every fragment.
std::optional<std::size_t> find_column_containing(const std::vector<std::string>& header,
                                                  std::initializer_list<std::string_view> parts,
                                                  std::optional<std::size_t> skip = {}) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (skip && *skip == i) continue;
    const std::string h = lower(trim(header[i]));
    bool all = true;
    for (auto p : parts) all = all && h.find(p) != std::string::npos;
    if (all) return i;
  }
  return std::nullopt;
}

struct TrajectoryColumns {
  std::size_t lat = 0;
  std::size_t lon = 0;
  std::size_t time = 0;
  std::optional<std::size_t> date;  // benchmark layout splits date and clock
};

TrajectoryColumns resolve_trajectory_columns(const std::vector<std::string>& header,
                                             const TrajectoryFormat& fmt, std::size_t row) {
  TrajectoryColumns cols;
  if (fmt.format == InputFormat::Native) {
    auto t = find_column(header, fmt.timestamp_column);
    auto la = find_column(header, fmt.lat_column);
    auto lo = find_column(header, fmt.lon_column);
    if (!t || !la || !lo) {
      throw ParseError(ParseErrorKind::Syntax, row,
                       fmt::format("header must name columns '{}', '{}', '{}'",
                                   fmt.timestamp_column, fmt.lat_column, fmt.lon_column));
    }
    cols.time = *t;
    cols.lat = *la;
    cols.lon = *lo;
    return cols;
  }
  auto la = find_column_containing(header, {"lat"});
  auto lo = find_column_containing(header, {"lon"});
  auto date = find_column_containing(header, {"date"});
  auto time = find_column_containing(header, {"time"}, date);
  if (!time) time = find_column_containing(header, {"timestamp"});
  if (!la || !lo || !time) {
    throw ParseError(ParseErrorKind::Syntax, row,
                     "benchmark header must contain latitude, longitude and time columns");
  }
  cols.lat = *la;
  cols.lon = *lo;
  cols.time = *time;
  cols.date = date;
  return cols;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_double(double v) {
  // Fixed notation never needs more than ~330 characters for a double.
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (auto v = parse_number(text); v && std::isfinite(*v)) return v;
  if (auto v = parse_iso(text)) return v;
  if (auto v = parse_dd_mon_yyyy(text)) return v;
  return std::nullopt;
}

void validate(const Trajectory& traj) {
  if (traj.empty()) throw DomainError("trajectory is empty");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& r = traj.records[i];
    require_valid(r.position);
    if (!std::isfinite(r.timestamp)) throw DomainError("non-finite timestamp");
    if (i > 0 && r.timestamp < traj.records[i - 1].timestamp) {
      throw DomainError(fmt::format("timestamp decreases at record {}", i));
    }
  }
}

GeoPoint centroid(const Trajectory& traj) {
  if (traj.empty()) throw DomainError("trajectory is empty");
  double lat = 0, lon = 0;
  for (const auto& r : traj.records) {
    lat += r.position.lat;
    lon += r.position.lon;
  }
  const auto n = static_cast<double>(traj.size());
  return {lat / n, lon / n};
}

Trajectory read_trajectory(std::istream& in, const TrajectoryFormat& fmt, std::string id) {
  const char delim = fmt.format == InputFormat::Benchmark ? '\t' : ',';
  Trajectory traj;
  traj.id = std::move(id);
  std::optional<TrajectoryColumns> cols;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(std::move(line));
    if (is_skippable(line)) continue;
    auto fields = split_csv_line(line, delim);
    if (!cols) {
      cols = resolve_trajectory_columns(fields, fmt, row);
      continue;
    }
    const std::size_t need = std::max({cols->lat, cols->lon, cols->time,
                                       cols->date.value_or(0)}) + 1;
    if (fields.size() < need) {
      throw ParseError(ParseErrorKind::Syntax, row,
                       fmt::format("expected at least {} fields, got {}", need, fields.size()));
    }
    std::string time_text = fields[cols->time];
    if (cols->date) time_text = std::string(trim(fields[*cols->date])) + " " + time_text;
    const auto ts = parse_timestamp(time_text);
    const auto lat = parse_number(fields[cols->lat]);
    const auto lon = parse_number(fields[cols->lon]);
    if (!ts || !lat || !lon) {
      throw ParseError(ParseErrorKind::Syntax, row, "unparseable row: " + line);
    }
    const GeoPoint pos{*lat, *lon};
    if (!is_valid(pos)) {
      throw ParseError(ParseErrorKind::InvalidCoordinate, row,
                       fmt::format("invalid coordinate lat={} lon={}", *lat, *lon));
    }
    if (!traj.records.empty() && *ts < traj.records.back().timestamp) {
      throw ParseError(ParseErrorKind::NonMonotonicTime, row, "timestamp decreases");
    }
    traj.records.push_back({*ts, pos, traj.records.size()});
  }
  if (traj.records.empty()) throw ParseError(ParseErrorKind::EmptyInput, 0, "no trajectory records");
  return traj;
}

Trajectory parse_trajectory(const std::filesystem::path& path, const TrajectoryFormat& fmt) {
  auto in = open_input(path);
  return read_trajectory(in, fmt, path.stem().string());
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "timestamp,lat,lon\n";
  for (const auto& r : traj.records) {
    out << format_double(r.timestamp) << ',' << format_double(r.position.lat) << ','
        << format_double(r.position.lon) << '\n';
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_output(path);
  write_trajectory(out, traj);
}

// ---------------------------------------------------------------------------
// Road network

std::vector<GeoPoint> parse_wkt_linestring(std::string_view wkt) {
  wkt = trim(wkt);
  const std::string head = lower(wkt.substr(0, std::min<std::size_t>(wkt.size(), 10)));
  if (head != "linestring") throw DomainError("geometry is not a LINESTRING");
  wkt.remove_prefix(10);
  wkt = trim(wkt);
  if (wkt.size() < 2 || wkt.front() != '(' || wkt.back() != ')') {
    throw DomainError("malformed LINESTRING");
  }
  wkt = wkt.substr(1, wkt.size() - 2);
  std::vector<GeoPoint> pts;
  while (!wkt.empty()) {
    const auto comma = wkt.find(',');
    std::string_view pair = trim(wkt.substr(0, comma));
    const auto sp = pair.find_first_of(" \t");
    if (sp == std::string_view::npos) throw DomainError("malformed LINESTRING vertex");
    const auto lon = parse_number(pair.substr(0, sp));
    const auto lat = parse_number(pair.substr(sp + 1));
    if (!lon || !lat) throw DomainError("malformed LINESTRING vertex");
    const GeoPoint p{*lat, *lon};
    if (!is_valid(p)) throw InvalidCoordinate("LINESTRING vertex out of range");
    pts.push_back(p);
    if (comma == std::string_view::npos) break;
    wkt.remove_prefix(comma + 1);
  }
  return pts;
}

std::string to_wkt_linestring(const std::vector<GeoPoint>& vertices) {
  std::string s = "LINESTRING(";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (i) s += ", ";
    s += format_double(vertices[i].lon) + " " + format_double(vertices[i].lat);
  }
  s += ")";
  return s;
}

RoadNetwork RoadNetwork::build(std::vector<EdgeInput> inputs, double cell_size,
                               std::optional<GeoPoint> origin) {
  RoadNetwork net;
  for (auto& in : inputs) {
    in.vertices.erase(std::unique(in.vertices.begin(), in.vertices.end()), in.vertices.end());
  }
  if (!origin) {
    double lat = 0, lon = 0;
    std::size_t n = 0;
    for (const auto& in : inputs) {
      for (const auto& v : in.vertices) {
        lat += v.lat;
        lon += v.lon;
        ++n;
      }
    }
    origin = n ? GeoPoint{lat / static_cast<double>(n), lon / static_cast<double>(n)}
               : GeoPoint{0.0, 0.0};
  }
  net.projection_ = Projection(*origin);
  net.edges_.reserve(inputs.size());
  for (auto& in : inputs) {
    if (in.node_from.empty() || in.node_to.empty()) {
      throw ParseError(ParseErrorKind::DanglingNode, 0,
                       "edge '" + in.edge_id + "' has an empty node reference");
    }
    if (in.vertices.size() < 2) {
      throw ParseError(ParseErrorKind::TooFewVertices, 0,
                       "edge '" + in.edge_id + "' has fewer than two distinct vertices");
    }
    if (net.by_id_.count(in.edge_id)) {
      throw ParseError(ParseErrorKind::DuplicateIdentifier, 0,
                       "duplicate edge id '" + in.edge_id + "'");
    }
    std::vector<PlanarPoint> planar;
    planar.reserve(in.vertices.size());
    for (const auto& v : in.vertices) planar.push_back(net.projection_.project(v));
    planar.erase(std::unique(planar.begin(), planar.end()), planar.end());
    if (planar.size() < 2) {
      throw ParseError(ParseErrorKind::TooFewVertices, 0,
                       "edge '" + in.edge_id + "' collapses to a point");
    }
    const std::size_t handle = net.edges_.size();
    net.by_id_.emplace(in.edge_id, handle);
    net.adjacency_[in.node_from].push_back(handle);
    if (in.node_to != in.node_from) net.adjacency_[in.node_to].push_back(handle);
    net.edges_.push_back(RoadEdge{std::move(in.edge_id), std::move(in.node_from),
                                  std::move(in.node_to), std::move(in.vertices),
                                  Polyline(std::move(planar))});
  }
  std::vector<Polyline> lines;
  lines.reserve(net.edges_.size());
  for (const auto& e : net.edges_) lines.push_back(e.geometry);
  net.index_ = SpatialIndex::build(lines, cell_size);
  return net;
}

std::optional<std::size_t> RoadNetwork::find(const std::string& edge_id) const {
  auto it = by_id_.find(edge_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t RoadNetwork::handle_of(const std::string& edge_id) const {
  auto h = find(edge_id);
  if (!h) throw DomainError("unknown edge id '" + edge_id + "'");
  return *h;
}

const std::vector<std::size_t>& RoadNetwork::incident(const std::string& node) const {
  static const std::vector<std::size_t> kNone;
  auto it = adjacency_.find(node);
  return it == adjacency_.end() ? kNone : it->second;
}

RoadNetwork read_road_network(std::istream& in, const NetworkFormat& fmt) {
  const bool bench = fmt.format == InputFormat::Benchmark;
  const char delim = bench ? '\t' : ',';
  std::vector<RoadNetwork::EdgeInput> inputs;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t id_col = 0, from_col = 1, to_col = 2;
  std::optional<std::size_t> wkt_col;
  bool have_header = false;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(std::move(line));
    if (is_skippable(line)) continue;
    auto fields = split_csv_line(line, delim);
    if (!have_header) {
      have_header = true;
      if (bench) {
        auto id = find_column_containing(fields, {"edge"});
        auto from = find_column_containing(fields, {"from"});
        auto to = find_column_containing(fields, {"to"}, from);
        if (id) id_col = *id;
        if (from) from_col = *from;
        if (to) to_col = *to;
        wkt_col = find_column_containing(fields, {"geom"});
        if (!wkt_col) wkt_col = find_column_containing(fields, {"wkt"});
        if (!wkt_col) wkt_col = find_column_containing(fields, {"linestring"});
      } else {
        auto id = find_column(fields, "edge_id");
        auto from = find_column(fields, "node_from");
        auto to = find_column(fields, "node_to");
        wkt_col = find_column(fields, "wkt");
        if (!id || !from || !to || !wkt_col) {
          throw ParseError(ParseErrorKind::Syntax, row,
                           "header must be edge_id,node_from,node_to,wkt");
        }
        id_col = *id;
        from_col = *from;
        to_col = *to;
      }
      continue;
    }
    // Without a named geometry column, take the first field holding a WKT.
    std::size_t geom = wkt_col.value_or(fields.size());
    if (!wkt_col) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (lower(trim(fields[i])).rfind("linestring", 0) == 0) geom = i;
      }
    }
    const std::size_t need = std::max({id_col, from_col, to_col}) + 1;
    if (fields.size() < need || geom >= fields.size()) {
      throw ParseError(ParseErrorKind::Syntax, row, "too few fields in network row");
    }
    RoadNetwork::EdgeInput e;
    e.edge_id = std::string(trim(fields[id_col]));
    e.node_from = std::string(trim(fields[from_col]));
    e.node_to = std::string(trim(fields[to_col]));
    if (e.edge_id.empty()) throw ParseError(ParseErrorKind::Syntax, row, "empty edge id");
    if (e.node_from.empty() || e.node_to.empty()) {
      throw ParseError(ParseErrorKind::DanglingNode, row, "empty node reference");
    }
    try {
      e.vertices = parse_wkt_linestring(fields[geom]);
    } catch (const InvalidCoordinate& ex) {
      throw ParseError(ParseErrorKind::InvalidCoordinate, row, ex.what());
    } catch (const DomainError& ex) {
      throw ParseError(ParseErrorKind::Syntax, row, ex.what());
    }
    if (!seen.emplace(e.edge_id, row).second) {
      throw ParseError(ParseErrorKind::DuplicateIdentifier, row,
                       "duplicate edge id '" + e.edge_id + "'");
    }
    inputs.push_back(std::move(e));
  }
  if (inputs.empty()) throw ParseError(ParseErrorKind::EmptyInput, 0, "no network edges");
  try {
    return RoadNetwork::build(std::move(inputs), fmt.index_cell_size);
  } catch (const InvalidCoordinate& ex) {
    throw ParseError(ParseErrorKind::InvalidCoordinate, 0, ex.what());
  }
}

RoadNetwork parse_road_network(const std::filesystem::path& path, const NetworkFormat& fmt) {
  auto in = open_input(path);
  return read_road_network(in, fmt);
}

void write_road_network(std::ostream& out, const RoadNetwork& net) {
  out << "edge_id,node_from,node_to,wkt\n";
  for (const auto& e : net.edges()) {
    out << e.edge_id << ',' << e.node_from << ',' << e.node_to << ",\""
        << to_wkt_linestring(e.geo_vertices) << "\"\n";
  }
}

void write_road_network(const std::filesystem::path& path, const RoadNetwork& net) {
  auto out = open_output(path);
  write_road_network(out, net);
}

// ---------------------------------------------------------------------------
// Ground truth

GroundTruthRoute read_ground_truth(std::istream& in, const RoadNetwork& net) {
  GroundTruthRoute route;
  std::string line;
  std::size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(std::move(line));
    if (is_skippable(line)) continue;
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    const std::string id(trim(split_csv_line(line, delim).front()));
    if (first) {
      first = false;
      const bool header = id.find_first_of(" \t") != std::string::npos || lower(id) == "edge_id";
      if (header && !net.contains(id)) continue;
    }
    if (!net.contains(id)) {
      throw ParseError(ParseErrorKind::UnknownEdge, row, "unknown edge id '" + id + "'");
    }
    route.edge_ids.push_back(id);
  }
  if (route.edge_ids.empty()) throw ParseError(ParseErrorKind::EmptyInput, 0, "empty route");
  return route;
}

GroundTruthRoute parse_ground_truth(const std::filesystem::path& path, const RoadNetwork& net) {
  auto in = open_input(path);
  return read_ground_truth(in, net);
}

}  // namespace spmm
