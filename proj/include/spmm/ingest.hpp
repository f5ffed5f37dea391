#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "spmm/geo.hpp"
#include "spmm/spatial_index.hpp"

namespace spmm {

/// One GPS fix.
struct TrajectoryRecord {
  double timestamp = 0.0;  ///< seconds since the Unix epoch (or any monotonic origin)
  GeoPoint position;
  std::size_t source_index = 0;  ///< ordinal of the row in the input file

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Time-ordered GPS fixes of one moving object.
struct Trajectory {
  std::string id;
  std::vector<TrajectoryRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

/// Throws DomainError when timestamps decrease, a coordinate is invalid, or
/// the trajectory is empty.
void validate(const Trajectory& traj);

/// Arithmetic mean of all record coordinates.
GeoPoint centroid(const Trajectory& traj);

enum class InputFormat {
  Native,     ///< comma-separated, named header columns
  Benchmark,  ///< tab-separated dataset layout, see README
};

struct TrajectoryFormat {
  InputFormat format = InputFormat::Native;
  std::string timestamp_column = "timestamp";
  std::string lat_column = "lat";
  std::string lon_column = "lon";
};

struct NetworkFormat {
  InputFormat format = InputFormat::Native;
  double index_cell_size = SpatialIndex::kDefaultCellSize;
};

/// Parses a timestamp as integer/decimal epoch seconds or as a UTC ISO-8601
/// date-time (`YYYY-MM-DD[T ]hh:mm:ss[.fff][Z]`). Also accepts the
/// `DD-Mon-YYYY hh:mm:ss` form. Returns nullopt when nothing matches.
std::optional<double> parse_timestamp(std::string_view text);

Trajectory read_trajectory(std::istream& in, const TrajectoryFormat& fmt = {},
                           std::string id = {});
Trajectory parse_trajectory(const std::filesystem::path& path,
                            const TrajectoryFormat& fmt = {});

/// Writes the native `timestamp,lat,lon` CSV. Numbers are printed in their
/// shortest round-trip form, so reading the output back yields identical
/// records.
void write_trajectory(std::ostream& out, const Trajectory& traj);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

struct RoadEdge {
  std::string edge_id;
  std::string node_from;
  std::string node_to;
  std::vector<GeoPoint> geo_vertices;
  Polyline geometry;  ///< projected with the owning network's projection

  double length() const { return geometry.length(); }
};

/// Road graph of polyline arcs. Edges are addressed either by their string
/// id or by their position (handle) in `edges()`.
class RoadNetwork {
 public:
  struct EdgeInput {
    std::string edge_id;
    std::string node_from;
    std::string node_to;
    std::vector<GeoPoint> vertices;
  };

  RoadNetwork() = default;

  /// Builds adjacency and spatial index. The projection origin is the
  /// centroid of all vertices unless one is given. Throws ParseError
  /// (row 0) on duplicate ids, short geometries or empty node ids.
  static RoadNetwork build(std::vector<EdgeInput> inputs,
                           double cell_size = SpatialIndex::kDefaultCellSize,
                           std::optional<GeoPoint> origin = std::nullopt);

  const Projection& projection() const { return projection_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  const RoadEdge& edge(std::size_t handle) const { return edges_.at(handle); }
  std::optional<std::size_t> find(const std::string& edge_id) const;
  std::size_t handle_of(const std::string& edge_id) const;
  bool contains(const std::string& edge_id) const { return find(edge_id).has_value(); }

  /// Edge handles incident to a node, ascending. Empty for unknown nodes.
  const std::vector<std::size_t>& incident(const std::string& node) const;
  const std::map<std::string, std::vector<std::size_t>>& adjacency() const {
    return adjacency_;
  }
  const SpatialIndex& index() const { return index_; }

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

 private:
  Projection projection_;
  std::vector<RoadEdge> edges_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> adjacency_;
  SpatialIndex index_;
};

RoadNetwork read_road_network(std::istream& in, const NetworkFormat& fmt = {});
RoadNetwork parse_road_network(const std::filesystem::path& path,
                               const NetworkFormat& fmt = {});

/// Writes the native `edge_id,node_from,node_to,wkt` CSV.
void write_road_network(std::ostream& out, const RoadNetwork& net);
void write_road_network(const std::filesystem::path& path, const RoadNetwork& net);

/// Parses `LINESTRING(lon lat, lon lat, ...)`.
std::vector<GeoPoint> parse_wkt_linestring(std::string_view wkt);
std::string to_wkt_linestring(const std::vector<GeoPoint>& vertices);

/// True route as an ordered list of edge ids.
struct GroundTruthRoute {
  std::vector<std::string> edge_ids;

  std::size_t size() const { return edge_ids.size(); }
};

/// One edge id per line (first field of a comma- or tab-separated row).
/// A first line whose leading field contains whitespace or reads `edge_id`
/// is a header; any other unknown id is an error.
GroundTruthRoute read_ground_truth(std::istream& in, const RoadNetwork& net);
GroundTruthRoute parse_ground_truth(const std::filesystem::path& path,
                                    const RoadNetwork& net);

/// Splits one CSV line, honouring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line, char delim = ',');

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace spmm
