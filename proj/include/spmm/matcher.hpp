#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spmm/fuzzy.hpp"
#include "spmm/ingest.hpp"

namespace spmm {

/// Thresholds of the matching state machine. None of them come from the
/// method description itself; they are repository defaults.
struct MatcherConfig {
  double candidate_radius = 50.0;  ///< meters, IMP and junction search radius
  double junction_radius = 15.0;   ///< meters from an end node that counts as "at a junction"
  double pd_escape = 35.0;         ///< meters off the current link that forces re-evaluation
  double min_likelihood = 50.0;    ///< below this a selection is low-confidence
  std::size_t reinit_after = 3;    ///< consecutive low-confidence steps before re-running IMP
  double min_heading_step = 1.0;   ///< meters moved before a new heading is taken
};

struct MatcherSettings {
  RuleBase rules = default_rule_base();
  MatcherConfig config;
};

/// Reads a JSON settings file; every key is optional and falls back to the
/// defaults. See README for the schema.
MatcherSettings load_matcher_settings(const std::filesystem::path& path);
MatcherSettings parse_matcher_settings(const std::string& json_text);
/// Serializes settings to the same JSON schema.
std::string dump_matcher_settings(const MatcherSettings& settings);

/// One scored road link for a fix.
struct LinkCandidate {
  std::size_t edge = 0;  ///< handle into RoadNetwork::edges()
  double pd = 0.0;       ///< perpendicular distance, meters
  double he = 0.0;       ///< heading error, degrees in [0, 180]
  double likelihood = 0.0;
  PlanarPoint foot = PlanarPoint::Zero();
  std::size_t segment = 0;
  double arc_offset = 0.0;
  bool forward = true;  ///< travelling from node_from towards node_to
};

enum class MatchPhase { Imp, SmpAlong, SmpJunction };

const char* to_string(MatchPhase phase);

struct MatchState {
  enum class Phase { Uninitialized, OnLink };
  Phase phase = Phase::Uninitialized;
  std::size_t edge = 0;
  bool forward = true;
  std::optional<double> last_heading;
  std::size_t consecutive_low_confidence = 0;
};

struct MatchedPoint {
  std::size_t source_index = 0;
  std::size_t edge = 0;
  std::string edge_id;
  double offset = 0.0;  ///< arc offset along the edge, meters
  PlanarPoint snapped_planar = PlanarPoint::Zero();
  GeoPoint snapped;
  double likelihood = 0.0;
  MatchPhase phase = MatchPhase::Imp;
  bool confident = true;
};

struct MatchResult {
  std::vector<MatchedPoint> matched;
  std::vector<std::string> edge_sequence;
  std::size_t total_points = 0;
  double wall_time_s = 0.0;  ///< matching loop only
};

/// Edges whose polyline lies within `radius` of p, nearest first (ties by
/// handle).
std::vector<std::size_t> candidate_links(const RoadNetwork& net, const PlanarPoint& p,
                                         double radius);

/// PD and HE of a fix against one edge, and their fuzzy likelihood. The link
/// bearing comes from the segment holding the foot point and is compared in
/// both travel directions; the smaller error wins. Without a heading HE is 0.
LinkCandidate score_link(const RoadNetwork& net, std::size_t edge, const PlanarPoint& p,
                         std::optional<double> heading, const RuleBase& rules);

/// Highest likelihood first, then smaller PD, then lexicographic edge id.
bool better_candidate(const RoadNetwork& net, const LinkCandidate& a, const LinkCandidate& b);

struct Selection {
  std::optional<LinkCandidate> best;
  bool confident = false;
};

/// Initial link identification. With no edge inside the candidate radius
/// `best` holds the nearest edge of the whole network and the selection is
/// not confident.
Selection imp(const RoadNetwork& net, const PlanarPoint& p, std::optional<double> heading,
              const MatcherSettings& settings);

struct StepResult {
  MatchState state;
  MatchedPoint point;
};

/// One tracking step from an ON_LINK state: stays on the link while the fix
/// is in its interior, otherwise re-scores the link and its neighbors at the
/// nearer end node. Repeated low confidence falls back to IMP.
StepResult smp_step(const RoadNetwork& net, const MatchState& state, const PlanarPoint& p,
                    std::optional<double> heading, const MatcherSettings& settings,
                    std::size_t source_index = 0);

/// Matches every fix of a trajectory (at least two records).
MatchResult match_trajectory(const RoadNetwork& net, const Trajectory& traj,
                             const MatcherSettings& settings = {});

/// Per-fix headings used by the matcher: bearing from the previous fix once
/// it is at least `min_step` meters away, otherwise the previous heading.
/// The first fix looks ahead to the first fix that far away.
std::vector<std::optional<double>> trajectory_headings(const std::vector<PlanarPoint>& pts,
                                                       double min_step);

void write_match_result(std::ostream& out, const MatchResult& result);
void write_edge_sequence(std::ostream& out, const MatchResult& result);

}  // namespace spmm
