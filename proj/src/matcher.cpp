#include "spmm/matcher.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

namespace spmm {

using nlohmann::json;

const char* to_string(MatchPhase phase) {
  switch (phase) {
    case MatchPhase::Imp: return "IMP";
    case MatchPhase::SmpAlong: return "SMP_ALONG";
    case MatchPhase::SmpJunction: return "SMP_JUNCTION";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Settings

namespace {

MembershipFunction mf_from_json(const json& j) {
  const std::string shape = j.at("shape").get<std::string>();
  const auto p = j.at("params").get<std::vector<double>>();
  auto need = [&](std::size_t n) {
    if (p.size() != n) {
      throw DomainError(fmt::format("shape '{}' takes {} parameters", shape, n));
    }
  };
  if (shape == "triangular") {
    need(3);
    return MembershipFunction::triangular(p[0], p[1], p[2]);
  }
  if (shape == "trapezoidal") {
    need(4);
    return MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3]);
  }
  if (shape == "z") {
    need(2);
    return MembershipFunction::z_shaped(p[0], p[1]);
  }
  if (shape == "s") {
    need(2);
    return MembershipFunction::s_shaped(p[0], p[1]);
  }
  throw DomainError("unknown membership shape '" + shape + "'");
}

json mf_to_json(const MembershipFunction& mf) {
  static constexpr const char* kNames[] = {"triangular", "trapezoidal", "z", "s"};
  const auto p = mf.params();
  return {{"shape", kNames[static_cast<int>(mf.shape())]},
          {"params", std::vector<double>(p.begin(), p.end())}};
}

FuzzyVariable variable_from_json(const json& j) {
  const auto universe = j.at("universe").get<std::vector<double>>();
  if (universe.size() != 2) throw DomainError("universe must be [lo, hi]");
  std::vector<FuzzyTerm> terms;
  for (const auto& t : j.at("terms")) {
    terms.push_back({t.at("label").get<std::string>(), mf_from_json(t)});
  }
  return {j.at("name").get<std::string>(), universe[0], universe[1], std::move(terms)};
}

json variable_to_json(const FuzzyVariable& v) {
  json terms = json::array();
  for (const auto& t : v.terms()) {
    json jt = mf_to_json(t.mf);
    jt["label"] = t.label;
    terms.push_back(std::move(jt));
  }
  return {{"name", v.name()}, {"universe", {v.lo(), v.hi()}}, {"terms", std::move(terms)}};
}

MatcherSettings settings_from_json(const json& j) {
  MatcherSettings s;
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    auto& c = s.config;
    c.candidate_radius = t.value("candidate_radius_m", c.candidate_radius);
    c.junction_radius = t.value("junction_radius_m", c.junction_radius);
    c.pd_escape = t.value("pd_escape_m", c.pd_escape);
    c.min_likelihood = t.value("min_likelihood", c.min_likelihood);
    c.reinit_after = t.value("reinit_after", c.reinit_after);
    c.min_heading_step = t.value("min_heading_step_m", c.min_heading_step);
    if (!(c.candidate_radius > 0) || !(c.junction_radius >= 0) || !(c.pd_escape > 0) ||
        c.reinit_after < 1 || !(c.min_heading_step >= 0)) {
      throw DomainError("matcher thresholds out of range");
    }
  }
  const bool custom_fis = j.contains("inputs") || j.contains("output") || j.contains("rules");
  if (!custom_fis) return s;
  if (!(j.contains("inputs") && j.contains("output") && j.contains("rules"))) {
    throw DomainError("a custom rule base needs 'inputs', 'output' and 'rules' together");
  }
  std::vector<FuzzyVariable> inputs;
  for (const auto& v : j.at("inputs")) inputs.push_back(variable_from_json(v));
  if (inputs.size() != 2 || inputs[0].name() != "pd" || inputs[1].name() != "he") {
    throw DomainError("rule base inputs must be exactly 'pd' then 'he'");
  }
  RuleBase rb(std::move(inputs), variable_from_json(j.at("output")));
  for (const auto& r : j.at("rules")) {
    std::vector<std::pair<std::string, std::string>> ante;
    for (const auto& [var, label] : r.at("if").items()) {
      ante.emplace_back(var, label.get<std::string>());
    }
    rb.add_rule(ante, r.at("then").get<std::string>(), r.value("weight", 1.0));
  }
  s.rules = std::move(rb);
  return s;
}

}  // namespace

MatcherSettings parse_matcher_settings(const std::string& json_text) {
  try {
    return settings_from_json(json::parse(json_text));
  } catch (const json::exception& ex) {
    throw ParseError(ParseErrorKind::Syntax, 0, std::string("matcher settings: ") + ex.what());
  }
}

MatcherSettings load_matcher_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseErrorKind::Io, 0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matcher_settings(ss.str());
}

std::string dump_matcher_settings(const MatcherSettings& s) {
  const auto& c = s.config;
  json j;
  j["thresholds"] = {{"candidate_radius_m", c.candidate_radius},
                     {"junction_radius_m", c.junction_radius},
                     {"pd_escape_m", c.pd_escape},
                     {"min_likelihood", c.min_likelihood},
                     {"reinit_after", c.reinit_after},
                     {"min_heading_step_m", c.min_heading_step}};
  j["inputs"] = json::array();
  for (const auto& v : s.rules.inputs()) j["inputs"].push_back(variable_to_json(v));
  j["output"] = variable_to_json(s.rules.output());
  j["rules"] = json::array();
  for (const auto& r : s.rules.rules()) {
    json cond = json::object();
    for (const auto& [vi, ti] : r.antecedent) {
      cond[s.rules.inputs()[vi].name()] = s.rules.inputs()[vi].terms()[ti].label;
    }
    j["rules"].push_back({{"if", cond},
                          {"then", s.rules.output().terms()[r.consequent].label},
                          {"weight", r.weight}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Scoring

std::vector<std::size_t> candidate_links(const RoadNetwork& net, const PlanarPoint& p,
                                         double radius) {
  if (!(radius > 0)) throw DomainError("candidate radius must be positive");
  std::vector<std::pair<double, std::size_t>> hits;
  for (auto h : net.index().query(p, radius)) {
    const double d = project_onto_polyline(p, net.edge(h).geometry).distance;
    if (d <= radius) hits.emplace_back(d, h);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::size_t> out;
  out.reserve(hits.size());
  for (const auto& [d, h] : hits) out.push_back(h);
  return out;
}

LinkCandidate score_link(const RoadNetwork& net, std::size_t edge, const PlanarPoint& p,
                         std::optional<double> heading, const RuleBase& rules) {
  const auto& line = net.edge(edge).geometry;
  const auto proj = project_onto_polyline(p, line);
  LinkCandidate c;
  c.edge = edge;
  c.pd = proj.distance;
  c.foot = proj.foot;
  c.segment = proj.segment_index;
  c.arc_offset = proj.arc_offset;
  if (heading) {
    const auto seg = line.segment(proj.segment_index);
    const double link = bearing(seg.a, seg.b);
    const double fwd = heading_error(*heading, link);
    const double bwd = heading_error(*heading, link + 180.0);
    c.forward = fwd <= bwd;
    c.he = std::min(fwd, bwd);
  }
  const double crisp[] = {c.pd, c.he};
  c.likelihood = rules.evaluate(crisp);
  return c;
}

bool better_candidate(const RoadNetwork& net, const LinkCandidate& a, const LinkCandidate& b) {
  if (a.likelihood != b.likelihood) return a.likelihood > b.likelihood;
  if (a.pd != b.pd) return a.pd < b.pd;
  return net.edge(a.edge).edge_id < net.edge(b.edge).edge_id;
}

namespace {

std::optional<LinkCandidate> pick(const RoadNetwork& net, const std::vector<std::size_t>& edges,
                                  const PlanarPoint& p, std::optional<double> heading,
                                  const RuleBase& rules) {
  std::optional<LinkCandidate> best;
  for (auto e : edges) {
    auto c = score_link(net, e, p, heading, rules);
    if (!best || better_candidate(net, c, *best)) best = c;
  }
  return best;
}

MatchedPoint to_matched(const RoadNetwork& net, const LinkCandidate& c, MatchPhase phase,
                        bool confident, std::size_t source_index) {
  MatchedPoint m;
  m.source_index = source_index;
  m.edge = c.edge;
  m.edge_id = net.edge(c.edge).edge_id;
  m.offset = c.arc_offset;
  m.snapped_planar = c.foot;
  m.snapped = net.projection().unproject(c.foot);
  m.likelihood = c.likelihood;
  m.phase = phase;
  m.confident = confident;
  return m;
}

// Nearest edge of the whole network, searching outward from `start`.
std::vector<std::size_t> nearest_edges(const RoadNetwork& net, const PlanarPoint& p,
                                       double start) {
  for (double r = start; r < 1e8; r *= 2.0) {
    auto hits = candidate_links(net, p, r);
    if (!hits.empty()) return {hits.front()};
  }
  return {};
}

}  // namespace

Selection imp(const RoadNetwork& net, const PlanarPoint& p, std::optional<double> heading,
              const MatcherSettings& settings) {
  if (net.empty()) throw DomainError("road network is empty");
  const auto& cfg = settings.config;
  Selection sel;
  const auto cands = candidate_links(net, p, cfg.candidate_radius);
  if (cands.empty()) {
    sel.best = pick(net, nearest_edges(net, p, 2.0 * cfg.candidate_radius), p, heading,
                    settings.rules);
    sel.confident = false;
    return sel;
  }
  sel.best = pick(net, cands, p, heading, settings.rules);
  sel.confident = sel.best->likelihood >= cfg.min_likelihood;
  return sel;
}

namespace {

StepResult run_imp(const RoadNetwork& net, MatchState state, const PlanarPoint& p,
                   std::optional<double> heading, const MatcherSettings& settings,
                   std::size_t source_index) {
  const auto sel = imp(net, p, heading, settings);
  state.consecutive_low_confidence = 0;
  if (sel.confident) {
    state.phase = MatchState::Phase::OnLink;
    state.edge = sel.best->edge;
    state.forward = sel.best->forward;
  } else {
    state.phase = MatchState::Phase::Uninitialized;
  }
  return {state, to_matched(net, *sel.best, MatchPhase::Imp, sel.confident, source_index)};
}

}  // namespace

StepResult smp_step(const RoadNetwork& net, const MatchState& state, const PlanarPoint& p,
                    std::optional<double> heading, const MatcherSettings& settings,
                    std::size_t source_index) {
  if (state.phase != MatchState::Phase::OnLink) {
    throw DomainError("smp_step needs an ON_LINK state");
  }
  const auto& cfg = settings.config;
  MatchState next = state;
  if (heading) next.last_heading = heading;

  const auto& edge = net.edge(state.edge);
  const auto current = score_link(net, state.edge, p, heading, settings.rules);
  const double to_start = current.arc_offset;
  const double to_end = edge.length() - current.arc_offset;
  if (to_start > cfg.junction_radius && to_end > cfg.junction_radius &&
      current.pd <= cfg.pd_escape) {
    next.consecutive_low_confidence = 0;
    next.forward = current.forward;
    return {next, to_matched(net, current, MatchPhase::SmpAlong, true, source_index)};
  }

  // Junction evaluation at the nearer end node.
  const std::string& node = to_start <= to_end ? edge.node_from : edge.node_to;
  std::vector<std::size_t> cands{state.edge};
  for (auto e : net.incident(node)) {
    if (e != state.edge) cands.push_back(e);
  }
  std::optional<LinkCandidate> best;
  for (auto e : cands) {
    auto c = e == state.edge ? current : score_link(net, e, p, heading, settings.rules);
    if (c.pd > cfg.candidate_radius) continue;
    if (!best || better_candidate(net, c, *best)) best = c;
  }
  if (best && best->likelihood >= cfg.min_likelihood) {
    next.edge = best->edge;
    next.forward = best->forward;
    next.consecutive_low_confidence = 0;
    return {next, to_matched(net, *best, MatchPhase::SmpJunction, true, source_index)};
  }
  ++next.consecutive_low_confidence;
  if (next.consecutive_low_confidence >= cfg.reinit_after) {
    next.phase = MatchState::Phase::Uninitialized;
    return run_imp(net, next, p, heading, settings, source_index);
  }
  const LinkCandidate& chosen = best ? *best : current;
  next.edge = chosen.edge;
  next.forward = chosen.forward;
  return {next, to_matched(net, chosen, MatchPhase::SmpJunction, false, source_index)};
}

std::vector<std::optional<double>> trajectory_headings(const std::vector<PlanarPoint>& pts,
                                                       double min_step) {
  std::vector<std::optional<double>> h(pts.size());
  std::optional<double> last;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if ((pts[k] - pts[k - 1]).norm() >= min_step && pts[k] != pts[k - 1]) {
      last = bearing(pts[k - 1], pts[k]);
    }
    h[k] = last;
  }
  if (!pts.empty()) {
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if ((pts[k] - pts[0]).norm() >= min_step && pts[k] != pts[0]) {
        h[0] = bearing(pts[0], pts[k]);
        break;
      }
    }
  }
  return h;
}

MatchResult match_trajectory(const RoadNetwork& net, const Trajectory& traj,
                             const MatcherSettings& settings) {
  if (traj.size() < 2) throw DomainError("matching needs a trajectory of at least 2 points");
  if (net.empty()) throw DomainError("road network is empty");

  std::vector<PlanarPoint> pts;
  pts.reserve(traj.size());
  for (const auto& r : traj.records) pts.push_back(net.projection().project(r.position));

  MatchResult result;
  result.total_points = traj.size();
  result.matched.reserve(traj.size());

  const auto t0 = std::chrono::steady_clock::now();
  const auto headings = trajectory_headings(pts, settings.config.min_heading_step);
  MatchState state;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto src = traj.records[k].source_index;
    StepResult step = state.phase == MatchState::Phase::OnLink
                          ? smp_step(net, state, pts[k], headings[k], settings, src)
                          : run_imp(net, state, pts[k], headings[k], settings, src);
    if (headings[k]) step.state.last_heading = headings[k];
    state = step.state;
    result.matched.push_back(std::move(step.point));
  }
  const auto t1 = std::chrono::steady_clock::now();
  result.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

  for (const auto& m : result.matched) {
    if (result.edge_sequence.empty() || result.edge_sequence.back() != m.edge_id) {
      result.edge_sequence.push_back(m.edge_id);
    }
  }
  return result;
}

void write_match_result(std::ostream& out, const MatchResult& result) {
  out << "source_index,edge_id,offset_m,snapped_lat,snapped_lon,likelihood,phase\n";
  for (const auto& m : result.matched) {
    out << m.source_index << ',' << m.edge_id << ',' << fmt::format("{:.3f}", m.offset) << ','
        << fmt::format("{:.8f}", m.snapped.lat) << ',' << fmt::format("{:.8f}", m.snapped.lon)
        << ',' << fmt::format("{:.4f}", m.likelihood) << ',' << to_string(m.phase) << '\n';
  }
}

void write_edge_sequence(std::ostream& out, const MatchResult& result) {
  for (const auto& id : result.edge_sequence) out << id << '\n';
}

}  // namespace spmm
