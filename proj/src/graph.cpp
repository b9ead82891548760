#include "graphflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace graphflow {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invalid_graph: return "InvalidGraph";
    case ErrorCode::not_irreducible: return "NotIrreducible";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::cfl_violation: return "CflViolation";
    case ErrorCode::series_diverging: return "SeriesDiverging";
    case ErrorCode::system_singular: return "SystemSingular";
    case ErrorCode::quadrature_overflow: return "QuadratureOverflow";
    case ErrorCode::zero_mass: return "ZeroMass";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

VelocityProfile VelocityProfile::constant(double c) {
  VelocityProfile p;
  p.nodes_ = {{0.0, c}, {1.0, c}};
  p.constant_ = true;
  return p;
}

VelocityProfile VelocityProfile::piecewise_linear(
    std::vector<std::pair<double, double>> nodes) {
  VelocityProfile p;
  p.nodes_ = std::move(nodes);
  p.constant_ = false;
  return p;
}

double VelocityProfile::value(double x) const {
  if (constant_ || nodes_.size() < 2) return nodes_.front().second;
  x = std::clamp(x, 0.0, 1.0);
  // Last segment whose start is <= x.
  std::size_t s = 0;
  while (s + 2 < nodes_.size() && nodes_[s + 1].first <= x) ++s;
  const auto& [x0, c0] = nodes_[s];
  const auto& [x1, c1] = nodes_[s + 1];
  const double span = x1 - x0;
  if (span <= 0.0) return c0;
  const double a = (x - x0) / span;
  return c0 + a * (c1 - c0);
}

double VelocityProfile::derivative(double x) const {
  if (constant_ || nodes_.size() < 2) return 0.0;
  x = std::clamp(x, 0.0, 1.0);
  std::size_t s = 0;
  while (s + 2 < nodes_.size() && nodes_[s + 1].first <= x) ++s;
  if (x >= 1.0) s = nodes_.size() - 2;
  const auto& [x0, c0] = nodes_[s];
  const auto& [x1, c1] = nodes_[s + 1];
  const double span = x1 - x0;
  return span > 0.0 ? (c1 - c0) / span : 0.0;
}

double VelocityProfile::min_value() const {
  double m = nodes_.front().second;
  for (const auto& [x, c] : nodes_) m = std::min(m, c);
  return m;
}

double VelocityProfile::max_value() const {
  double m = nodes_.front().second;
  for (const auto& [x, c] : nodes_) m = std::max(m, c);
  return m;
}

double VelocityProfile::w11_norm() const {
  double integral = 0.0;
  double variation = 0.0;
  for (std::size_t s = 0; s + 1 < nodes_.size(); ++s) {
    const double dx = nodes_[s + 1].first - nodes_[s].first;
    integral += 0.5 * dx * (nodes_[s].second + nodes_[s + 1].second);
    variation += std::abs(nodes_[s + 1].second - nodes_[s].second);
  }
  return integral + variation;
}

VelocityProfile VelocityProfile::scaled(double factor) const {
  VelocityProfile p = *this;
  for (auto& [x, c] : p.nodes_) c *= factor;
  return p;
}

bool VelocityProfile::well_formed(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (nodes_.size() < 2) return fail("profile needs at least two nodes");
  if (nodes_.front().first != 0.0) return fail("first node must be at x = 0");
  if (nodes_.back().first != 1.0) return fail("last node must be at x = 1");
  for (std::size_t s = 0; s < nodes_.size(); ++s) {
    const auto& [x, c] = nodes_[s];
    if (!std::isfinite(x) || !std::isfinite(c)) return fail("non-finite node");
    if (c <= 0.0) return fail("velocity must be strictly positive");
    if (s > 0 && !(x > nodes_[s - 1].first))
      return fail("node positions must be strictly increasing");
  }
  return true;
}

namespace {

void add(ValidationReport& report, std::string code, std::string subject,
         std::string message) {
  report.violations.push_back(
      {std::move(code), std::move(subject), std::move(message)});
}

}  // namespace

ValidationReport validate(const MetricGraph& g, ValidationProfile profile) {
  ValidationReport report;
  if (g.vertices.empty())
    add(report, "empty_vertices", "", "graph has no vertices");
  if (g.edges.empty()) add(report, "empty_edges", "", "graph has no edges");

  std::unordered_map<std::string, int> vertex_of;
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    const auto& v = g.vertices[i];
    if (v.id.empty()) add(report, "empty_id", v.id, "vertex with empty id");
    if (!vertex_of.emplace(v.id, static_cast<int>(i)).second)
      add(report, "duplicate_vertex", v.id, "duplicate vertex id " + v.id);
    if (v.buffer && !(v.buffer->k > 0.0 && std::isfinite(v.buffer->k)))
      add(report, "bad_buffer_rate", v.id,
          "buffer rate at " + v.id + " must be positive and finite");
  }

  std::unordered_set<std::string> edge_ids;
  std::set<std::pair<std::string, std::string>> endpoint_pairs;
  std::unordered_map<std::string, double> weight_sum;
  std::unordered_map<std::string, int> out_degree, in_degree;

  for (const auto& e : g.edges) {
    if (e.id.empty()) add(report, "empty_id", e.id, "edge with empty id");
    if (!edge_ids.insert(e.id).second)
      add(report, "duplicate_edge", e.id, "duplicate edge id " + e.id);
    const bool tail_known = vertex_of.count(e.tail) > 0;
    const bool head_known = vertex_of.count(e.head) > 0;
    if (!tail_known)
      add(report, "unknown_vertex", e.id, "edge " + e.id + " has unknown tail " + e.tail);
    if (!head_known)
      add(report, "unknown_vertex", e.id, "edge " + e.id + " has unknown head " + e.head);
    if (e.tail == e.head)
      add(report, "loop", e.id, "edge " + e.id + " is a loop at " + e.tail);
    else if (tail_known && head_known &&
             !endpoint_pairs.insert({e.tail, e.head}).second)
      add(report, "multiple_edge", e.id,
          "edge " + e.id + " duplicates pair (" + e.tail + "," + e.head + ")");
    if (!(e.length > 0.0 && std::isfinite(e.length)))
      add(report, "bad_length", e.id, "edge " + e.id + " needs positive finite length");
    if (!(e.weight > 0.0 && e.weight <= 1.0))
      add(report, "bad_weight", e.id, "edge " + e.id + " weight must lie in (0,1]");
    std::string why;
    if (!e.velocity.well_formed(&why))
      add(report, "bad_velocity", e.id, "edge " + e.id + ": " + why);
    if (tail_known) {
      weight_sum[e.tail] += e.weight;
      out_degree[e.tail] += 1;
    }
    if (head_known) in_degree[e.head] += 1;
  }

  for (const auto& v : g.vertices) {
    report.out_degrees.emplace_back(v.id, out_degree[v.id]);
    if (out_degree[v.id] == 0)
      add(report, "non_degenerate", v.id, "non-degenerate fails at " + v.id + ": no outgoing edge");
    if (in_degree[v.id] == 0)
      add(report, "non_degenerate", v.id, "non-degenerate fails at " + v.id + ": no incoming edge");
    if (out_degree[v.id] > 0) {
      const double s = weight_sum[v.id];
      if (std::abs(s - 1.0) > kWeightTol) {
        std::ostringstream msg;
        msg << "weights at " << v.id << " sum to " << s << " != 1";
        add(report, "weight_sum", v.id, msg.str());
      }
    }
  }

  if (profile == ValidationProfile::buffered) {
    const bool any_buffer =
        std::any_of(g.vertices.begin(), g.vertices.end(),
                    [](const Vertex& v) { return v.buffer.has_value(); });
    if (!any_buffer)
      add(report, "no_buffer", "", "buffered profile requires at least one buffered vertex");
  }
  return report;
}

MetricGraph normalize_edges(const MetricGraph& g) {
  MetricGraph out = g;
  for (auto& e : out.edges) {
    if (e.length == 1.0) continue;
    e.velocity = e.velocity.scaled(e.length);
    e.length = 1.0;
  }
  return out;
}

bool is_normalized(const MetricGraph& g) {
  return std::all_of(g.edges.begin(), g.edges.end(),
                     [](const Edge& e) { return e.length == 1.0; });
}

GraphIndex GraphIndex::build(const MetricGraph& g) {
  GraphIndex idx;
  std::unordered_map<std::string, int> vertex_of;
  for (std::size_t i = 0; i < g.vertices.size(); ++i)
    vertex_of[g.vertices[i].id] = static_cast<int>(i);

  const int nv = static_cast<int>(g.vertices.size());
  idx.out_edges.resize(nv);
  idx.in_edges.resize(nv);
  idx.buffer_slot.assign(nv, -1);
  for (int vi = 0; vi < nv; ++vi) {
    if (g.vertices[vi].buffer) {
      idx.buffer_slot[vi] = static_cast<int>(idx.buffered.size());
      idx.buffered.push_back(vi);
      idx.buffer_rate.push_back(g.vertices[vi].buffer->k);
    }
  }
  for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
    const auto& e = g.edges[ei];
    auto t = vertex_of.find(e.tail);
    auto h = vertex_of.find(e.head);
    if (t == vertex_of.end() || h == vertex_of.end())
      throw Error(ErrorCode::invalid_graph,
                  "edge " + e.id + " references an unknown vertex");
    idx.edge_tail.push_back(t->second);
    idx.edge_head.push_back(h->second);
    idx.out_edges[t->second].push_back(static_cast<int>(ei));
    idx.in_edges[h->second].push_back(static_cast<int>(ei));
  }
  return idx;
}

}  // namespace graphflow
