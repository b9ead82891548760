#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphflow/errors.hpp"

namespace graphflow {

// Absolute tolerance for the per-vertex weight normalization sum.
inline constexpr double kWeightTol = 1e-9;
// Entrywise tolerance for matrix identities derived from the graph.
inline constexpr double kMatrixTol = 1e-12;

/// Velocity of the flow along one edge, parameterized on [0,1].
/// Either constant or continuous piecewise-linear with strictly positive
/// node values; queries interpolate linearly between nodes.
class VelocityProfile {
 public:
  VelocityProfile() = default;  // constant unit speed

  static VelocityProfile constant(double c);
  static VelocityProfile piecewise_linear(
      std::vector<std::pair<double, double>> nodes);

  double value(double x) const;
  /// Exact derivative of the interpolant; piecewise constant, taken from the
  /// segment to the right of x (left segment at x = 1).
  double derivative(double x) const;
  double min_value() const;
  double max_value() const;
  /// W^{1,1} norm of the profile: integral of |c| plus total variation.
  double w11_norm() const;
  bool is_constant() const { return constant_; }

  /// Profile multiplied pointwise by a positive factor.
  VelocityProfile scaled(double factor) const;

  const std::vector<std::pair<double, double>>& nodes() const { return nodes_; }

  /// Structural soundness: nodes span exactly [0,1], strictly increasing x,
  /// all values strictly positive and finite.
  bool well_formed(std::string* why = nullptr) const;

 private:
  std::vector<std::pair<double, double>> nodes_{{0.0, 1.0}, {1.0, 1.0}};
  bool constant_ = true;
};

struct BufferSpec {
  double k = 1.0;  // emission rate, 1/time
};

struct Vertex {
  std::string id;
  std::optional<BufferSpec> buffer;
};

struct Edge {
  std::string id;
  std::string tail;
  std::string head;
  double length = 1.0;
  double weight = 1.0;
  VelocityProfile velocity;
};

/// A finite directed metric graph. Interpreted with the tail of each edge at
/// coordinate 1 and the head at coordinate 0; mass moves toward the head.
struct MetricGraph {
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
};

enum class ValidationProfile { buffered, unbuffered };

struct Violation {
  std::string code;     // stable machine-readable tag
  std::string subject;  // offending vertex/edge id (may be empty)
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  // informational: declaration-ordered (vertex id, outgoing edge count)
  std::vector<std::pair<std::string, int>> out_degrees;
  bool valid() const { return violations.empty(); }
};

/// Checks every standing assumption and reports all violations; never throws
/// on bad input. The buffered profile additionally requires at least one
/// buffered vertex with positive rate.
ValidationReport validate(const MetricGraph& g, ValidationProfile profile);

/// Rewrites every edge to unit length, scaling its velocity profile pointwise
/// by the original length. Idempotent; densities keep their values, the
/// length factor is absorbed into the velocity.
MetricGraph normalize_edges(const MetricGraph& g);

bool is_normalized(const MetricGraph& g);

/// Integer view of a valid graph: resolved endpoint indices, per-vertex edge
/// lists and the buffered-vertex slots, in declaration order.
struct GraphIndex {
  std::vector<int> edge_tail;
  std::vector<int> edge_head;
  std::vector<std::vector<int>> out_edges;
  std::vector<std::vector<int>> in_edges;
  std::vector<int> buffered;     // vertex index per buffer slot
  std::vector<int> buffer_slot;  // per vertex: slot index or -1
  std::vector<double> buffer_rate;

  int vertex_count() const { return static_cast<int>(out_edges.size()); }
  int edge_count() const { return static_cast<int>(edge_tail.size()); }
  int buffer_count() const { return static_cast<int>(buffered.size()); }

  static GraphIndex build(const MetricGraph& g);
};

/// FNV-1a hash of the canonical JSON serialization, hex encoded.
std::string graph_hash(const MetricGraph& g);

}  // namespace graphflow
