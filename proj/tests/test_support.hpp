#pragma once

// Builders and independent oracles shared by the test suites. Oracles here
// deliberately avoid the library's own solution paths.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "graphflow/graph.hpp"
#include "graphflow/matrices.hpp"

namespace testsupport {

using namespace graphflow;

inline VelocityProfile pwl(double a, double m, double b) {
  return VelocityProfile::piecewise_linear({{0.0, a}, {0.5, m}, {1.0, b}});
}

inline MetricGraph cycle_graph(int n, bool buffered, double k,
                               const std::vector<VelocityProfile>& velocities) {
  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    Vertex v{"v" + std::to_string(i + 1), std::nullopt};
    if (buffered && i == 0) v.buffer = BufferSpec{k};
    g.vertices.push_back(v);
  }
  for (int i = 0; i < n; ++i) {
    Edge e;
    e.id = "e" + std::to_string(i + 1);
    e.tail = "v" + std::to_string(i + 1);
    e.head = "v" + std::to_string((i + 1) % n + 1);
    e.velocity = velocities.empty() ? VelocityProfile::constant(1.0)
                                    : velocities[i % velocities.size()];
    g.edges.push_back(e);
  }
  return g;
}

inline MetricGraph two_cycle(bool buffered = true, double k = 1.0) {
  return cycle_graph(2, buffered, k, {});
}

inline MetricGraph three_cycle(bool buffered = true, double k = 1.0) {
  return cycle_graph(3, buffered, k, {});
}

inline MetricGraph two_cycle_pwl() {
  return cycle_graph(2, true, 1.0, {pwl(1.0, 1.3, 1.1), pwl(1.2, 1.0, 1.25)});
}

inline MetricGraph three_cycle_pwl() {
  return cycle_graph(3, true, 1.0,
                     {pwl(1.0, 1.3, 1.1), pwl(1.2, 1.0, 1.25),
                      pwl(1.15, 1.25, 1.0)});
}

// Two disjoint 2-cycles joined by a single one-way bridge.
inline MetricGraph bridged_cycles() {
  MetricGraph g;
  g.vertices = {{"a1", std::nullopt},
                {"a2", std::nullopt},
                {"b1", BufferSpec{1.0}},
                {"b2", std::nullopt}};
  auto edge = [](const char* id, const char* t, const char* h, double w) {
    Edge e;
    e.id = id;
    e.tail = t;
    e.head = h;
    e.weight = w;
    return e;
  };
  g.edges = {edge("e1", "a1", "a2", 0.5), edge("e2", "a2", "a1", 1.0),
             edge("e3", "a1", "b1", 0.5), edge("e4", "b1", "b2", 1.0),
             edge("e5", "b2", "b1", 1.0)};
  return g;
}

inline double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Valid graph that may or may not be strongly connected: a random
// derangement (disjoint cycle cover) plus a few random chords.
inline MetricGraph random_mixed_graph(std::mt19937_64& rng) {
  const int n = 4 + static_cast<int>(rng() % 9);
  std::vector<int> perm(n);
  while (true) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng() % static_cast<std::uint64_t>(i + 1)]);
    bool fixed = false;
    for (int i = 0; i < n; ++i) fixed = fixed || perm[i] == i;
    if (!fixed) break;
  }
  std::vector<std::pair<int, int>> arcs;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) {
    arcs.emplace_back(i, perm[i]);
    present[i][perm[i]] = true;
  }
  const int chords = static_cast<int>(rng() % 4);
  for (int c = 0; c < chords; ++c) {
    const int a = static_cast<int>(rng() % n);
    const int b = static_cast<int>(rng() % n);
    if (a == b || present[a][b]) continue;
    arcs.emplace_back(a, b);
    present[a][b] = true;
  }

  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    Vertex v{"v" + std::to_string(i + 1), std::nullopt};
    if (rand_unit(rng) < 0.3) v.buffer = BufferSpec{0.5 + 1.5 * rand_unit(rng)};
    g.vertices.push_back(v);
  }
  std::vector<int> outdeg(n, 0);
  for (auto& [a, b] : arcs) outdeg[a]++;
  for (std::size_t j = 0; j < arcs.size(); ++j) {
    Edge e;
    e.id = "e" + std::to_string(j + 1);
    e.tail = "v" + std::to_string(arcs[j].first + 1);
    e.head = "v" + std::to_string(arcs[j].second + 1);
    e.weight = 1.0 / outdeg[arcs[j].first];
    g.edges.push_back(e);
  }
  return g;
}

// Brute-force fixed vector: null space of (B - I) from a full-pivot LU.
inline Eigen::VectorXd dense_fixed_vector_oracle(const MatrixBundle& bundle) {
  const int ne = bundle.edge_count();
  Eigen::MatrixXd shifted =
      Eigen::MatrixXd(bundle.adjacency) - Eigen::MatrixXd::Identity(ne, ne);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
  lu.setThreshold(1e-9);
  const Eigen::MatrixXd kernel = lu.kernel();
  Eigen::VectorXd w = kernel.col(0);
  if (w.sum() < 0.0) w = -w;
  return w / w.cwiseAbs().sum();
}

inline int dense_kernel_dimension(const MatrixBundle& bundle) {
  const int ne = bundle.edge_count();
  Eigen::MatrixXd shifted =
      Eigen::MatrixXd(bundle.adjacency) - Eigen::MatrixXd::Identity(ne, ne);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(shifted);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.dimensionOfKernel());
}

}  // namespace testsupport
