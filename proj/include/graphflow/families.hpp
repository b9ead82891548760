#pragma once

#include <cstdint>

#include "graphflow/graph.hpp"

namespace graphflow {

/// Directed n-cycle with one buffered vertex (k = 1) and mildly varying
/// piecewise-linear velocities so grid-refinement behavior is non-degenerate.
MetricGraph make_cycle(int n);

/// One fork vertex splitting evenly into n-2 branches that merge again and
/// return; buffer at the fork vertex. Requires n >= 4.
MetricGraph make_fork_merge(int n);

/// Random strongly connected graph: a directed Hamiltonian cycle plus random
/// chords, random weights, lengths and velocities, and ceil(buffer_fraction*n)
/// buffered vertices. Deterministic for a fixed seed.
MetricGraph make_random_scc(int n, double buffer_fraction, std::uint64_t seed);

enum class FamilyKind { cycle, fork_merge, random_scc };

struct FamilySpec {
  FamilyKind kind = FamilyKind::cycle;
  int n = 2;
  double buffer_fraction = 0.25;  // random_scc only
  std::uint64_t seed = 0;         // random_scc only
};

MetricGraph generate_family(const FamilySpec& spec);

}  // namespace graphflow
