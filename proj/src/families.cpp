#include "graphflow/families.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace graphflow {

namespace {

std::string vid(int i) { return "v" + std::to_string(i + 1); }
std::string eid(int i) { return "e" + std::to_string(i + 1); }

// Gently varying piecewise-linear profile, distinct per edge index, with the
// interior node pinned to x = 0.5 so refinement studies see grid-aligned
// kinks.
VelocityProfile family_velocity(int j) {
  const double a = 1.0 + 0.05 * (j % 4);
  const double m = 1.10 + 0.05 * ((j + 1) % 4);
  const double b = 1.0 + 0.05 * ((j + 2) % 4);
  return VelocityProfile::piecewise_linear({{0.0, a}, {0.5, m}, {1.0, b}});
}

double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int rand_below(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace

MetricGraph make_cycle(int n) {
  if (n < 2)
    throw Error(ErrorCode::invalid_argument, "cycle needs n >= 2");
  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    Vertex v{vid(i), std::nullopt};
    if (i == 0) v.buffer = BufferSpec{1.0};
    g.vertices.push_back(std::move(v));
  }
  for (int i = 0; i < n; ++i) {
    Edge e;
    e.id = eid(i);
    e.tail = vid(i);
    e.head = vid((i + 1) % n);
    e.length = 1.0;
    e.weight = 1.0;
    e.velocity = family_velocity(i);
    g.edges.push_back(std::move(e));
  }
  return g;
}

MetricGraph make_fork_merge(int n) {
  if (n < 4)
    throw Error(ErrorCode::invalid_argument,
                "fork_merge needs n >= 4 (fork, branches, merge)");
  const int branches = n - 2;
  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    Vertex v{vid(i), std::nullopt};
    if (i == 0) v.buffer = BufferSpec{1.0};
    g.vertices.push_back(std::move(v));
  }
  int je = 0;
  for (int b = 0; b < branches; ++b) {
    Edge e;
    e.id = eid(je);
    e.tail = vid(0);
    e.head = vid(1 + b);
    e.weight = 1.0 / branches;
    e.velocity = family_velocity(je);
    g.edges.push_back(std::move(e));
    ++je;
  }
  for (int b = 0; b < branches; ++b) {
    Edge e;
    e.id = eid(je);
    e.tail = vid(1 + b);
    e.head = vid(n - 1);
    e.weight = 1.0;
    e.velocity = family_velocity(je);
    g.edges.push_back(std::move(e));
    ++je;
  }
  Edge back;
  back.id = eid(je);
  back.tail = vid(n - 1);
  back.head = vid(0);
  back.weight = 1.0;
  back.velocity = family_velocity(je);
  g.edges.push_back(std::move(back));
  return g;
}

MetricGraph make_random_scc(int n, double buffer_fraction, std::uint64_t seed) {
  if (n < 2)
    throw Error(ErrorCode::invalid_argument, "random_scc needs n >= 2");
  if (!(buffer_fraction > 0.0 && buffer_fraction <= 1.0))
    throw Error(ErrorCode::invalid_argument,
                "buffer_fraction must lie in (0,1]");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rand_below(rng, i + 1)]);

  std::set<std::pair<int, int>> pairs;
  std::vector<std::pair<int, int>> arcs;
  for (int i = 0; i < n; ++i) {
    const int a = order[i];
    const int b = order[(i + 1) % n];
    arcs.emplace_back(a, b);
    pairs.insert({a, b});
  }
  for (int attempt = 0; attempt < n; ++attempt) {
    const int a = rand_below(rng, n);
    const int b = rand_below(rng, n);
    if (a == b || pairs.count({a, b})) continue;
    arcs.emplace_back(a, b);
    pairs.insert({a, b});
  }

  const int nb = std::max(1, static_cast<int>(std::ceil(buffer_fraction * n)));
  std::vector<int> shuffled(order);
  for (int i = n - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rand_below(rng, i + 1)]);
  std::vector<double> rate(n, 0.0);
  for (int i = 0; i < nb; ++i) rate[shuffled[i]] = 0.5 + 1.5 * rand_unit(rng);

  MetricGraph g;
  for (int i = 0; i < n; ++i) {
    Vertex v{vid(i), std::nullopt};
    if (rate[i] > 0.0) v.buffer = BufferSpec{rate[i]};
    g.vertices.push_back(std::move(v));
  }
  std::vector<int> out_degree(n, 0);
  for (const auto& [a, b] : arcs) out_degree[a] += 1;
  for (std::size_t j = 0; j < arcs.size(); ++j) {
    Edge e;
    e.id = eid(static_cast<int>(j));
    e.tail = vid(arcs[j].first);
    e.head = vid(arcs[j].second);
    e.weight = 1.0 / out_degree[arcs[j].first];
    e.length = 0.75 + 0.75 * rand_unit(rng);
    const double a = 1.0 + 0.3 * rand_unit(rng);
    const double m = 1.0 + 0.3 * rand_unit(rng);
    const double b = 1.0 + 0.3 * rand_unit(rng);
    e.velocity =
        VelocityProfile::piecewise_linear({{0.0, a}, {0.5, m}, {1.0, b}});
    g.edges.push_back(std::move(e));
  }
  return g;
}

MetricGraph generate_family(const FamilySpec& spec) {
  switch (spec.kind) {
    case FamilyKind::cycle:
      return make_cycle(spec.n);
    case FamilyKind::fork_merge:
      return make_fork_merge(spec.n);
    case FamilyKind::random_scc:
      return make_random_scc(spec.n, spec.buffer_fraction, spec.seed);
  }
  throw Error(ErrorCode::invalid_argument, "unknown family kind");
}

}  // namespace graphflow
