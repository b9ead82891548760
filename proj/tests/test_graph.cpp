#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <set>

#include "graphflow/families.hpp"
#include "graphflow/json_io.hpp"
#include "graphflow/matrices.hpp"
#include "test_support.hpp"

using namespace graphflow;
using namespace testsupport;

TEST_CASE("velocity profiles interpolate and differentiate exactly") {
  const auto c = VelocityProfile::constant(2.5);
  CHECK(c.value(0.0) == 2.5);
  CHECK(c.value(0.7) == 2.5);
  CHECK(c.derivative(0.3) == 0.0);
  CHECK(c.min_value() == 2.5);
  CHECK(c.max_value() == 2.5);

  const auto p = pwl(1.0, 2.0, 0.5);
  CHECK(p.value(0.0) == doctest::Approx(1.0));
  CHECK(p.value(0.25) == doctest::Approx(1.5));
  CHECK(p.value(0.5) == doctest::Approx(2.0));
  CHECK(p.value(0.75) == doctest::Approx(1.25));
  CHECK(p.value(1.0) == doctest::Approx(0.5));
  CHECK(p.derivative(0.2) == doctest::Approx(2.0));
  CHECK(p.derivative(0.8) == doctest::Approx(-3.0));
  CHECK(p.derivative(0.5) == doctest::Approx(-3.0));  // right segment at the kink
  CHECK(p.derivative(1.0) == doctest::Approx(-3.0));
  CHECK(p.min_value() == doctest::Approx(0.5));
  CHECK(p.max_value() == doctest::Approx(2.0));
  // integral 1.375 plus variation 1 + 1.5
  CHECK(p.w11_norm() == doctest::Approx(1.375 + 2.5));

  const auto scaled = p.scaled(2.0);
  CHECK(scaled.value(0.25) == doctest::Approx(3.0));

  std::string why;
  CHECK_FALSE(VelocityProfile::piecewise_linear({{0.0, 1.0}, {0.5, 1.0}})
                  .well_formed(&why));
  CHECK_FALSE(VelocityProfile::piecewise_linear({{0.0, 1.0}, {1.0, -1.0}})
                  .well_formed(&why));
  CHECK_FALSE(VelocityProfile::piecewise_linear({{0.0, 1.0}, {0.4, 2.0}, {0.4, 1.0}, {1.0, 1.0}})
                  .well_formed(&why));
}

TEST_CASE("validate accepts the two-cycle and pinpoints violations") {
  const auto ok = validate(two_cycle(), ValidationProfile::buffered);
  CHECK(ok.valid());
  REQUIRE(ok.out_degrees.size() == 2);
  CHECK(ok.out_degrees[0] == std::pair<std::string, int>{"v1", 1});
  CHECK(ok.out_degrees[1] == std::pair<std::string, int>{"v2", 1});

  SUBCASE("weight sum off at v1") {
    MetricGraph g = two_cycle();
    g.edges[0].weight = 0.5;
    const auto report = validate(g, ValidationProfile::buffered);
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
      found = found || (v.code == "weight_sum" && v.subject == "v1");
    CHECK(found);
  }

  SUBCASE("sink vertex breaks non-degeneracy") {
    MetricGraph g = two_cycle();
    g.vertices.push_back({"v3", std::nullopt});
    Edge e;
    e.id = "e3";
    e.tail = "v2";
    e.head = "v3";
    e.weight = 0.5;
    g.edges.push_back(e);
    g.edges[1].weight = 0.5;  // rebalance v2
    const auto report = validate(g, ValidationProfile::buffered);
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
      found = found || (v.code == "non_degenerate" && v.subject == "v3");
    CHECK(found);
  }

  SUBCASE("loops, duplicates, bad numbers") {
    MetricGraph g = two_cycle();
    g.edges[0].head = "v1";
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());

    g = two_cycle();
    Edge dup = g.edges[0];
    dup.id = "e3";
    g.edges.push_back(dup);
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());

    g = two_cycle();
    g.edges[0].length = -1.0;
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());

    g = two_cycle();
    g.edges[0].weight = 1.5;
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());

    g = two_cycle();
    g.vertices[0].buffer->k = 0.0;
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());
  }

  SUBCASE("buffered profile needs a buffer, unbuffered does not") {
    const MetricGraph g = three_cycle(false);
    CHECK(validate(g, ValidationProfile::unbuffered).valid());
    CHECK_FALSE(validate(g, ValidationProfile::buffered).valid());
  }

  SUBCASE("antiparallel pairs are allowed") {
    CHECK(validate(two_cycle(), ValidationProfile::buffered).valid());
  }
}

TEST_CASE("normalize_edges scales velocities by edge length") {
  MetricGraph g = two_cycle();
  g.edges[0].length = 2.0;
  const MetricGraph n = normalize_edges(g);
  CHECK(n.edges[0].length == 1.0);
  CHECK(n.edges[0].velocity.value(0.3) == doctest::Approx(2.0));
  CHECK(n.edges[1].velocity.value(0.3) == doctest::Approx(1.0));

  SUBCASE("length one stays untouched") {
    const MetricGraph same = normalize_edges(two_cycle());
    CHECK(same.edges[0].velocity.value(0.5) == 1.0);
  }

  SUBCASE("piecewise profile scales pointwise") {
    MetricGraph h = two_cycle();
    h.edges[0].length = 0.5;
    h.edges[0].velocity =
        VelocityProfile::piecewise_linear({{0.0, 1.0}, {1.0, 3.0}});
    const MetricGraph m = normalize_edges(h);
    CHECK(m.edges[0].velocity.value(0.0) == doctest::Approx(0.5));
    CHECK(m.edges[0].velocity.value(1.0) == doctest::Approx(1.5));
  }

  SUBCASE("idempotent on a random family graph") {
    const MetricGraph r = make_random_scc(9, 0.4, 21);
    const MetricGraph once = normalize_edges(r);
    const MetricGraph twice = normalize_edges(once);
    CHECK(graph_to_json(once) == graph_to_json(twice));
    CHECK(is_normalized(once));
  }
}

TEST_CASE("graph json round trip and strictness") {
  for (const MetricGraph& g :
       {make_cycle(4), make_fork_merge(5), make_random_scc(7, 0.5, 11)}) {
    const std::string text = graph_to_json(g);
    const MetricGraph back = graph_from_json(text);
    CHECK(graph_to_json(back) == text);
  }

  CHECK_THROWS_AS((void)graph_from_json("{"), Error);
  // unknown field
  CHECK_THROWS_AS(
      (void)graph_from_json(
          R"({"vertices":[{"id":"v1","buffer":null,"extra":1}],"edges":[]})"),
      Error);
  // missing field
  CHECK_THROWS_AS(
      (void)graph_from_json(R"({"vertices":[{"id":"v1"}],"edges":[]})"),
      Error);
  // non-finite number rejected by JSON syntax already; string instead of number
  CHECK_THROWS_AS(
      (void)graph_from_json(
          R"({"vertices":[{"id":"v1","buffer":{"k":"fast"}}],"edges":[]})"),
      Error);
  // top-level unknown field
  CHECK_THROWS_AS(
      (void)graph_from_json(R"({"vertices":[],"edges":[],"name":"x"})"),
      Error);

  const MetricGraph asset = load_graph_file(std::string(GRAPH_ASSET_DIR) +
                                            "/two_cycle.json");
  CHECK(asset.vertices.size() == 2);
  CHECK(asset.vertices[0].buffer.has_value());
  CHECK(validate(asset, ValidationProfile::buffered).valid());
}

TEST_CASE("incidence and adjacency matrices match hand enumeration") {
  SUBCASE("two-cycle adjacency is the swap") {
    const MatrixBundle b = build_matrices(two_cycle());
    const Eigen::MatrixXd adj(b.adjacency);
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK((adj - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("three-cycle adjacency is the cyclic permutation") {
    const MatrixBundle b = build_matrices(three_cycle());
    const Eigen::MatrixXd adj(b.adjacency);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(1, 0) = 1;  // e2 follows e1
    expected(2, 1) = 1;
    expected(0, 2) = 1;
    CHECK((adj - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("fork-merge entries carry the split weights") {
    const MatrixBundle b = build_matrices(make_fork_merge(4));
    const Eigen::MatrixXd adj(b.adjacency);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(5, 5);
    expected(2, 0) = 1.0;  // e3 follows e1 through v2
    expected(3, 1) = 1.0;  // e4 follows e2 through v3
    expected(4, 2) = 1.0;  // e5 follows e3 through v4
    expected(4, 3) = 1.0;  // e5 follows e4 through v4
    expected(0, 4) = 0.5;  // v1 splits the return edge
    expected(1, 4) = 0.5;
    CHECK((adj - expected).cwiseAbs().maxCoeff() <= kMatrixTol);
    CHECK((Eigen::RowVectorXd::Ones(5) * adj - Eigen::RowVectorXd::Ones(5))
              .cwiseAbs()
              .maxCoeff() <= kMatrixTol);
  }

  SUBCASE("invalid graph is rejected") {
    MetricGraph g = two_cycle();
    g.edges[0].weight = 0.25;
    CHECK_THROWS_AS((void)build_matrices(g), Error);
  }
}

TEST_CASE("bundle invariants hold on random graphs") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const MetricGraph g = random_mixed_graph(rng);
    REQUIRE(validate(g, ValidationProfile::unbuffered).valid());
    const MatrixBundle b = build_matrices(g);
    const int ne = b.edge_count();
    const int nv = b.vertex_count();

    for (const auto* m : {&b.phi_out, &b.phi_in}) {
      for (int col = 0; col < ne; ++col) {
        int nonzeros = 0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(*m, col); it; ++it) {
          CHECK(it.value() == 1.0);
          ++nonzeros;
        }
        CHECK(nonzeros == 1);
      }
    }

    const Eigen::RowVectorXd colsums =
        Eigen::RowVectorXd::Ones(ne) * Eigen::MatrixXd(b.adjacency);
    CHECK((colsums.array() - 1.0).abs().maxCoeff() <= 10 * kWeightTol);

    // adjacency = B_NB + B_B (phi_in restricted to buffered rows)
    Eigen::MatrixXd recomposed = Eigen::MatrixXd(b.b_nb);
    if (b.buffer_count() > 0)
      recomposed +=
          Eigen::MatrixXd(b.b_buf) * Eigen::MatrixXd(b.phi_in_buffered);
    CHECK((recomposed - Eigen::MatrixXd(b.adjacency)).cwiseAbs().maxCoeff() <=
          kMatrixTol);

    // entry B_ek = w_e exactly when head(k) = tail(e)
    const GraphIndex idx = GraphIndex::build(g);
    const Eigen::MatrixXd adj(b.adjacency);
    for (int e = 0; e < ne; ++e)
      for (int k = 0; k < ne; ++k) {
        const double expected =
            idx.edge_head[k] == idx.edge_tail[e] ? g.edges[e].weight : 0.0;
        CHECK(adj(e, k) == doctest::Approx(expected).epsilon(1e-12));
      }
    CHECK(nv == static_cast<int>(g.vertices.size()));
  }
}

TEST_CASE("families are deterministic and well formed") {
  SUBCASE("cycle shapes") {
    const MetricGraph c2 = make_cycle(2);
    CHECK(c2.vertices.size() == 2);
    CHECK(c2.edges.size() == 2);
    CHECK(c2.vertices[0].buffer.has_value());
    CHECK(validate(c2, ValidationProfile::buffered).valid());

    const MetricGraph c5 = make_cycle(5);
    CHECK(c5.vertices.size() == 5);
    CHECK(c5.edges.size() == 5);
    CHECK(validate(c5, ValidationProfile::buffered).valid());
  }

  SUBCASE("fork merge keeps the even split") {
    const MetricGraph f = make_fork_merge(4);
    CHECK(f.edges.size() == 5);
    CHECK(f.edges[0].weight == doctest::Approx(0.5));
    CHECK(f.edges[1].weight == doctest::Approx(0.5));
    CHECK(validate(f, ValidationProfile::buffered).valid());
  }

  SUBCASE("random_scc is reproducible and buffered") {
    const MetricGraph a = make_random_scc(10, 0.3, 7);
    const MetricGraph b = make_random_scc(10, 0.3, 7);
    CHECK(graph_to_json(a) == graph_to_json(b));
    CHECK(a.vertices.size() == 10);
    CHECK(a.edges.size() >= 10);
    int buffers = 0;
    for (const auto& v : a.vertices) buffers += v.buffer.has_value();
    CHECK(buffers >= 3);
    CHECK(validate(a, ValidationProfile::buffered).valid());

    const MetricGraph c = make_random_scc(10, 0.3, 8);
    CHECK(graph_to_json(a) != graph_to_json(c));
  }

  SUBCASE("parameter errors") {
    CHECK_THROWS_AS((void)make_cycle(1), Error);
    CHECK_THROWS_AS((void)make_fork_merge(3), Error);
    CHECK_THROWS_AS((void)make_random_scc(1, 0.5, 0), Error);
    CHECK_THROWS_AS((void)make_random_scc(5, 0.0, 0), Error);
    CHECK_THROWS_AS((void)make_random_scc(5, 1.5, 0), Error);
  }
}

TEST_CASE("graph hash is stable and content sensitive") {
  const MetricGraph g = make_cycle(3);
  CHECK(graph_hash(g) == graph_hash(make_cycle(3)));
  CHECK(graph_hash(g) != graph_hash(make_cycle(4)));
  CHECK(graph_hash(g).size() == 16);
}
