#include "graphflow/matrices.hpp"

#include <string>
#include <vector>

namespace graphflow {

MatrixBundle build_matrices(const MetricGraph& g) {
  const ValidationReport report = validate(g, ValidationProfile::unbuffered);
  if (!report.valid()) {
    std::string msg = "graph fails validation:";
    for (const auto& v : report.violations) msg += " [" + v.message + "]";
    throw Error(ErrorCode::invalid_graph, msg);
  }

  const GraphIndex idx = GraphIndex::build(g);
  const int nv = idx.vertex_count();
  const int ne = idx.edge_count();
  const int nb = idx.buffer_count();

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> out_t, in_t, outw_t;
  out_t.reserve(ne);
  in_t.reserve(ne);
  outw_t.reserve(ne);
  for (int e = 0; e < ne; ++e) {
    out_t.emplace_back(idx.edge_tail[e], e, 1.0);
    in_t.emplace_back(idx.edge_head[e], e, 1.0);
    outw_t.emplace_back(idx.edge_tail[e], e, g.edges[e].weight);
  }

  MatrixBundle b;
  b.phi_out.resize(nv, ne);
  b.phi_in.resize(nv, ne);
  b.phi_out_weighted.resize(nv, ne);
  b.phi_out.setFromTriplets(out_t.begin(), out_t.end());
  b.phi_in.setFromTriplets(in_t.begin(), in_t.end());
  b.phi_out_weighted.setFromTriplets(outw_t.begin(), outw_t.end());

  // Row selections for the buffered / unbuffered split.
  std::vector<Triplet> sel_b, sel_nb;
  for (int v = 0; v < nv; ++v) {
    if (idx.buffer_slot[v] >= 0)
      sel_b.emplace_back(idx.buffer_slot[v], v, 1.0);
    else
      sel_nb.emplace_back(v, v, 1.0);  // keep vertex dimension, zero buffer rows
  }
  Eigen::SparseMatrix<double> select_buf(nb, nv);
  select_buf.setFromTriplets(sel_b.begin(), sel_b.end());
  Eigen::SparseMatrix<double> mask_nb(nv, nv);
  mask_nb.setFromTriplets(sel_nb.begin(), sel_nb.end());

  b.phi_in_buffered = select_buf * b.phi_in;

  const Eigen::SparseMatrix<double> phi_w_nb = mask_nb * b.phi_out_weighted;
  const Eigen::SparseMatrix<double> phi_in_nb = mask_nb * b.phi_in;
  b.b_nb = Eigen::SparseMatrix<double>(phi_w_nb.transpose()) * phi_in_nb;
  b.b_buf = Eigen::SparseMatrix<double>(b.phi_out_weighted.transpose()) *
            Eigen::SparseMatrix<double>(select_buf.transpose());
  b.adjacency =
      Eigen::SparseMatrix<double>(b.phi_out_weighted.transpose()) * b.phi_in;

  b.b_nb.prune(0.0);
  b.b_buf.prune(0.0);
  b.adjacency.prune(0.0);
  b.b_nb.makeCompressed();
  b.b_buf.makeCompressed();
  b.adjacency.makeCompressed();

  b.buffered_vertices = idx.buffered;
  b.buffer_rates = idx.buffer_rate;
  return b;
}

}  // namespace graphflow
