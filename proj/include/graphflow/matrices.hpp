#pragma once

#include <Eigen/SparseCore>
#include <vector>

#include "graphflow/graph.hpp"

namespace graphflow {

/// Incidence and adjacency matrices of a valid graph. Row/column order
/// follows the declaration order of vertices, edges and buffered vertices.
struct MatrixBundle {
  Eigen::SparseMatrix<double> phi_out;           // V x E outgoing incidence
  Eigen::SparseMatrix<double> phi_in;            // V x E incoming incidence
  Eigen::SparseMatrix<double> phi_out_weighted;  // V x E
  Eigen::SparseMatrix<double> phi_in_buffered;   // B x E rows of phi_in at buffers
  Eigen::SparseMatrix<double> b_nb;              // E x E routing through plain vertices
  Eigen::SparseMatrix<double> b_buf;             // E x B routing out of buffers
  Eigen::SparseMatrix<double> adjacency;         // E x E column-stochastic

  std::vector<int> buffered_vertices;  // vertex index per buffer slot
  std::vector<double> buffer_rates;    // k per buffer slot

  int vertex_count() const { return static_cast<int>(phi_out.rows()); }
  int edge_count() const { return static_cast<int>(phi_out.cols()); }
  int buffer_count() const { return static_cast<int>(buffered_vertices.size()); }
};

/// Builds the full bundle. Throws Error(invalid_graph) when the structural
/// validation fails.
MatrixBundle build_matrices(const MetricGraph& g);

}  // namespace graphflow
