#include "mstem/mgcl.hpp"

#include <algorithm>

namespace mstem {

GraphSpec build_graph(Index n) {
  if (n < 1) throw ParameterError("build_graph: station count must be positive");
  GraphSpec g;
  g.n = n;
  // A + I on the complete graph is all-ones; D = N*I, so the normalized
  // adjacency is exactly 1/N everywhere.
  g.norm_adj = Matrix::Constant(n, n, 1.0 / static_cast<Scalar>(n));
  return g;
}

std::vector<Index> scale_indices(Index tau, Index s) {
  if (s < 1) throw ParameterError("scale_indices: scale must be >= 1");
  if (tau < 1) throw ParameterError("scale_indices: tau must be >= 1");
  std::vector<Index> indices;
  for (Index i = tau - 1; i >= 0; i -= s) indices.push_back(i);
  std::reverse(indices.begin(), indices.end());
  return indices;
}

Matrix scale_temporal(const Matrix& x, Index s) {
  const std::vector<Index> idx = scale_indices(x.rows(), s);
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Index>(i)) = x.row(idx[i]);
  }
  return out;
}

ad::Var graph_conv_block(ad::Tape& tape, ad::Var xs_nodes, const GraphSpec& graph,
                         ScaleBlockParams& params, bool train, Scalar dropout_p,
                         std::mt19937_64& gen) {
  if (xs_nodes.cols() != params.w1.value.rows()) {
    throw DimensionError("graph_conv_block: scale " + std::to_string(params.scale) +
                         " expects time length " + std::to_string(params.w1.value.rows()) +
                         ", input has " + std::to_string(xs_nodes.cols()));
  }
  if (xs_nodes.rows() % graph.n != 0) {
    throw DimensionError("graph_conv_block: scale " + std::to_string(params.scale) + " stack of " +
                         std::to_string(xs_nodes.rows()) + " rows is not a multiple of N=" +
                         std::to_string(graph.n));
  }
  ad::Var adj = tape.constant(graph.norm_adj);
  ad::Var w1 = tape.leaf(params.w1);
  ad::Var w2 = tape.leaf(params.w2);
  ad::Var gamma = tape.leaf(params.bn_gamma);
  ad::Var beta = tape.leaf(params.bn_beta);

  ad::Var mixed = ad::block_left_multiply(adj, xs_nodes, graph.n);
  ad::Var pre = ad::matmul(mixed, w1);
  ad::Var hidden = ad::relu(ad::batch_norm(pre, gamma, beta, params.bn_state, train));
  ad::Var kept = ad::dropout(hidden, dropout_p, train, gen);
  ad::Var mixed2 = ad::block_left_multiply(adj, kept, graph.n);
  return ad::matmul(mixed2, w2);
}

ad::Var multiscale_fuse(ad::Tape& tape, const std::vector<ad::Var>& blocks,
                        std::vector<ScaleBlockParams*> params) {
  if (blocks.empty()) throw ParameterError("multiscale_fuse: empty scale set");
  if (blocks.size() != params.size()) {
    throw ContractError("multiscale_fuse: " + std::to_string(blocks.size()) + " blocks vs " +
                        std::to_string(params.size()) + " fusion maps");
  }
  ad::Var total;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ad::Var mapped = ad::matmul(blocks[i], tape.leaf(params[i]->fuse));
    total = i == 0 ? mapped : ad::add(total, mapped);
  }
  return total;
}

}  // namespace mstem
