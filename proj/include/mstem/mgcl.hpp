#pragma once

#include <random>
#include <vector>

#include "mstem/autodiff.hpp"
#include "mstem/common.hpp"

namespace mstem {

// Stations form an unweighted complete graph with self-loops; the
// symmetric-normalized adjacency has the closed form of all entries 1/N.
struct GraphSpec {
  Index n = 0;
  Matrix norm_adj;  // N x N, symmetric, row sums 1
};

GraphSpec build_graph(Index n);

// Time indices kept when sampling a tau-row window at stride s, anchored so
// the most recent row is always included, in chronological order.
// tau=6, s=2 -> {1,3,5}; tau=5, s=2 -> {0,2,4}.
std::vector<Index> scale_indices(Index tau, Index s);

// Row-subsampled copy of x (tau x N) at stride s; ceil(tau/s) rows.
Matrix scale_temporal(const Matrix& x, Index s);

// Learnable state of one scale block: the two stacked graph convolutions,
// their batch norm, and the fusion map applied before the multiscale sum.
struct ScaleBlockParams {
  Index scale = 1;
  ad::Parameter w1;        // time-length(scale) x hidden
  ad::Parameter w2;        // hidden x graph_out
  ad::Parameter bn_gamma;  // 1 x hidden
  ad::Parameter bn_beta;   // 1 x hidden
  ad::Parameter fuse;      // graph_out x graph_out (the per-scale output map)
  ad::BatchNormState bn_state;
};

// Two-stage normalized graph convolution for one scale over a stacked batch.
// xs_nodes holds B blocks of N rows (node-major scaled windows, N x len
// each); returns the stacked (B*N) x graph_out representation. Batch norm
// folds nodes into the batch axis.
ad::Var graph_conv_block(ad::Tape& tape, ad::Var xs_nodes, const GraphSpec& graph,
                         ScaleBlockParams& params, bool train, Scalar dropout_p,
                         std::mt19937_64& gen);

// Sum of per-scale blocks mapped through their fusion matrices, in ascending
// scale-index order.
ad::Var multiscale_fuse(ad::Tape& tape, const std::vector<ad::Var>& blocks,
                        std::vector<ScaleBlockParams*> params);

}  // namespace mstem
