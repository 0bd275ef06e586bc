#pragma once

#include <vector>

#include "mstem/autodiff.hpp"
#include "mstem/common.hpp"

namespace mstem {

// Single-layer LSTM gates acting on [h_{t-1}, x_t] in row-vector convention:
// z (B x (d_h+N)) times W ((d_h+N) x d_h) plus bias (1 x d_h).
struct LstmParams {
  ad::Parameter w_forget, w_input, w_cell, w_output;
  ad::Parameter b_forget, b_input, b_cell, b_output;

  Index hidden() const { return w_forget.value.cols(); }
  Index input_width() const { return w_forget.value.rows() - w_forget.value.cols(); }
};

struct LstmState {
  ad::Var h;  // B x d_h
  ad::Var c;  // B x d_h
};

// One cell update: f,i,o = sigmoid gates, c' = f.c + i.tanh-candidate,
// h' = o.tanh(c'). x is B x N.
LstmState lstm_cell_step(ad::Tape& tape, ad::Var x, LstmState state, LstmParams& params);

// Folds the cell over rows t = 0..tau-1 of each window from a zero state and
// returns the final hidden state (B x d_h). x_stacked holds B blocks of tau
// chronological rows.
ad::Var lstm_forward(ad::Tape& tape, ad::Var x_stacked, Index tau, LstmParams& params);

// Residual fusion: recent-history slice plus a learned temporal map of the
// full window.
struct ResidualParams {
  ad::Parameter w_lo;  // tau x alpha, applied along the time axis per station
  Index eta = 0;       // history length; defaults to alpha at init
};

// For each window block (tau x N): last eta rows aligned to the output end
// (zero-padded on top when eta < alpha, truncated to the most recent alpha
// rows when eta > alpha) plus W_lo^T X. Returns B blocks of alpha rows.
ad::Var residual_fusion(ad::Tape& tape, ad::Var x_stacked, Index tau, Index alpha,
                        ResidualParams& params);

}  // namespace mstem
