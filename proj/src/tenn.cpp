#include "mstem/tenn.hpp"

namespace mstem {

namespace {

ad::Var gate(ad::Tape& tape, ad::Var z, ad::Parameter& w, ad::Parameter& b, const char* name,
             ad::Activation act) {
  if (z.cols() != w.value.rows()) {
    throw DimensionError(std::string("lstm_cell_step: ") + name + " gate expects input width " +
                         std::to_string(w.value.rows()) + ", got " + std::to_string(z.cols()));
  }
  return ad::activation(ad::add_row_broadcast(ad::matmul(z, tape.leaf(w)), tape.leaf(b)), act);
}

}  // namespace

LstmState lstm_cell_step(ad::Tape& tape, ad::Var x, LstmState state, LstmParams& params) {
  ad::Var z = ad::hstack(state.h, x);
  ad::Var f = gate(tape, z, params.w_forget, params.b_forget, "forget", ad::Activation::Sigmoid);
  ad::Var i = gate(tape, z, params.w_input, params.b_input, "input", ad::Activation::Sigmoid);
  ad::Var c_cand = gate(tape, z, params.w_cell, params.b_cell, "cell", ad::Activation::Tanh);
  ad::Var c_next = ad::add(ad::hadamard(f, state.c), ad::hadamard(i, c_cand));
  ad::Var o = gate(tape, z, params.w_output, params.b_output, "output", ad::Activation::Sigmoid);
  ad::Var h_next = ad::hadamard(o, ad::tanh_op(c_next));
  return LstmState{h_next, c_next};
}

ad::Var lstm_forward(ad::Tape& tape, ad::Var x_stacked, Index tau, LstmParams& params) {
  if (tau < 1) throw ContractError("lstm_forward: empty window");
  if (x_stacked.rows() % tau != 0) {
    throw DimensionError("lstm_forward: stack of " + std::to_string(x_stacked.rows()) +
                         " rows is not a multiple of tau=" + std::to_string(tau));
  }
  const Index batch = x_stacked.rows() / tau;
  const Index d_h = params.hidden();
  LstmState state{tape.constant(Matrix::Zero(batch, d_h)),
                  tape.constant(Matrix::Zero(batch, d_h))};
  std::vector<Index> step_rows(static_cast<std::size_t>(batch));
  for (Index t = 0; t < tau; ++t) {
    for (Index b = 0; b < batch; ++b) step_rows[static_cast<std::size_t>(b)] = b * tau + t;
    ad::Var x_t = ad::select_rows(x_stacked, step_rows);
    state = lstm_cell_step(tape, x_t, state, params);
  }
  return state.h;
}

ad::Var residual_fusion(ad::Tape& tape, ad::Var x_stacked, Index tau, Index alpha,
                        ResidualParams& params) {
  if (params.eta > tau) {
    throw ParameterError("residual_fusion: eta=" + std::to_string(params.eta) +
                         " exceeds tau=" + std::to_string(tau));
  }
  if (params.w_lo.value.rows() != tau || params.w_lo.value.cols() != alpha) {
    throw DimensionError("residual_fusion: W_lo is " + shape_str(params.w_lo.value) +
                         ", expected " + shape_str(tau, alpha));
  }
  if (x_stacked.rows() % tau != 0) {
    throw DimensionError("residual_fusion: stack of " + std::to_string(x_stacked.rows()) +
                         " rows is not a multiple of tau=" + std::to_string(tau));
  }
  const Index batch = x_stacked.rows() / tau;

  // Linear path: per block, (X^T W_lo)^T = W_lo^T X.
  ad::Var w_lo_t = ad::transpose(tape.leaf(params.w_lo));
  ad::Var linear = ad::block_left_multiply(w_lo_t, x_stacked, tau);

  // History path: the last eta rows, bottom-aligned into alpha output rows.
  const Index used = std::min(params.eta, alpha);
  std::vector<Index> history_rows;
  history_rows.reserve(static_cast<std::size_t>(batch * alpha));
  for (Index b = 0; b < batch; ++b) {
    for (Index r = 0; r < alpha - used; ++r) history_rows.push_back(-1);
    for (Index r = 0; r < used; ++r) history_rows.push_back(b * tau + tau - used + r);
  }
  ad::Var history = ad::select_rows(x_stacked, history_rows);
  return ad::add(history, linear);
}

}  // namespace mstem
