#include "mstem/optimizer.hpp"

#include <cmath>

namespace mstem::ad {

AdamState AdamState::for_params(const std::vector<Parameter*>& params, Scalar lr) {
  AdamState state;
  state.learning_rate = lr;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Parameter* p : params) {
    state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return state;
}

void adam_step(const std::vector<Parameter*>& params, AdamState& state) {
  if (state.m.size() != params.size()) {
    throw ContractError("adam_step: state tracks " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  state.step_count += 1;
  const Scalar t = static_cast<Scalar>(state.step_count);
  const Scalar bias1 = 1.0 - std::pow(state.beta1, t);
  const Scalar bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (state.m[i].rows() != p.value.rows() || state.m[i].cols() != p.value.cols()) {
      throw ContractError("adam_step: moment shape drifted for " + p.name);
    }
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * p.grad;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    const Matrix m_hat = state.m[i] / bias1;
    const Matrix v_hat = state.v[i] / bias2;
    p.value.array() -=
        state.learning_rate * m_hat.array() / (v_hat.array().sqrt() + state.epsilon);
    p.zero_grad();
  }
}

}  // namespace mstem::ad
