#pragma once

#include <vector>

#include "mstem/autodiff.hpp"
#include "mstem/common.hpp"

namespace mstem::ad {

// Adam with bias correction. The paper fixes only the learning rate (0.001);
// beta/epsilon are the usual defaults.
struct AdamState {
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<Matrix> m;  // first moments, one per parameter
  std::vector<Matrix> v;  // second moments

  static AdamState for_params(const std::vector<Parameter*>& params, Scalar lr = 1e-3);
};

// One update over all parameters from their accumulated gradients; gradients
// are zeroed afterwards.
void adam_step(const std::vector<Parameter*>& params, AdamState& state);

}  // namespace mstem::ad
