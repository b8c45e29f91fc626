#pragma once

#include <vector>

#include <json.hpp>

#include "wseg/nn/tensor.hpp"

namespace wseg::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  nlohmann::json to_json() const { return {{"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}}; }
};

template <typename Scalar>
struct OptimState {
  AdamConfig config;
  long step = 0;
  std::vector<Vector<Scalar>> m;
  std::vector<Vector<Scalar>> v;
};

template <typename Scalar>
OptimState<Scalar> make_optim_state(const std::vector<Parameter<Scalar>>& params, AdamConfig config = {});

// One bias-corrected Adam update using each parameter's accumulated grad.
template <typename Scalar>
void adam_step(std::vector<Parameter<Scalar>>& params, OptimState<Scalar>& state);

}  // namespace wseg::nn
