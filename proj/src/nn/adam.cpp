#include "wseg/nn/adam.hpp"

#include <cmath>

namespace wseg::nn {

template <typename Scalar>
OptimState<Scalar> make_optim_state(const std::vector<Parameter<Scalar>>& params, AdamConfig config) {
  OptimState<Scalar> state;
  state.config = config;
  for (const auto& p : params) {
    state.m.push_back(Vector<Scalar>::Zero(p.size()));
    state.v.push_back(Vector<Scalar>::Zero(p.size()));
  }
  return state;
}

template <typename Scalar>
void adam_step(std::vector<Parameter<Scalar>>& params, OptimState<Scalar>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) + " buffers for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].grad.size() != params[i].value.size() || state.m[i].size() != params[i].value.size()) {
      throw ShapeError("adam_step: buffer size mismatch for parameter '" + params[i].name + "'");
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar step_size = static_cast<Scalar>(c.lr / bc1);
  const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const Scalar eps = static_cast<Scalar>(c.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& g = params[i].grad;
    state.m[i] = b1 * state.m[i] + (Scalar(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (Scalar(1) - b2) * g.cwiseAbs2();
    params[i].value.array() -=
        step_size * state.m[i].array() / ((state.v[i].array().sqrt() * inv_sqrt_bc2) + eps);
  }
}

template OptimState<float> make_optim_state(const std::vector<Parameter<float>>&, AdamConfig);
template OptimState<double> make_optim_state(const std::vector<Parameter<double>>&, AdamConfig);
template void adam_step(std::vector<Parameter<float>>&, OptimState<float>&);
template void adam_step(std::vector<Parameter<double>>&, OptimState<double>&);

}  // namespace wseg::nn
