#include "wseg/nn/graph.hpp"

#include <algorithm>

#include "wseg/nn/layers.hpp"

namespace wseg::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::conv1x1: return "conv1x1";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::upsample2_nearest: return "upsample2_nearest";
    case LayerKind::concat_skip: return "concat_skip";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (LayerKind k : {LayerKind::conv3x3, LayerKind::conv1x1, LayerKind::relu, LayerKind::maxpool2,
                      LayerKind::upsample2_nearest, LayerKind::concat_skip}) {
    if (to_string(k) == s) return k;
  }
  throw FormatError("unknown layer kind '" + std::string(s) + "'");
}

std::string to_string(Stage stage) { return stage == Stage::pretrain ? "pretrain" : "finetune"; }

Stage stage_from_string(std::string_view s) {
  if (s == "pretrain") return Stage::pretrain;
  if (s == "finetune") return Stage::finetune;
  throw FormatError("unknown stage tag '" + std::string(s) + "'");
}

namespace {

int kernel_of(LayerKind k) { return k == LayerKind::conv3x3 ? 3 : 1; }

}  // namespace

template <typename Scalar>
ModelGraph<Scalar>::ModelGraph(int input_channels) : input_channels_(input_channels) {
  if (input_channels < 1) throw ArgumentError("model input channels must be >= 1");
}

template <typename Scalar>
int ModelGraph<Scalar>::node_channels(int node) const {
  return node == 0 ? input_channels_ : layers_[static_cast<std::size_t>(node - 1)].out_channels;
}

template <typename Scalar>
int ModelGraph<Scalar>::add_layer(LayerKind kind, std::vector<int> inputs, int out_channels, std::string name) {
  const int next = output_node() + 1;
  for (int in : inputs) {
    if (in < 0 || in >= next) throw ArgumentError("layer input node " + std::to_string(in) + " does not exist yet");
  }
  const std::size_t expected_inputs = kind == LayerKind::concat_skip ? 2 : 1;
  if (inputs.size() != expected_inputs) {
    throw ArgumentError(to_string(kind) + " takes " + std::to_string(expected_inputs) + " input(s)");
  }
  LayerSpec spec;
  spec.kind = kind;
  spec.name = name.empty() ? to_string(kind) + std::to_string(layers_.size()) : std::move(name);
  spec.inputs = inputs;
  spec.in_channels = node_channels(inputs[0]);
  int level = node_pool_level_[static_cast<std::size_t>(inputs[0])];
  switch (kind) {
    case LayerKind::conv3x3:
    case LayerKind::conv1x1: {
      if (out_channels < 1) throw ArgumentError("convolution needs out_channels >= 1");
      spec.out_channels = out_channels;
      const int k = kernel_of(kind);
      spec.weight_param = static_cast<int>(params_.size());
      params_.emplace_back(spec.name + ".weight", std::vector<int>{out_channels, spec.in_channels, k, k});
      spec.bias_param = static_cast<int>(params_.size());
      params_.emplace_back(spec.name + ".bias", std::vector<int>{out_channels});
      break;
    }
    case LayerKind::concat_skip: {
      const int other = inputs[1];
      if (node_pool_level_[static_cast<std::size_t>(other)] != level) {
        throw ShapeError("concat_skip '" + spec.name + "': inputs " + std::to_string(inputs[0]) + " and " +
                         std::to_string(other) + " live at different resolutions");
      }
      spec.out_channels = spec.in_channels + node_channels(other);
      break;
    }
    case LayerKind::maxpool2:
      ++level;
      spec.out_channels = spec.in_channels;
      break;
    case LayerKind::upsample2_nearest:
      --level;
      spec.out_channels = spec.in_channels;
      break;
    case LayerKind::relu:
      spec.out_channels = spec.in_channels;
      break;
  }
  node_pool_level_.push_back(level);
  spatial_divisor_ = std::max(spatial_divisor_, 1 << std::max(level, 0));
  layers_.push_back(std::move(spec));
  activations_.clear();
  return output_node();
}

template <typename Scalar>
int ModelGraph<Scalar>::output_channels() const {
  return node_channels(output_node());
}

template <typename Scalar>
Parameter<Scalar>& ModelGraph<Scalar>::param(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ArgumentError("no parameter named '" + std::string(name) + "'");
}

template <typename Scalar>
const Parameter<Scalar>& ModelGraph<Scalar>::param(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw ArgumentError("no parameter named '" + std::string(name) + "'");
}

template <typename Scalar>
Eigen::Index ModelGraph<Scalar>::count_params() const {
  Eigen::Index total = 0;
  for (const auto& p : params_) total += p.size();
  return total;
}

template <typename Scalar>
const Tensor4<Scalar>& ModelGraph<Scalar>::node_value(int node) const {
  return activations_[static_cast<std::size_t>(node)];
}

template <typename Scalar>
const Tensor4<Scalar>& ModelGraph<Scalar>::forward(const Tensor4<Scalar>& x) {
  if (x.channels() != input_channels_) {
    throw ShapeError("model expects " + std::to_string(input_channels_) + " input channels, got " + x.shape().str());
  }
  if (x.height() % spatial_divisor_ != 0 || x.width() % spatial_divisor_ != 0) {
    throw ShapeError("input " + x.shape().str() + " spatial dims must be divisible by " +
                     std::to_string(spatial_divisor_));
  }
  activations_.assign(layers_.size() + 1, Tensor4<Scalar>());
  argmax_.assign(layers_.size(), {});
  activations_[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& L = layers_[i];
    const Tensor4<Scalar>& in = activations_[static_cast<std::size_t>(L.inputs[0])];
    Tensor4<Scalar>& out = activations_[i + 1];
    switch (L.kind) {
      case LayerKind::conv3x3:
      case LayerKind::conv1x1: {
        const auto& w = params_[static_cast<std::size_t>(L.weight_param)];
        const auto& b = params_[static_cast<std::size_t>(L.bias_param)];
        const int k = kernel_of(L.kind);
        ConstRowMatrixMap<Scalar> wm(w.value.data(), L.out_channels, static_cast<Eigen::Index>(L.in_channels) * k * k);
        out = conv2d_forward<Scalar>(in, wm, b.value, k, (k - 1) / 2);
        break;
      }
      case LayerKind::relu: out = relu_forward(in); break;
      case LayerKind::maxpool2: out = maxpool2_forward(in, argmax_[i]); break;
      case LayerKind::upsample2_nearest: out = upsample2_forward(in); break;
      case LayerKind::concat_skip:
        out = concat_channels(in, activations_[static_cast<std::size_t>(L.inputs[1])]);
        break;
    }
  }
  return activations_.back();
}

template <typename Scalar>
Tensor4<Scalar> ModelGraph<Scalar>::backward(const Tensor4<Scalar>& output_grad, bool want_input_grad) {
  if (activations_.empty()) throw StateError("backward called before forward");
  if (!(output_grad.shape() == activations_.back().shape())) {
    throw ShapeError("backward: output gradient " + output_grad.shape().str() + " vs output " +
                     activations_.back().shape().str());
  }
  std::vector<Tensor4<Scalar>> grads(activations_.size());
  std::vector<bool> has(activations_.size(), false);
  grads.back() = output_grad;
  has.back() = true;
  auto accumulate = [&](int node, Tensor4<Scalar>&& g) {
    auto idx = static_cast<std::size_t>(node);
    if (!has[idx]) {
      grads[idx] = std::move(g);
      has[idx] = true;
    } else {
      grads[idx].data() += g.data();
    }
  };
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::size_t node = i + 1;
    if (!has[node]) continue;
    const LayerSpec& L = layers_[i];
    const Tensor4<Scalar>& dy = grads[node];
    const int src = L.inputs[0];
    const bool need_dx = src != 0 || want_input_grad;
    switch (L.kind) {
      case LayerKind::conv3x3:
      case LayerKind::conv1x1: {
        auto& w = params_[static_cast<std::size_t>(L.weight_param)];
        auto& b = params_[static_cast<std::size_t>(L.bias_param)];
        const int k = kernel_of(L.kind);
        const Eigen::Index cols = static_cast<Eigen::Index>(L.in_channels) * k * k;
        ConstRowMatrixMap<Scalar> wm(w.value.data(), L.out_channels, cols);
        RowMatrixMap<Scalar> dwm(w.grad.data(), L.out_channels, cols);
        Tensor4<Scalar> dx;
        conv2d_backward<Scalar>(activations_[static_cast<std::size_t>(src)], wm, dy, k, (k - 1) / 2,
                                need_dx ? &dx : nullptr, dwm, b.grad);
        if (need_dx) accumulate(src, std::move(dx));
        break;
      }
      case LayerKind::relu: accumulate(src, relu_backward(activations_[node], dy)); break;
      case LayerKind::maxpool2:
        accumulate(src, maxpool2_backward(dy, argmax_[i], activations_[static_cast<std::size_t>(src)].shape()));
        break;
      case LayerKind::upsample2_nearest: accumulate(src, upsample2_backward(dy)); break;
      case LayerKind::concat_skip: {
        Tensor4<Scalar> da;
        Tensor4<Scalar> db;
        split_channels(dy, L.in_channels, da, db);
        accumulate(src, std::move(da));
        accumulate(L.inputs[1], std::move(db));
        break;
      }
    }
    grads[node] = Tensor4<Scalar>();
  }
  if (want_input_grad) return has[0] ? grads[0] : Tensor4<Scalar>(activations_[0].shape());
  return {};
}

template <typename Scalar>
void ModelGraph<Scalar>::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

template <typename Scalar>
void ModelGraph<Scalar>::clear_activations() {
  activations_.clear();
  argmax_.clear();
}

template <typename Scalar>
const Tensor4<Scalar>& ModelGraph<Scalar>::activation(int node) const {
  if (activations_.empty()) throw StateError("no activations retained; run forward first");
  if (node < 0 || node >= static_cast<int>(activations_.size())) throw ArgumentError("activation node out of range");
  return activations_[static_cast<std::size_t>(node)];
}

template <typename Scalar>
std::uint64_t ModelGraph<Scalar>::activation_pattern() const {
  if (activations_.empty()) throw StateError("no activations retained; run forward first");
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].kind == LayerKind::relu) {
      const auto& a = activations_[i + 1].data();
      for (Eigen::Index j = 0; j < a.size(); ++j) mix(a[j] > Scalar(0) ? 1 : 0);
    } else if (layers_[i].kind == LayerKind::maxpool2) {
      for (Eigen::Index idx : argmax_[i]) mix(static_cast<std::uint64_t>(idx));
    }
  }
  return h;
}

template <typename Scalar>
nlohmann::json ModelGraph<Scalar>::layers_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& L : layers_) {
    arr.push_back({{"kind", to_string(L.kind)},
                   {"name", L.name},
                   {"inputs", L.inputs},
                   {"in_channels", L.in_channels},
                   {"out_channels", L.out_channels}});
  }
  return arr;
}

template <typename Scalar>
ModelGraph<Scalar> ModelGraph<Scalar>::from_layers_json(const nlohmann::json& layers, int input_channels) {
  ModelGraph g(input_channels);
  for (const auto& j : layers) {
    const LayerKind kind = layer_kind_from_string(j.at("kind").get<std::string>());
    g.add_layer(kind, j.at("inputs").get<std::vector<int>>(), j.at("out_channels").get<int>(),
                j.at("name").get<std::string>());
    const LayerSpec& L = g.layers_.back();
    if (L.in_channels != j.at("in_channels").get<int>() || L.out_channels != j.at("out_channels").get<int>()) {
      throw FormatError("layer '" + L.name + "' channel counts inconsistent with its inputs");
    }
  }
  return g;
}

template class ModelGraph<float>;
template class ModelGraph<double>;

}  // namespace wseg::nn
