#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wseg/nn/tensor.hpp"

namespace wseg::nn {

enum class LayerKind { conv3x3, conv1x1, relu, maxpool2, upsample2_nearest, concat_skip };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view s);

enum class Stage { pretrain, finetune };

std::string to_string(Stage stage);
Stage stage_from_string(std::string_view s);

// Node 0 is the graph input; layer i produces node i + 1.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  std::vector<int> inputs;
  int in_channels = 0;
  int out_channels = 0;
  int weight_param = -1;
  int bias_param = -1;
};

// Directed acyclic layer list with retained activations for reverse-mode
// differentiation. Layers are appended in topological order, so a reverse sweep
// is a valid backward schedule; gradients reaching a node from several consumers
// are summed in descending consumer index.
template <typename Scalar>
class ModelGraph {
 public:
  ModelGraph() = default;
  explicit ModelGraph(int input_channels);

  // Appends a layer and returns its node id. Channel counts are inferred from the
  // inputs; out_channels is only read for convolutions.
  int add_layer(LayerKind kind, std::vector<int> inputs, int out_channels = 0, std::string name = {});

  int input_channels() const { return input_channels_; }
  int output_channels() const;
  int output_node() const { return static_cast<int>(layers_.size()); }
  // Input height and width must be multiples of this (2^number of pooling layers).
  int spatial_divisor() const { return spatial_divisor_; }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Parameter<Scalar>>& params() { return params_; }
  const std::vector<Parameter<Scalar>>& params() const { return params_; }
  Parameter<Scalar>& param(std::string_view name);
  const Parameter<Scalar>& param(std::string_view name) const;
  Eigen::Index count_params() const;

  const Tensor4<Scalar>& forward(const Tensor4<Scalar>& x);
  // Accumulates parameter gradients (+=). Returns d loss / d input when requested,
  // otherwise an empty tensor. Throws StateError when no forward pass is retained.
  Tensor4<Scalar> backward(const Tensor4<Scalar>& output_grad, bool want_input_grad = false);
  void zero_grad();
  void clear_activations();

  bool has_activations() const { return !activations_.empty(); }
  const Tensor4<Scalar>& activation(int node) const;
  // Hash of every relu on/off state and pooling winner from the last forward pass.
  std::uint64_t activation_pattern() const;

  nlohmann::json layers_json() const;
  static ModelGraph from_layers_json(const nlohmann::json& layers, int input_channels);

  template <typename Other>
  ModelGraph<Other> cast() const;

  Stage stage = Stage::pretrain;
  nlohmann::json architecture;  // builder config echo, e.g. a UNetConfig

 private:
  template <typename>
  friend class ModelGraph;

  const Tensor4<Scalar>& node_value(int node) const;
  int node_channels(int node) const;

  int input_channels_ = 0;
  int spatial_divisor_ = 1;
  std::vector<int> node_pool_level_{0};
  std::vector<LayerSpec> layers_;
  std::vector<Parameter<Scalar>> params_;
  std::vector<Tensor4<Scalar>> activations_;
  std::vector<std::vector<Eigen::Index>> argmax_;
};

template <typename Scalar>
template <typename Other>
ModelGraph<Other> ModelGraph<Scalar>::cast() const {
  ModelGraph<Other> out;
  out.input_channels_ = input_channels_;
  out.spatial_divisor_ = spatial_divisor_;
  out.node_pool_level_ = node_pool_level_;
  out.layers_ = layers_;
  out.stage = stage;
  out.architecture = architecture;
  for (const auto& p : params_) {
    Parameter<Other> q(p.name, p.shape);
    q.value = p.value.template cast<Other>();
    q.grad = p.grad.template cast<Other>();
    out.params_.push_back(std::move(q));
  }
  return out;
}

}  // namespace wseg::nn
