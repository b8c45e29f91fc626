#include "wseg/unet.hpp"

#include <cmath>
#include <random>
#include <string>

#include "wseg/nn/loss.hpp"

namespace wseg {

using nn::LayerKind;
using nn::ModelGraph;

void UNetConfig::validate() const {
  if (depth < 1) throw ArgumentError("unet depth must be >= 1");
  if (base_width < 1) throw ArgumentError("unet base_width must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ArgumentError("unet channel counts must be >= 1");
}

bool UNetConfig::is_pipeline_stage() const {
  return (in_channels == 3 && out_channels == 1) || (in_channels == 4 && out_channels == 2);
}

nlohmann::json UNetConfig::to_json() const {
  return {{"in_channels", in_channels}, {"out_channels", out_channels}, {"base_width", base_width},
          {"depth", depth},             {"seed", seed}};
}

UNetConfig UNetConfig::from_json(const nlohmann::json& j) {
  UNetConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.out_channels = j.value("out_channels", c.out_channels);
  c.base_width = j.value("base_width", c.base_width);
  c.depth = j.value("depth", c.depth);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

template <typename Scalar>
void he_init(nn::Parameter<Scalar>& w, std::mt19937_64& rng) {
  const int fan_in = w.shape[1] * w.shape[2] * w.shape[3];
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < w.value.size(); ++i) w.value[i] = static_cast<Scalar>(normal(rng));
}

template <typename Scalar>
int conv_relu(ModelGraph<Scalar>& g, int input, int out, const std::string& name) {
  const int c = g.add_layer(LayerKind::conv3x3, {input}, out, name);
  return g.add_layer(LayerKind::relu, {c}, 0, name + ".relu");
}

const std::string kHeadName = "head";
const std::string kFirstConv = "enc0.conv0";

}  // namespace

template <typename Scalar>
ModelGraph<Scalar> build_unet(const UNetConfig& cfg) {
  cfg.validate();
  ModelGraph<Scalar> g(cfg.in_channels);
  std::vector<int> skips;
  int node = 0;
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    node = conv_relu(g, node, cfg.width(l), p + ".conv0");
    node = conv_relu(g, node, cfg.width(l), p + ".conv1");
    skips.push_back(node);
    node = g.add_layer(LayerKind::maxpool2, {node}, 0, p + ".pool");
  }
  node = conv_relu(g, node, cfg.width(cfg.depth), "bottleneck.conv0");
  node = conv_relu(g, node, cfg.width(cfg.depth), "bottleneck.conv1");
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const std::string p = "dec" + std::to_string(l);
    node = g.add_layer(LayerKind::upsample2_nearest, {node}, 0, p + ".up");
    node = conv_relu(g, node, cfg.width(l), p + ".upconv");
    node = g.add_layer(LayerKind::concat_skip, {node, skips[static_cast<std::size_t>(l)]}, 0, p + ".concat");
    node = conv_relu(g, node, cfg.width(l), p + ".conv0");
    node = conv_relu(g, node, cfg.width(l), p + ".conv1");
  }
  g.add_layer(LayerKind::conv1x1, {node}, cfg.out_channels, kHeadName);

  std::mt19937_64 rng(cfg.seed);
  for (auto& p : g.params()) {
    if (p.shape.size() == 4) he_init(p, rng);
  }
  g.stage = cfg.out_channels == 1 ? nn::Stage::pretrain : nn::Stage::finetune;
  g.architecture = cfg.to_json();
  return g;
}

template ModelGraph<float> build_unet<float>(const UNetConfig&);
template ModelGraph<double> build_unet<double>(const UNetConfig&);

int unet_bottleneck_node(const ModelGraph<float>& model) {
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == "bottleneck.conv1.relu") return static_cast<int>(i) + 1;
  }
  throw ArgumentError("model has no bottleneck layer");
}

long transfer_param_delta(const UNetConfig& pretrained, const UNetConfig& target) {
  const long w0 = pretrained.width(0);
  return 9L * w0 * (target.in_channels - pretrained.in_channels) +
         (w0 + 1L) * (target.out_channels - pretrained.out_channels);
}

UNetConfig unet_config_of(const ModelGraph<float>& model) {
  if (model.architecture.is_null()) throw UsageError("model carries no U-Net architecture record");
  return UNetConfig::from_json(model.architecture);
}

ModelGraph<float> transfer_weights(const ModelGraph<float>& pretrained, const UNetConfig& target) {
  target.validate();
  const UNetConfig source = unet_config_of(pretrained);
  if (source.base_width != target.base_width || source.depth != target.depth) {
    throw IncompatibleError("transfer_weights: pretrained " + source.to_json().dump() + " vs target " +
                            target.to_json().dump() + " (base_width and depth must match)");
  }
  if (target.in_channels < source.in_channels) {
    throw IncompatibleError("transfer_weights: target has fewer input channels than the pretrained model");
  }
  ModelGraph<float> out = build_unet<float>(target);
  for (auto& dst : out.params()) {
    const auto& src = pretrained.param(dst.name);
    const bool first_weight = dst.name == kFirstConv + ".weight";
    const bool head = dst.name.rfind(kHeadName + ".", 0) == 0;
    if (head) {
      if (dst.shape == src.shape) dst.value = src.value;
      continue;  // re-initialised by build_unet
    }
    if (first_weight) {
      const int out_c = dst.shape[0];
      const int src_in = src.shape[1];
      const int dst_in = dst.shape[1];
      const int k2 = dst.shape[2] * dst.shape[3];
      dst.value.setZero();
      for (int o = 0; o < out_c; ++o) {
        dst.value.segment(static_cast<Eigen::Index>(o) * dst_in * k2, static_cast<Eigen::Index>(src_in) * k2) =
            src.value.segment(static_cast<Eigen::Index>(o) * src_in * k2, static_cast<Eigen::Index>(src_in) * k2);
      }
      continue;
    }
    if (dst.shape != src.shape) {
      throw IncompatibleError("transfer_weights: parameter '" + dst.name + "' shape " + nn::shape_str(src.shape) +
                              " vs " + nn::shape_str(dst.shape));
    }
    dst.value = src.value;
  }
  out.stage = nn::Stage::finetune;
  return out;
}

nn::Tensor4<float> image_to_tensor(const Image& img) {
  nn::Tensor4<float> t(nn::Shape4{1, img.channels(), img.height(), img.width()});
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) t(0, c, y, x) = img.at(y, x, c);
  return t;
}

nn::Tensor4<float> finetune_input(const Image& img, const TextureMap& texture) {
  if (img.channels() != 3) throw ArgumentError("finetune input needs an RGB image");
  if (texture.height() != img.height() || texture.width() != img.width()) {
    throw ArgumentError("texture map size does not match image");
  }
  nn::Tensor4<float> t(nn::Shape4{1, 4, img.height(), img.width()});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) t(0, c, y, x) = img.at(y, x, c);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) t(0, 3, y, x) = texture.data(y, x);
  return t;
}

TextureMap predict_texture(ModelGraph<float>& model, const Image& img) {
  if (model.stage != nn::Stage::pretrain || model.input_channels() != 3 || model.output_channels() != 1) {
    throw UsageError("predict_texture needs a pretrain-stage 3->1 model, got " + nn::to_string(model.stage) + " " +
                     std::to_string(model.input_channels()) + "->" + std::to_string(model.output_channels()));
  }
  const auto& logits = model.forward(image_to_tensor(img));
  TextureMap out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.data(y, x) = nn::sigmoid(logits(0, 0, y, x));
  model.clear_activations();
  return out;
}

WrinklePrediction decode_wrinkle_logits(const nn::Tensor4<float>& logits, int item) {
  if (logits.channels() != 2) throw ShapeError("wrinkle logits need 2 channels, got " + logits.shape().str());
  WrinklePrediction p{Plane(logits.height(), logits.width()), BinaryMask(logits.height(), logits.width())};
  for (int y = 0; y < logits.height(); ++y) {
    for (int x = 0; x < logits.width(); ++x) {
      const float bg = logits(item, 0, y, x);
      const float fg = logits(item, 1, y, x);
      p.probability(y, x) = nn::sigmoid(fg - bg);
      p.mask(y, x) = fg >= bg ? 1 : 0;
    }
  }
  return p;
}

WrinklePrediction predict_wrinkles(ModelGraph<float>& model, const Image& img, const TextureMap& texture) {
  if (model.stage != nn::Stage::finetune || model.input_channels() != 4 || model.output_channels() != 2) {
    throw UsageError("predict_wrinkles needs a finetune-stage 4->2 model, got " + nn::to_string(model.stage) + " " +
                     std::to_string(model.input_channels()) + "->" + std::to_string(model.output_channels()));
  }
  const auto& logits = model.forward(finetune_input(img, texture));
  WrinklePrediction p = decode_wrinkle_logits(logits);
  model.clear_activations();
  return p;
}

}  // namespace wseg
