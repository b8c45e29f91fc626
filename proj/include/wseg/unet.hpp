#pragma once

#include <cstdint>

#include <json.hpp>

#include "wseg/image.hpp"
#include "wseg/nn/graph.hpp"

namespace wseg {

// Encoder-decoder segmentation network.
//
// Widths are w_l = base_width * 2^l. Each encoder level l < depth runs two
// conv3x3+relu blocks (input -> w_l -> w_l) and a 2x2 max-pool; the bottleneck
// runs two conv3x3+relu blocks at w_depth. Decoder level l (from depth-1 down to 0)
// upsamples 2x (nearest), applies conv3x3+relu w_{l+1} -> w_l, concatenates the
// encoder skip (2 w_l channels) and runs two conv3x3+relu blocks down to w_l. A
// conv1x1 head maps w_0 to out_channels raw logits. There is no normalisation.
//
// Parameter count, with c3(a, b) = 9ab + b:
//   sum_l [c3(in_l, w_l) + c3(w_l, w_l)]                      in_0 = in_channels, in_l = w_{l-1}
//   + c3(w_{depth-1}, w_depth) + c3(w_depth, w_depth)
//   + sum_l [c3(w_{l+1}, w_l) + c3(2 w_l, w_l) + c3(w_l, w_l)]
//   + w_0 * out_channels + out_channels
// e.g. in=3, out=1, base=16, depth=3 gives 535,793.
struct UNetConfig {
  int in_channels = 3;
  int out_channels = 1;
  int base_width = 16;
  int depth = 3;
  std::uint64_t seed = 0;

  void validate() const;
  // (3, 1) and (4, 2) are the two stages the pipeline trains; anything else works but is flagged.
  bool is_pipeline_stage() const;
  int width(int level) const { return base_width << level; }

  nlohmann::json to_json() const;
  static UNetConfig from_json(const nlohmann::json& j);

  static UNetConfig pretrain(int base_width = 16, int depth = 3, std::uint64_t seed = 0) {
    return {3, 1, base_width, depth, seed};
  }
  static UNetConfig finetune(int base_width = 16, int depth = 3, std::uint64_t seed = 0) {
    return {4, 2, base_width, depth, seed};
  }
  // Larger configuration for parameter bookkeeping only; not meant for CPU training.
  static UNetConfig large_scale(int in_channels = 3, int out_channels = 1) { return {in_channels, out_channels, 44, 4, 0}; }
};

template <typename Scalar>
nn::ModelGraph<Scalar> build_unet(const UNetConfig& cfg);

// Node id of the bottleneck output (deepest encoder feature map).
int unet_bottleneck_node(const nn::ModelGraph<float>& model);

// Parameters added by transfer_weights: the zero input slice of the first conv
// plus the extra head channels.
long transfer_param_delta(const UNetConfig& pretrained, const UNetConfig& target);

// Copies every interior parameter of a pretrained model into a freshly built
// target model. New input channels of the first conv are zero-initialised so the
// handoff ignores them; a head with a different channel count is He-initialised
// from target.seed.
nn::ModelGraph<float> transfer_weights(const nn::ModelGraph<float>& pretrained, const UNetConfig& target);

UNetConfig unet_config_of(const nn::ModelGraph<float>& model);

nn::Tensor4<float> image_to_tensor(const Image& img);
nn::Tensor4<float> finetune_input(const Image& img, const TextureMap& texture);

TextureMap predict_texture(nn::ModelGraph<float>& model, const Image& img);

struct WrinklePrediction {
  Plane probability;  // wrinkle-class softmax probability
  BinaryMask mask;    // 1 where wrinkle logit >= background logit
};

WrinklePrediction predict_wrinkles(nn::ModelGraph<float>& model, const Image& img, const TextureMap& texture);
WrinklePrediction decode_wrinkle_logits(const nn::Tensor4<float>& logits, int item = 0);

}  // namespace wseg
