#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wseg/image.hpp"
#include "wseg/nn/adam.hpp"
#include "wseg/nn/checkpoint.hpp"
#include "wseg/nn/graph.hpp"
#include "wseg/pipeline/manifest.hpp"
#include "wseg/pipeline/splits.hpp"
#include "wseg/unet.hpp"
#include "wseg/weaklabel.hpp"

namespace wseg::pipeline {

// What the 3->1 pretraining stage regresses. `texture` is the weak-label
// method; the others are self-supervised baselines whose target is the clean
// grayscale image.
enum class PretrainTarget { texture, reconstruction, deblur, denoise, super_resolution };

std::string to_string(PretrainTarget t);
PretrainTarget pretrain_target_from_string(std::string_view s);

// Degradations applied to the network input of each baseline.
inline constexpr double kDeblurSigma = 2.0;
inline constexpr double kDenoiseSigma = 0.1;
inline constexpr int kSuperResolutionFactor = 4;

// Input fed to the network for a given pretraining target. noise_seed only matters for denoise.
Image pretext_input(const Image& clean, PretrainTarget kind, std::uint64_t noise_seed);
std::uint64_t pretext_noise_seed(std::uint64_t train_seed, const std::string& image_id);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 4;
  nn::AdamConfig adam;
  double pos_weight = 1.0;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  bool deterministic = true;
  PretrainTarget pretext = PretrainTarget::texture;
  TextureConfig texture;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig defaults);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig()); }

  // 300:150 pretrain:finetune epochs, kept as 2:1 at desk scale.
  static TrainConfig pretrain_defaults() { return TrainConfig{}; }
  static TrainConfig finetune_defaults() {
    TrainConfig c;
    c.epochs = 30;
    return c;
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_jsi = -1.0;  // finetune only

  nlohmann::json to_json() const;
};

struct TrainResult {
  nn::ModelGraph<float> model;  // best-validation parameters
  nn::CheckpointMeta meta;
  std::vector<EpochLog> curve;
  int best_epoch = 0;
  std::vector<std::string> train_ids;

  nlohmann::json curve_json() const;
};

// Called after every epoch with the live (not best) model; return false to stop.
using EpochCallback = std::function<bool(const EpochLog&, nn::ModelGraph<float>&)>;

// Regresses sigmoid(logits) onto the pretraining target with MSE over the whole
// train split; keeps the parameters of the lowest validation loss. The output
// bias is first reset to the logit of the mean training target.
TrainResult pretrain(nn::ModelGraph<float> model, const DatasetManifest& manifest, const Splits& splits,
                     const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Trains the 4->2 model with weighted softmax CE on subset_fraction(train, cfg.fraction, cfg.seed).
// With a pretrained 3->1 model, transfer_weights runs first; otherwise a fresh
// model of `arch` width/depth is He-initialised from cfg.seed. Keeps the
// parameters of the best validation mean-per-image JSI.
TrainResult finetune(const nn::ModelGraph<float>* pretrained, const UNetConfig& arch, const DatasetManifest& manifest,
                     const Splits& splits, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Mean-per-image JSI of the model's predictions on the listed samples.
double mean_jsi_on(nn::ModelGraph<float>& model, const DatasetManifest& manifest, const std::vector<std::string>& ids,
                   const TextureConfig& texture);

}  // namespace wseg::pipeline
