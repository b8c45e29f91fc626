#include "wseg/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "wseg/image_io.hpp"
#include "wseg/metrics.hpp"
#include "wseg/nn/loss.hpp"
#include "wseg/pipeline/dataset_ops.hpp"
#include "wseg/rng.hpp"

namespace wseg::pipeline {

std::string to_string(PretrainTarget t) {
  switch (t) {
    case PretrainTarget::texture: return "texture";
    case PretrainTarget::reconstruction: return "reconstruction";
    case PretrainTarget::deblur: return "deblur";
    case PretrainTarget::denoise: return "denoise";
    case PretrainTarget::super_resolution: return "super_resolution";
  }
  return "?";
}

PretrainTarget pretrain_target_from_string(std::string_view s) {
  for (auto t : {PretrainTarget::texture, PretrainTarget::reconstruction, PretrainTarget::deblur,
                 PretrainTarget::denoise, PretrainTarget::super_resolution}) {
    if (to_string(t) == s) return t;
  }
  throw ArgumentError("unknown pretext kind '" + std::string(s) + "'");
}

Image pretext_input(const Image& clean, PretrainTarget kind, std::uint64_t noise_seed) {
  switch (kind) {
    case PretrainTarget::texture:
    case PretrainTarget::reconstruction: return clean;
    case PretrainTarget::deblur: return gaussian_blur(clean, kDeblurSigma);
    case PretrainTarget::denoise: return add_gaussian_noise(clean, kDenoiseSigma, noise_seed);
    case PretrainTarget::super_resolution: return down_up_sample(clean, kSuperResolutionFactor);
  }
  return clean;
}

std::uint64_t pretext_noise_seed(std::uint64_t train_seed, const std::string& image_id) {
  return derive_seed(train_seed, hash_string(image_id));
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("fraction must lie in (0, 1]");
  if (!(adam.lr > 0.0)) throw ArgumentError("learning rate must be > 0");
  if (!(pos_weight > 0.0)) throw ArgumentError("pos_weight must be > 0");
  texture.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"adam", adam.to_json()},
          {"pos_weight", pos_weight},
          {"fraction", fraction},
          {"seed", seed},
          {"deterministic", deterministic},
          {"pretext", to_string(pretext)},
          {"texture", texture.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    c.adam.lr = a.value("lr", c.adam.lr);
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
  }
  c.adam.lr = j.value("lr", c.adam.lr);
  c.pos_weight = j.value("pos_weight", c.pos_weight);
  c.fraction = j.value("fraction", c.fraction);
  c.seed = j.value("seed", c.seed);
  c.deterministic = j.value("deterministic", c.deterministic);
  if (j.contains("pretext")) c.pretext = pretrain_target_from_string(j["pretext"].get<std::string>());
  if (j.contains("texture")) c.texture = TextureConfig::from_json(j["texture"]);
  c.validate();
  return c;
}

nlohmann::json EpochLog::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}};
  if (val_jsi >= 0.0) j["val_jsi"] = val_jsi;
  return j;
}

nlohmann::json TrainResult::curve_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : curve) arr.push_back(e.to_json());
  return {{"best_epoch", best_epoch}, {"epochs", arr}};
}

namespace {

using Tensor = nn::Tensor4<float>;

Tensor plane_tensor(const Plane& p) {
  Tensor t(nn::Shape4{1, 1, static_cast<int>(p.rows()), static_cast<int>(p.cols())});
  for (int y = 0; y < p.rows(); ++y)
    for (int x = 0; x < p.cols(); ++x) t(0, 0, y, x) = p(y, x);
  return t;
}

Tensor stack(const std::vector<const Tensor*>& items) {
  const nn::Shape4 s = items.front()->shape();
  Tensor out(nn::Shape4{static_cast<int>(items.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i]->shape() == s)) throw ShapeError("training samples differ in size: " + items[i]->shape().str() + " vs " + s.str());
    out.data().segment(static_cast<Eigen::Index>(i) * s.item_size(), s.item_size()) = items[i]->data();
  }
  return out;
}

struct PretrainItem {
  Tensor input;
  Tensor target;
};

struct FinetuneItem {
  std::string id;
  Tensor input;
  BinaryMask gt;
};

std::vector<PretrainItem> load_pretrain_items(const DatasetManifest& m, const std::vector<std::string>& ids,
                                              const TrainConfig& cfg) {
  std::vector<PretrainItem> items;
  for (const auto& id : ids) {
    const Sample& s = m.find(id);
    const Image img = load_sample_image(m, s);
    if (img.channels() != 3) throw FormatError("image '" + s.image_path + "' is not RGB");
    PretrainItem it;
    it.input = image_to_tensor(pretext_input(img, cfg.pretext, pretext_noise_seed(cfg.seed, id)));
    it.target = cfg.pretext == PretrainTarget::texture ? plane_tensor(weak_label_for(m, s, img, cfg.texture).data)
                                                       : plane_tensor(to_grayscale(img).plane(0));
    items.push_back(std::move(it));
  }
  return items;
}

// Start the output layer at the logit of the mean target. Texture targets are
// mostly zero; from a zero bias the net first learns to push every logit down,
// which inflates activations until the sigmoid saturates and training stalls.
void init_output_bias(nn::ModelGraph<float>& model, const std::vector<PretrainItem>& items) {
  double sum = 0.0;
  double n = 0.0;
  for (const auto& it : items) {
    sum += it.target.data().cast<double>().sum();
    n += static_cast<double>(it.target.size());
  }
  const double p = std::clamp(sum / n, 0.01, 0.99);
  model.param(model.layers().back().name + ".bias").value.setConstant(static_cast<float>(std::log(p / (1.0 - p))));
}

std::vector<FinetuneItem> load_finetune_items(const DatasetManifest& m, const std::vector<std::string>& ids,
                                              const TextureConfig& texture) {
  std::vector<FinetuneItem> items;
  for (const auto& id : ids) {
    const Sample& s = m.find(id);
    const Image img = load_sample_image(m, s);
    FinetuneItem it;
    it.id = id;
    it.input = finetune_input(img, texture_channel(m, s, img, texture));
    it.gt = load_fused_gt(m, s);
    items.push_back(std::move(it));
  }
  return items;
}

void require_fused_gt(const DatasetManifest& m, const std::vector<std::vector<std::string>>& groups) {
  std::vector<std::string> missing;
  for (const auto& ids : groups) {
    for (const auto& id : ids) {
      const Sample& s = m.find(id);
      if (!s.fused_gt_path) {
        missing.push_back(id + " (no fused_gt_path; run fuse)");
      } else if (!std::filesystem::exists(m.resolve(*s.fused_gt_path))) {
        missing.push_back(m.resolve(*s.fused_gt_path).string());
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "finetune: missing fused ground truth for:";
    for (const auto& x : missing) msg += " " + x;
    throw NotFoundError(msg);
  }
}

nn::LabelBatch labels_of(const std::vector<const FinetuneItem*>& items) {
  nn::LabelBatch lb;
  lb.n = static_cast<int>(items.size());
  lb.h = items.front()->gt.height();
  lb.w = items.front()->gt.width();
  for (const auto* it : items) lb.labels.insert(lb.labels.end(), it->gt.data.data(), it->gt.data.data() + it->gt.data.size());
  return lb;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, int batch_size, std::mt19937_64* rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (rng) std::shuffle(order.begin(), order.end(), *rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(batch_size)) {
    out.emplace_back(order.begin() + static_cast<long>(i),
                     order.begin() + static_cast<long>(std::min(n, i + static_cast<std::size_t>(batch_size))));
  }
  return out;
}

std::vector<nn::Vector<float>> snapshot(const nn::ModelGraph<float>& model) {
  std::vector<nn::Vector<float>> out;
  for (const auto& p : model.params()) out.push_back(p.value);
  return out;
}

void restore(nn::ModelGraph<float>& model, const std::vector<nn::Vector<float>>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) model.params()[i].value = values[i];
}

double pretrain_loss(nn::ModelGraph<float>& model, const std::vector<PretrainItem>& items, int batch_size) {
  double sum = 0.0;
  for (const auto& b : batches(items.size(), batch_size, nullptr)) {
    std::vector<const Tensor*> in;
    std::vector<const Tensor*> tg;
    for (auto i : b) {
      in.push_back(&items[i].input);
      tg.push_back(&items[i].target);
    }
    sum += nn::loss_mse(model.forward(stack(in)), stack(tg)).value * static_cast<double>(b.size());
  }
  model.clear_activations();
  return sum / static_cast<double>(items.size());
}

struct FinetuneEval {
  double loss = 0.0;
  double mean_jsi = 0.0;
};

FinetuneEval finetune_eval(nn::ModelGraph<float>& model, const std::vector<FinetuneItem>& items, int batch_size,
                           float pos_weight) {
  FinetuneEval ev;
  for (const auto& b : batches(items.size(), batch_size, nullptr)) {
    std::vector<const Tensor*> in;
    std::vector<const FinetuneItem*> its;
    for (auto i : b) {
      in.push_back(&items[i].input);
      its.push_back(&items[i]);
    }
    const Tensor& logits = model.forward(stack(in));
    ev.loss += nn::loss_softmax_ce(logits, labels_of(its), pos_weight).value * static_cast<double>(b.size());
    for (std::size_t k = 0; k < its.size(); ++k) {
      ev.mean_jsi += jsi(decode_wrinkle_logits(logits, static_cast<int>(k)).mask, its[k]->gt);
    }
  }
  model.clear_activations();
  ev.loss /= static_cast<double>(items.size());
  ev.mean_jsi /= static_cast<double>(items.size());
  return ev;
}

nn::CheckpointMeta make_meta(const TrainConfig& cfg, int best_epoch, const std::string& kind, std::size_t n_train) {
  nn::CheckpointMeta meta;
  meta.epoch = best_epoch;
  meta.seed = cfg.seed;
  meta.extra = {{"train_config", cfg.to_json()}, {"run", kind}, {"n_train", n_train}};
  return meta;
}

}  // namespace

TrainResult pretrain(nn::ModelGraph<float> model, const DatasetManifest& manifest, const Splits& splits,
                     const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (splits.train.empty()) throw ArgumentError("pretrain: empty train split");
  if (model.input_channels() != 3 || model.output_channels() != 1) {
    throw UsageError("pretrain needs a 3->1 model");
  }
  const auto train = load_pretrain_items(manifest, splits.train, cfg);
  const auto val = load_pretrain_items(manifest, splits.val, cfg);
  init_output_bias(model, train);
  auto state = nn::make_optim_state(model.params(), cfg.adam);
  std::mt19937_64 rng(derive_seed(cfg.seed, hash_string("pretrain-shuffle")));

  TrainResult result;
  result.train_ids = splits.train;
  double best = std::numeric_limits<double>::infinity();
  std::vector<nn::Vector<float>> best_params = snapshot(model);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (const auto& b : batches(train.size(), cfg.batch_size, &rng)) {
      std::vector<const Tensor*> in;
      std::vector<const Tensor*> tg;
      for (auto i : b) {
        in.push_back(&train[i].input);
        tg.push_back(&train[i].target);
      }
      model.zero_grad();
      const auto loss = nn::loss_mse(model.forward(stack(in)), stack(tg));
      model.backward(loss.grad);
      nn::adam_step(model.params(), state);
      sum += loss.value * static_cast<double>(b.size());
    }
    model.clear_activations();
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = sum / static_cast<double>(train.size());
    log.val_loss = val.empty() ? log.train_loss : pretrain_loss(model, val, cfg.batch_size);
    result.curve.push_back(log);
    if (log.val_loss < best) {
      best = log.val_loss;
      result.best_epoch = epoch;
      best_params = snapshot(model);
    }
    if (on_epoch && !on_epoch(log, model)) break;
  }
  restore(model, best_params);
  model.stage = nn::Stage::pretrain;
  result.model = std::move(model);
  result.meta = make_meta(cfg, result.best_epoch, "pretrain:" + to_string(cfg.pretext), train.size());
  return result;
}

TrainResult finetune(const nn::ModelGraph<float>* pretrained, const UNetConfig& arch, const DatasetManifest& manifest,
                     const Splits& splits, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (splits.train.empty()) throw ArgumentError("finetune: empty train split");
  const std::vector<std::string> train_ids = subset_fraction(splits.train, cfg.fraction, cfg.seed);
  require_fused_gt(manifest, {train_ids, splits.val});

  const UNetConfig target = UNetConfig::finetune(arch.base_width, arch.depth, cfg.seed);
  nn::ModelGraph<float> model = pretrained ? transfer_weights(*pretrained, target) : build_unet<float>(target);
  const auto train = load_finetune_items(manifest, train_ids, cfg.texture);
  const auto val = load_finetune_items(manifest, splits.val, cfg.texture);
  auto state = nn::make_optim_state(model.params(), cfg.adam);
  std::mt19937_64 rng(derive_seed(cfg.seed, hash_string("finetune-shuffle")));
  const auto pos_weight = static_cast<float>(cfg.pos_weight);

  TrainResult result;
  result.train_ids = train_ids;
  double best = -1.0;
  std::vector<nn::Vector<float>> best_params = snapshot(model);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (const auto& b : batches(train.size(), cfg.batch_size, &rng)) {
      std::vector<const Tensor*> in;
      std::vector<const FinetuneItem*> its;
      for (auto i : b) {
        in.push_back(&train[i].input);
        its.push_back(&train[i]);
      }
      model.zero_grad();
      const auto loss = nn::loss_softmax_ce(model.forward(stack(in)), labels_of(its), pos_weight);
      model.backward(loss.grad);
      nn::adam_step(model.params(), state);
      sum += loss.value * static_cast<double>(b.size());
    }
    model.clear_activations();
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = sum / static_cast<double>(train.size());
    if (val.empty()) {
      log.val_loss = log.train_loss;
      log.val_jsi = finetune_eval(model, train, cfg.batch_size, pos_weight).mean_jsi;
    } else {
      const FinetuneEval ev = finetune_eval(model, val, cfg.batch_size, pos_weight);
      log.val_loss = ev.loss;
      log.val_jsi = ev.mean_jsi;
    }
    result.curve.push_back(log);
    if (log.val_jsi > best) {
      best = log.val_jsi;
      result.best_epoch = epoch;
      best_params = snapshot(model);
    }
    if (on_epoch && !on_epoch(log, model)) break;
  }
  restore(model, best_params);
  model.stage = nn::Stage::finetune;
  result.model = std::move(model);
  result.meta = make_meta(cfg, result.best_epoch, pretrained ? "finetune:transfer" : "finetune:scratch", train.size());
  return result;
}

double mean_jsi_on(nn::ModelGraph<float>& model, const DatasetManifest& manifest, const std::vector<std::string>& ids,
                   const TextureConfig& texture) {
  if (ids.empty()) throw ArgumentError("mean_jsi_on: no ids");
  const auto items = load_finetune_items(manifest, ids, texture);
  return finetune_eval(model, items, 4, 1.0f).mean_jsi;
}

}  // namespace wseg::pipeline
