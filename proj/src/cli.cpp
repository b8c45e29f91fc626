#include "wseg/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>

#include <json.hpp>

#include "wseg/config.hpp"
#include "wseg/error.hpp"
#include "wseg/nn/checkpoint.hpp"
#include "wseg/nn/gradcheck.hpp"
#include "wseg/pipeline/ablation.hpp"
#include "wseg/pipeline/dataset_ops.hpp"
#include "wseg/pipeline/evaluate.hpp"
#include "wseg/pipeline/splits.hpp"
#include "wseg/pipeline/synth.hpp"
#include "wseg/pipeline/train.hpp"
#include "wseg/unet.hpp"

namespace wseg {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace pipeline;

struct Setting {
  std::string key;
  CLI::Option* option = nullptr;
  std::function<json()> value;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  json sources;
};

struct Command {
  CLI::App* app = nullptr;
  json defaults = json::object();
  std::vector<Setting> settings;
  std::function<void(const json&, Context&)> run;

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& key, T def, const std::string& help) {
    auto var = std::make_shared<T>(def);
    CLI::Option* o = app->add_option(flag, *var, help)->capture_default_str();
    defaults[key] = def;
    settings.push_back({key, o, [var] { return json(*var); }});
    return o;
  }
};

class UsageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << j.dump(2) << "\n";
  if (!f) throw IoError("cannot write " + path.string());
}

fs::path out_dir_or(const json& cfg, const fs::path& fallback) {
  const std::string d = cfg["out_dir"].get<std::string>();
  return d.empty() ? fallback : fs::path(d);
}

void echo_config(const fs::path& dir, const std::string& name, const json& cfg, const Context& ctx) {
  json c = cfg;
  c.erase("config");
  write_json(dir / (name + ".config.json"), {{"command", name}, {"config", c}, {"sources", ctx.sources}});
}

TextureConfig texture_of(const json& cfg) {
  TextureConfig t;
  t.sigma = cfg["sigma"].get<double>();
  t.scale = cfg["scale"].get<double>();
  const double thr = cfg.value("threshold", 0.0);
  if (thr > 0.0) t.binarize_threshold = thr;
  t.validate();
  return t;
}

TrainConfig train_of(const json& cfg, TrainConfig t) {
  t.epochs = cfg["epochs"].get<int>();
  t.batch_size = cfg["batch_size"].get<int>();
  t.adam.lr = cfg["lr"].get<double>();
  if (cfg.contains("pos_weight")) t.pos_weight = cfg["pos_weight"].get<double>();
  if (cfg.contains("fraction")) t.fraction = cfg["fraction"].get<double>();
  if (cfg.contains("pretext")) t.pretext = pretrain_target_from_string(cfg["pretext"].get<std::string>());
  t.seed = cfg["seed"].get<std::uint64_t>();
  t.deterministic = cfg["deterministic"].get<bool>();
  t.texture = texture_of(cfg);
  t.validate();
  return t;
}

Splits splits_for(const json& cfg, const DatasetManifest& m) {
  const std::string path = cfg["splits"].get<std::string>();
  if (!path.empty()) return Splits::load(path);
  return split_dataset(m, {}, m.seed);
}

EpochCallback epoch_logger(std::ostream& err, int total) {
  return [&err, total](const EpochLog& e, nn::ModelGraph<float>&) {
    err << "epoch " << e.epoch << "/" << total << " train " << fmt("%.5f", e.train_loss) << " val "
        << fmt("%.5f", e.val_loss);
    if (e.val_jsi >= 0.0) err << " val_jsi " << fmt("%.4f", e.val_jsi);
    err << "\n";
    return true;
  };
}

void add_texture_flags(Command& c) {
  const TextureConfig d;
  c.add<double>("--sigma", "sigma", d.sigma, "Gaussian sigma of the texture filter");
  c.add<double>("--scale", "scale", d.scale, "texture magnitude mapped to 1.0");
}

void add_train_flags(Command& c, const TrainConfig& d) {
  c.add<int>("--epochs", "epochs", d.epochs, "training epochs");
  c.add<int>("--batch-size", "batch_size", d.batch_size, "images per step");
  c.add<double>("--lr", "lr", d.adam.lr, "Adam learning rate");
  c.add<int>("--base-width", "base_width", 16, "channels at the first U-Net level");
  c.add<int>("--depth", "depth", 3, "number of pooling levels");
  add_texture_flags(c);
}

void run_synth(const json& cfg, Context& ctx) {
  SynthConfig sc;
  sc.count = cfg["count"].get<int>();
  sc.size = cfg["size"].get<int>();
  sc.n_annotators = cfg["annotators"].get<int>();
  sc.seed = cfg["seed"].get<std::uint64_t>();
  sc.min_wrinkles = cfg["min_wrinkles"].get<int>();
  sc.max_wrinkles = cfg["max_wrinkles"].get<int>();
  sc.annotator_noise.drop_prob = cfg["drop_prob"].get<double>();
  sc.annotator_noise.jitter = cfg["jitter"].get<int>();
  sc.annotator_noise.morph_radius = cfg["morph_radius"].get<int>();
  sc.validate();
  const fs::path dir = out_dir_or(cfg, "data");
  const DatasetManifest m = synth_dataset(sc, dir);
  echo_config(dir, "synth", cfg, ctx);
  ctx.out << "wrote " << m.samples.size() << " samples to " << (dir / "manifest.json").string() << "\n";
}

void run_weaklabel(const json& cfg, Context& ctx) {
  const fs::path mpath = cfg["manifest"].get<std::string>();
  DatasetManifest m = DatasetManifest::load(mpath);
  weaklabel_manifest(m, texture_of(cfg));
  m.save(mpath);
  echo_config(out_dir_or(cfg, m.root), "weaklabel", cfg, ctx);
  ctx.out << "weak labels written for " << m.samples.size() << " samples\n";
}

void run_fuse(const json& cfg, Context& ctx) {
  const fs::path mpath = cfg["manifest"].get<std::string>();
  DatasetManifest m = DatasetManifest::load(mpath);
  const json agreement = fuse_manifest(m, cfg["k"].get<int>());
  m.save(mpath);
  const fs::path dir = out_dir_or(cfg, m.root);
  write_json(dir / "agreement.json", agreement);
  echo_config(dir, "fuse", cfg, ctx);
  ctx.out << "fused " << m.samples.size() << " samples, mean pairwise annotator JSI "
          << fmt("%.4f", agreement.value("mean_offdiag", 0.0)) << "\n";
}

void run_pretrain(const json& cfg, Context& ctx) {
  const DatasetManifest m = DatasetManifest::load(cfg["manifest"].get<std::string>());
  const Splits splits = splits_for(cfg, m);
  const TrainConfig tc = train_of(cfg, TrainConfig::pretrain_defaults());
  const fs::path dir = out_dir_or(cfg, "runs/pretrain");
  fs::create_directories(dir);
  splits.save(dir / "splits.json");
  const UNetConfig arch = UNetConfig::pretrain(cfg["base_width"].get<int>(), cfg["depth"].get<int>(), tc.seed);
  TrainResult r = pretrain(build_unet<float>(arch), m, splits, tc, epoch_logger(ctx.err, tc.epochs));
  nn::save_checkpoint(r.model, r.meta, dir / "pretrain.ckpt");
  write_json(dir / "pretrain.curve.json", r.curve_json());
  echo_config(dir, "pretrain", cfg, ctx);
  ctx.out << "best epoch " << r.best_epoch << ", checkpoint " << (dir / "pretrain.ckpt").string() << " ("
          << nn::checkpoint_id(r.model, r.meta) << ")\n";
}

void run_finetune(const json& cfg, Context& ctx) {
  const DatasetManifest m = DatasetManifest::load(cfg["manifest"].get<std::string>());
  const Splits splits = splits_for(cfg, m);
  const TrainConfig tc = train_of(cfg, TrainConfig::finetune_defaults());
  const fs::path dir = out_dir_or(cfg, "runs/finetune");
  fs::create_directories(dir);
  splits.save(dir / "splits.json");
  UNetConfig arch = UNetConfig::finetune(cfg["base_width"].get<int>(), cfg["depth"].get<int>(), tc.seed);
  std::optional<nn::Checkpoint> ckpt;
  const std::string cpath = cfg["checkpoint"].get<std::string>();
  if (!cpath.empty()) {
    ckpt = nn::load_checkpoint(cpath);
    if (ckpt->model.stage != nn::Stage::pretrain) {
      throw UsageError("finetune --checkpoint expects a pretrain-stage checkpoint, got '" +
                       nn::to_string(ckpt->model.stage) + "'");
    }
    const UNetConfig src = unet_config_of(ckpt->model);
    arch.base_width = src.base_width;
    arch.depth = src.depth;
  }
  TrainResult r = finetune(ckpt ? &ckpt->model : nullptr, arch, m, splits, tc, epoch_logger(ctx.err, tc.epochs));
  nn::save_checkpoint(r.model, r.meta, dir / "finetune.ckpt");
  write_json(dir / "finetune.curve.json", r.curve_json());
  MetricsReport rep = evaluate(r.model, m, splits.test, tc.texture);
  rep.checkpoint_id = nn::checkpoint_id(r.model, r.meta);
  rep.config["train_config"] = tc.to_json();
  rep.config["split"] = "test";
  rep.save(dir / "test");
  echo_config(dir, "finetune", cfg, ctx);
  ctx.out << "trained on " << r.train_ids.size() << " images, best epoch " << r.best_epoch << "; test mean JSI "
          << fmt("%.4f", rep.mean_jsi) << ", pooled " << fmt("%.4f", rep.pooled_jsi) << "\n";
}

void run_evaluate(const json& cfg, Context& ctx) {
  nn::Checkpoint ckpt = nn::load_checkpoint(cfg["checkpoint"].get<std::string>());
  if (ckpt.model.stage != nn::Stage::finetune) {
    throw UsageError("evaluate needs a finetune-stage checkpoint; this one is stage '" +
                     nn::to_string(ckpt.model.stage) + "'");
  }
  const DatasetManifest m = DatasetManifest::load(cfg["manifest"].get<std::string>());
  const Splits splits = splits_for(cfg, m);
  const std::string which = cfg["split"].get<std::string>();
  const std::vector<std::string> ids = which == "train" ? splits.train
                                       : which == "val" ? splits.val
                                       : which == "test" ? splits.test
                                                         : m.ids();
  // The texture settings the model was trained with, unless overridden.
  TextureConfig texture = texture_of(cfg);
  const json tj = ckpt.meta.extra.value("/train_config/texture"_json_pointer, json());
  if (!tj.is_null() && ctx.sources["sigma"] == "default" && ctx.sources["scale"] == "default") {
    texture = TextureConfig::from_json(tj);
  }
  const fs::path dir = out_dir_or(cfg, "runs/eval");
  MetricsReport rep = evaluate(ckpt.model, m, ids, texture, dir);
  rep.checkpoint_id = nn::checkpoint_id(ckpt.model, ckpt.meta);
  rep.config["split"] = which;
  rep.save(dir);
  echo_config(dir, "evaluate", cfg, ctx);
  ctx.out << which << ": " << ids.size() << " images, mean JSI " << fmt("%.4f", rep.mean_jsi) << ", pooled "
          << fmt("%.4f", rep.pooled_jsi) << (rep.empty_convention_used ? " (empty-vs-empty scored 1.0)" : "") << "\n";
}

void run_ablate(const json& cfg, Context& ctx) {
  const DatasetManifest m = DatasetManifest::load(cfg["manifest"].get<std::string>());
  const Splits splits = splits_for(cfg, m);
  AblationConfig ac;
  ac.methods = cfg["methods"].get<std::vector<std::string>>();
  ac.fractions = cfg["fractions"].get<std::vector<double>>();
  ac.seeds = cfg["seeds"].get<std::vector<std::uint64_t>>();
  ac.base_width = cfg["base_width"].get<int>();
  ac.depth = cfg["depth"].get<int>();
  ac.jobs = cfg["jobs"].get<int>();
  json pc = cfg;
  pc["epochs"] = cfg["pretrain_epochs"];
  ac.pretrain = train_of(pc, TrainConfig::pretrain_defaults());
  json fc = cfg;
  fc["epochs"] = cfg["finetune_epochs"];
  ac.finetune = train_of(fc, TrainConfig::finetune_defaults());
  const fs::path dir = out_dir_or(cfg, "runs/ablation");
  fs::create_directories(dir);
  splits.save(dir / "splits.json");
  echo_config(dir, "ablate", cfg, ctx);
  const AblationTable t = run_ablation(m, splits, ac, dir, [&ctx](const std::string& s) { ctx.err << s << "\n"; });
  ctx.out << t.render_text();
}

void run_gradcheck(const json& cfg, Context& ctx) {
  nn::GradcheckOptions o;
  o.seeds = cfg["seeds"].get<int>();
  o.eps = cfg["eps"].get<double>();
  o.tolerance = cfg["tolerance"].get<double>();
  o.samples_per_tensor = cfg["samples"].get<int>();
  const auto results = nn::run_gradcheck_suite(o);
  json arr = json::array();
  bool ok = true;
  for (const auto& r : results) {
    ctx.out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_rel " << fmt("%.3e", r.max_rel_error) << " checked "
            << r.checked << " skipped " << r.skipped << "\n";
    arr.push_back(r.to_json());
    ok = ok && r.passed;
  }
  const std::string d = cfg["out_dir"].get<std::string>();
  if (!d.empty()) {
    write_json(fs::path(d) / "gradcheck.json", arr);
    echo_config(d, "gradcheck", cfg, ctx);
  }
  if (!ok) throw Error("gradient check failed");
}

void run_report(const json& cfg, Context& ctx) {
  const std::string path = cfg["csv"].get<std::string>();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string rendered = AblationTable::from_csv(text).render_text();
  ctx.out << rendered;
  const std::string d = cfg["out_dir"].get<std::string>();
  if (!d.empty()) {
    fs::create_directories(d);
    std::ofstream(fs::path(d) / "report.txt", std::ios::binary) << rendered;
    echo_config(d, "report", cfg, ctx);
  }
}

json flat_sources(const json& cfg, const std::string& src) {
  json s = json::object();
  for (auto it = cfg.begin(); it != cfg.end(); ++it) s[it.key()] = src;
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wrinkle segmentation pipeline: synthetic data, weak labels, label fusion, U-Net training", "wseg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Seed priority: --seed, then the config file, then $WSEG_SEED, then 0.\n"
             "Config files (.toml or .json) hold flat keys named like the long flags with '_' for '-';\n"
             "a table named after the subcommand overrides top-level keys. Exit codes: 0 ok, 1 usage, 2 runtime.");

  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string config_path;
  std::string out_dir;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "master seed")->capture_default_str();
  CLI::Option* det_opt =
      app.add_flag("--deterministic", deterministic, "require byte-reproducible outputs")->capture_default_str();
  app.add_option("--config", config_path, "TOML or JSON config file");
  CLI::Option* out_opt = app.add_option("--out-dir", out_dir, "output directory");

  std::map<std::string, Command> commands;
  auto make = [&](const std::string& name, const std::string& desc, auto run) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, desc);
    c.run = run;
    return c;
  };

  {
    const SynthConfig d;
    Command& c = make("synth", "generate a synthetic face/wrinkle dataset", run_synth);
    c.add<int>("--count", "count", d.count, "number of images");
    c.add<int>("--size", "size", d.size, "image side in pixels (power of two >= 32)");
    c.add<int>("--annotators", "annotators", d.n_annotators, "simulated annotators per image");
    c.add<int>("--min-wrinkles", "min_wrinkles", d.min_wrinkles, "fewest strokes per face");
    c.add<int>("--max-wrinkles", "max_wrinkles", d.max_wrinkles, "most strokes per face");
    c.add<double>("--drop-prob", "drop_prob", d.annotator_noise.drop_prob, "chance an annotator misses a stroke");
    c.add<int>("--jitter", "jitter", d.annotator_noise.jitter, "annotator translation range in pixels");
    c.add<int>("--morph-radius", "morph_radius", d.annotator_noise.morph_radius, "annotator dilate/erode radius");
  }
  {
    Command& c = make("weaklabel", "write texture weak labels for every sample of a manifest", run_weaklabel);
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest (updated in place)");
    add_texture_flags(c);
    c.add<double>("--threshold", "threshold", 0.0, "also write a binary label at this level; 0 disables");
  }
  {
    Command& c = make("fuse", "majority-vote annotator masks into fused ground truth", run_fuse);
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest (updated in place)");
    c.add<int>("--k", "k", 2, "votes needed for a wrinkle pixel");
  }
  {
    const TrainConfig d = TrainConfig::pretrain_defaults();
    Command& c = make("pretrain", "train the 3->1 model on weak labels or a pretext target", run_pretrain);
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest");
    c.add<std::string>("--splits", "splits", "", "splits JSON; default splits the manifest with its own seed");
    add_train_flags(c, d);
    c.add<std::string>("--pretext", "pretext", to_string(d.pretext), "pretraining target")
        ->check(CLI::IsMember({"texture", "reconstruction", "deblur", "denoise", "super_resolution"}));
  }
  {
    const TrainConfig d = TrainConfig::finetune_defaults();
    Command& c = make("finetune", "train the 4->2 wrinkle model, then score it on the test split", run_finetune);
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest");
    c.add<std::string>("--splits", "splits", "", "splits JSON; default splits the manifest with its own seed");
    c.add<std::string>("--checkpoint", "checkpoint", "", "pretrain checkpoint to transfer; empty trains from scratch");
    add_train_flags(c, d);
    c.add<double>("--fraction", "fraction", d.fraction, "share of the train split used");
    c.add<double>("--pos-weight", "pos_weight", d.pos_weight, "loss weight of wrinkle pixels");
  }
  {
    Command& c = make("evaluate", "score a finetune checkpoint and write metrics and overlays", run_evaluate);
    c.add<std::string>("--checkpoint", "checkpoint", "", "finetune checkpoint");
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest");
    c.add<std::string>("--splits", "splits", "", "splits JSON; default splits the manifest with its own seed");
    c.add<std::string>("--split", "split", "test", "which ids to score")
        ->check(CLI::IsMember({"train", "val", "test", "all"}));
    add_texture_flags(c);
  }
  {
    const AblationConfig d;
    Command& c = make("ablate", "run the pretraining-method x data-fraction grid", run_ablate);
    c.add<std::string>("--manifest", "manifest", "", "dataset manifest");
    c.add<std::string>("--splits", "splits", "", "splits JSON; default splits the manifest with its own seed");
    c.add<std::vector<std::string>>("--methods", "methods", d.methods, "methods to run")->delimiter(',');
    c.add<std::vector<double>>("--fractions", "fractions", d.fractions, "finetune data fractions")->delimiter(',');
    c.add<std::vector<std::uint64_t>>("--seeds", "seeds", d.seeds, "repetition seeds")->delimiter(',');
    c.add<int>("--pretrain-epochs", "pretrain_epochs", d.pretrain.epochs, "pretraining epochs");
    c.add<int>("--finetune-epochs", "finetune_epochs", d.finetune.epochs, "finetuning epochs");
    c.add<int>("--batch-size", "batch_size", d.finetune.batch_size, "images per step");
    c.add<double>("--lr", "lr", d.finetune.adam.lr, "Adam learning rate");
    c.add<double>("--pos-weight", "pos_weight", d.finetune.pos_weight, "loss weight of wrinkle pixels");
    c.add<int>("--base-width", "base_width", d.base_width, "channels at the first U-Net level");
    c.add<int>("--depth", "depth", d.depth, "number of pooling levels");
    add_texture_flags(c);
    c.add<int>("--jobs", "jobs", d.jobs, "grid cells trained in parallel");
  }
  {
    const nn::GradcheckOptions d;
    Command& c = make("gradcheck", "finite-difference check of every op and both U-Net stages", run_gradcheck);
    c.add<int>("--seeds", "seeds", d.seeds, "random seeds per case");
    c.add<double>("--eps", "eps", d.eps, "central difference step");
    c.add<double>("--tolerance", "tolerance", d.tolerance, "max relative error");
    c.add<int>("--samples", "samples", d.samples_per_tensor, "coordinates probed per tensor and seed");
  }
  {
    Command& c = make("report", "render an ablation CSV as a text table", run_report);
    c.add<std::string>("--csv", "csv", "", "ablation.csv")->required();
  }
  for (auto& [name, c] : commands) {
    if (c.defaults.contains("manifest")) {
      for (auto& s : c.settings) {
        if (s.key == "manifest") s.option->required();
      }
    }
    if (name == "evaluate") {
      for (auto& s : c.settings) {
        if (s.key == "checkpoint") s.option->required();
      }
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Command& cmd = commands.at(name);
  Context ctx{out, err, json::object()};
  try {
    json cfg = cmd.defaults;
    cfg["seed"] = std::uint64_t{0};
    cfg["deterministic"] = false;
    cfg["out_dir"] = "";
    ctx.sources = flat_sources(cfg, "default");

    if (const char* env = std::getenv("WSEG_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        cfg["seed"] = static_cast<std::uint64_t>(std::stoull(env, &used));
        if (env[used] != '\0') throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw UsageFailure(std::string("WSEG_SEED is not an unsigned integer: '") + env + "'");
      }
      ctx.sources["seed"] = "env";
    }

    if (!config_path.empty()) {
      json file;
      try {
        file = load_config_file(config_path);
      } catch (const Error& e) {
        throw UsageFailure(e.what());
      }
      if (!file.is_object()) throw UsageFailure("config file must hold a table of settings");
      auto apply = [&](const json& layer) {
        for (auto it = layer.begin(); it != layer.end(); ++it) {
          if (it.value().is_object() && commands.count(it.key())) continue;
          if (!cfg.contains(it.key())) {
            throw UsageFailure("config file: unknown key '" + it.key() + "' for '" + name + "'");
          }
          if (cfg[it.key()].is_number() && !it.value().is_number()) {
            throw UsageFailure("config file: '" + it.key() + "' must be a number");
          }
          cfg[it.key()] = it.value();
          ctx.sources[it.key()] = "config";
        }
      };
      apply(file);
      if (file.contains(name)) apply(file[name]);
    }

    for (const auto& s : cmd.settings) {
      if (s.option->count() > 0) {
        cfg[s.key] = s.value();
        ctx.sources[s.key] = "flag";
      }
    }
    if (seed_opt->count() > 0) {
      cfg["seed"] = seed;
      ctx.sources["seed"] = "flag";
    }
    if (det_opt->count() > 0) {
      cfg["deterministic"] = deterministic;
      ctx.sources["deterministic"] = "flag";
    }
    if (out_opt->count() > 0) {
      cfg["out_dir"] = out_dir;
      ctx.sources["out_dir"] = "flag";
    }
    cmd.run(cfg, ctx);
  } catch (const UsageFailure& e) {
    err << "wseg " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "wseg " << name << ": bad setting: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "wseg " << name << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace wseg
