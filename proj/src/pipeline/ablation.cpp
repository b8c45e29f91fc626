#include "wseg/pipeline/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "wseg/error.hpp"
#include "wseg/nn/checkpoint.hpp"
#include "wseg/pipeline/evaluate.hpp"
#include "wseg/unet.hpp"

namespace wseg::pipeline {

std::vector<std::string> all_methods() {
  return {kNoPretraining, kOurs, "reconstruction", "deblur", "denoise", "super_resolution"};
}

PretrainTarget method_target(const std::string& method) {
  if (method == kOurs) return PretrainTarget::texture;
  if (method == kNoPretraining || method == "texture") throw ArgumentError("method '" + method + "' has no pretext");
  return pretrain_target_from_string(method);
}

std::vector<double> method_fractions(const std::string& method, const std::vector<double>& fractions) {
  if (method == kNoPretraining || method == kOurs) return fractions;
  return {1.0};
}

void AblationConfig::validate() const {
  if (methods.empty()) throw ArgumentError("ablation: no methods");
  for (const auto& m : methods) {
    if (m != kNoPretraining) method_target(m);
  }
  if (fractions.empty()) throw ArgumentError("ablation: no fractions");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ArgumentError("ablation: fraction outside (0, 1]");
  }
  if (seeds.empty()) throw ArgumentError("ablation: no seeds");
  if (jobs < 1) throw ArgumentError("ablation: jobs must be >= 1");
  UNetConfig::pretrain(base_width, depth).validate();
  pretrain.validate();
  finetune.validate();
}

nlohmann::json AblationConfig::to_json() const {
  return {{"methods", methods}, {"fractions", fractions}, {"seeds", seeds},         {"base_width", base_width},
          {"depth", depth},     {"pretrain", pretrain.to_json()}, {"finetune", finetune.to_json()}, {"jobs", jobs}};
}

AblationConfig AblationConfig::from_json(const nlohmann::json& j, AblationConfig c) {
  if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("fractions")) c.fractions = j["fractions"].get<std::vector<double>>();
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  c.base_width = j.value("base_width", c.base_width);
  c.depth = j.value("depth", c.depth);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("pretrain")) c.pretrain = TrainConfig::from_json(j["pretrain"], c.pretrain);
  if (j.contains("finetune")) c.finetune = TrainConfig::from_json(j["finetune"], c.finetune);
  c.validate();
  return c;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fraction_label(double f) { return fmt("%g", f); }

}  // namespace

std::string AblationTable::to_csv() const {
  std::string out = "method,fraction,seed,mean_jsi,pooled_jsi,n_params\n";
  for (const auto& r : rows) {
    out += r.method + "," + fraction_label(r.fraction) + "," + std::to_string(r.seed) + "," + fmt("%.6f", r.mean_jsi) +
           "," + fmt("%.6f", r.pooled_jsi) + "," + std::to_string(r.n_params) + "\n";
  }
  return out;
}

nlohmann::json AblationTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"method", r.method},
                  {"fraction", r.fraction},
                  {"seed", r.seed},
                  {"mean_jsi", r.mean_jsi},
                  {"pooled_jsi", r.pooled_jsi},
                  {"n_params", r.n_params}});
  }
  nlohmann::json sm = nlohmann::json::array();
  for (const auto& s : summary()) {
    sm.push_back({{"method", s.method}, {"fraction", s.fraction}, {"n", s.n}, {"mean", s.mean}, {"sd", s.sd}});
  }
  return {{"rows", rs},
          {"summary", sm},
          {"n_params_pretrain", n_params_pretrain},
          {"n_params_finetune", n_params_finetune},
          {"surgery_delta", surgery_delta},
          {"config", config}};
}

AblationTable AblationTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("ablation csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "method,fraction,seed,mean_jsi,pooled_jsi,n_params") {
    throw FormatError("ablation csv: unexpected header '" + line + "'");
  }
  AblationTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw FormatError("ablation csv line " + std::to_string(lineno) + ": expected 6 fields");
    try {
      AblationRow r;
      r.method = f[0];
      r.fraction = std::stod(f[1]);
      r.seed = std::stoull(f[2]);
      r.mean_jsi = std::stod(f[3]);
      r.pooled_jsi = std::stod(f[4]);
      r.n_params = std::stol(f[5]);
      t.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw FormatError("ablation csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return t;
}

std::vector<AblationSummary> AblationTable::summary() const {
  std::vector<AblationSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const AblationSummary& s) { return s.method == r.method && s.fraction == r.fraction; });
    if (it == out.end()) {
      out.push_back({r.method, r.fraction});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.mean_jsi);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    out[i].n = static_cast<int>(v.size());
    out[i].mean = m;
    out[i].sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return out;
}

std::string AblationTable::render_text() const {
  const auto sm = summary();
  std::vector<std::string> methods;
  std::vector<double> fractions;
  for (const auto& s : sm) {
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) methods.push_back(s.method);
    if (std::find(fractions.begin(), fractions.end(), s.fraction) == fractions.end()) fractions.push_back(s.fraction);
  }
  std::sort(fractions.begin(), fractions.end(), std::greater<>());
  std::size_t mw = 6;
  for (const auto& m : methods) mw = std::max(mw, m.size());
  const int cw = 17;
  std::string out = "method";
  out.append(mw - 6, ' ');
  for (double f : fractions) {
    const std::string h = fmt("%g%%", f * 100.0);
    out.append(static_cast<std::size_t>(cw) - std::min<std::size_t>(h.size(), cw), ' ');
    out += h;
  }
  out += "\n";
  for (const auto& m : methods) {
    out += m;
    out.append(mw - m.size(), ' ');
    for (double f : fractions) {
      std::string cell = "-";
      for (const auto& s : sm) {
        if (s.method == m && s.fraction == f) cell = fmt("%.4f", s.mean) + " +- " + fmt("%.4f", s.sd);
      }
      out.append(static_cast<std::size_t>(cw) - std::min<std::size_t>(cell.size(), cw), ' ');
      out += cell;
    }
    out += "\n";
  }
  if (n_params_finetune > 0) {
    out += "n_params: pretrain " + std::to_string(n_params_pretrain) + ", finetune " + std::to_string(n_params_finetune) +
           " (surgery +" + std::to_string(surgery_delta) + ")\n";
  }
  return out;
}

namespace {

struct Group {
  std::string method;
  std::uint64_t seed = 0;
};

std::vector<AblationRow> run_group(const Group& g, const DatasetManifest& manifest, const Splits& splits,
                                   const AblationConfig& cfg, const std::filesystem::path& out_dir,
                                   const AblationLog& log) {
  const std::filesystem::path dir = out_dir.empty() ? out_dir : out_dir / g.method / ("seed" + std::to_string(g.seed));
  if (!dir.empty()) std::filesystem::create_directories(dir);
  nn::ModelGraph<float> pretrained;
  const bool transfer = g.method != kNoPretraining;
  if (transfer) {
    TrainConfig pc = cfg.pretrain;
    pc.seed = g.seed;
    pc.pretext = method_target(g.method);
    if (log) log(g.method + " seed " + std::to_string(g.seed) + ": pretrain");
    TrainResult r = pretrain(build_unet<float>(UNetConfig::pretrain(cfg.base_width, cfg.depth, g.seed)), manifest,
                             splits, pc);
    if (!dir.empty()) nn::save_checkpoint(r.model, r.meta, dir / "pretrain.ckpt");
    pretrained = std::move(r.model);
  }
  std::vector<AblationRow> rows;
  const UNetConfig arch = UNetConfig::finetune(cfg.base_width, cfg.depth, g.seed);
  for (double f : method_fractions(g.method, cfg.fractions)) {
    TrainConfig fc = cfg.finetune;
    fc.seed = g.seed;
    fc.fraction = f;
    if (log) log(g.method + " seed " + std::to_string(g.seed) + ": finetune at " + fraction_label(f));
    TrainResult r = finetune(transfer ? &pretrained : nullptr, arch, manifest, splits, fc);
    const std::filesystem::path cell = dir.empty() ? dir : dir / ("f" + fraction_label(f));
    MetricsReport rep = evaluate(r.model, manifest, splits.test, fc.texture, cell);
    if (!cell.empty()) nn::save_checkpoint(r.model, r.meta, cell / "finetune.ckpt");
    rows.push_back({g.method, f, g.seed, rep.mean_jsi, rep.pooled_jsi, static_cast<long>(r.model.count_params())});
  }
  return rows;
}

}  // namespace

AblationTable run_ablation(const DatasetManifest& manifest, const Splits& splits, const AblationConfig& cfg,
                           const std::filesystem::path& out_dir, const AblationLog& log) {
  cfg.validate();
  std::vector<Group> groups;
  for (const auto& m : cfg.methods)
    for (auto s : cfg.seeds) groups.push_back({m, s});

  std::vector<std::vector<AblationRow>> results(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  const AblationLog safe_log = log ? AblationLog([&](const std::string& s) {
    std::lock_guard<std::mutex> lk(log_mu);
    log(s);
  })
                                   : AblationLog{};
  auto worker = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++) {
      try {
        results[i] = run_group(groups[i], manifest, splits, cfg, out_dir, safe_log);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(groups.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AblationTable table;
  // Canonical order: method, then fraction as configured, then seed.
  for (const auto& m : cfg.methods) {
    for (double f : method_fractions(m, cfg.fractions)) {
      for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].method != m) continue;
        for (const auto& r : results[i]) {
          if (r.fraction == f) table.rows.push_back(r);
        }
      }
    }
  }
  const UNetConfig pc = UNetConfig::pretrain(cfg.base_width, cfg.depth);
  const UNetConfig fc = UNetConfig::finetune(cfg.base_width, cfg.depth);
  table.n_params_pretrain = static_cast<long>(build_unet<float>(pc).count_params());
  table.n_params_finetune = static_cast<long>(build_unet<float>(fc).count_params());
  table.surgery_delta = transfer_param_delta(pc, fc);
  table.config = cfg.to_json();
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "ablation.csv", std::ios::binary) << table.to_csv();
    std::ofstream(out_dir / "ablation.json", std::ios::binary) << table.to_json().dump(2) << "\n";
  }
  return table;
}

}  // namespace wseg::pipeline
