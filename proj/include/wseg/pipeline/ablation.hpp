#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wseg/pipeline/manifest.hpp"
#include "wseg/pipeline/splits.hpp"
#include "wseg/pipeline/train.hpp"

namespace wseg::pipeline {

// Method labels used in ablation tables.
inline constexpr const char* kNoPretraining = "no_pretraining";
inline constexpr const char* kOurs = "ours";

// The six methods in table order: no_pretraining, ours, then the pretext baselines.
std::vector<std::string> all_methods();
// Pretext kind behind a pretrained method label; throws ArgumentError for no_pretraining or unknown labels.
PretrainTarget method_target(const std::string& method);

struct AblationConfig {
  std::vector<std::string> methods = all_methods();
  std::vector<double> fractions = {1.0, 0.5, 0.25, 0.05};
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int base_width = 16;
  int depth = 3;
  TrainConfig pretrain = TrainConfig::pretrain_defaults();
  TrainConfig finetune = TrainConfig::finetune_defaults();
  int jobs = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static AblationConfig from_json(const nlohmann::json& j, AblationConfig defaults);
};

struct AblationRow {
  std::string method;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double mean_jsi = 0.0;
  double pooled_jsi = 0.0;
  long n_params = 0;
};

struct AblationSummary {
  std::string method;
  double fraction = 1.0;
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 when n == 1
};

struct AblationTable {
  std::vector<AblationRow> rows;
  long n_params_pretrain = 0;
  long n_params_finetune = 0;
  long surgery_delta = 0;
  nlohmann::json config = nlohmann::json::object();

  // method,fraction,seed,mean_jsi,pooled_jsi,n_params
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static AblationTable from_csv(const std::string& text);

  // Mean +- sd of mean_jsi over seeds, per (method, fraction), in row order of first appearance.
  std::vector<AblationSummary> summary() const;
  // Methods as rows, fractions as columns, "mean +- sd" cells.
  std::string render_text() const;
};

// Fraction cells a method runs at: every requested fraction for
// no_pretraining and ours, 1.0 only for the pretext baselines.
std::vector<double> method_fractions(const std::string& method, const std::vector<double>& fractions);

using AblationLog = std::function<void(const std::string&)>;

// Trains and evaluates the grid on splits.test. Pretraining uses the whole train
// split; finetuning uses subset_fraction of it with the row's seed. Cells are
// grouped per (method, seed) and those groups run on up to cfg.jobs threads.
// When out_dir is non-empty each group writes into out_dir/<method>/seed<k>/.
AblationTable run_ablation(const DatasetManifest& manifest, const Splits& splits, const AblationConfig& cfg,
                           const std::filesystem::path& out_dir = {}, const AblationLog& log = {});

}  // namespace wseg::pipeline
