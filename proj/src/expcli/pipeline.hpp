#ifndef VLNLAB_EXPCLI_PIPELINE_HPP
#define VLNLAB_EXPCLI_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evalmetrics/metrics.hpp"
#include "expcli/config.hpp"
#include "navagent/train.hpp"
#include "worldsim/world_json.hpp"

namespace vlnlab::cli {

inline constexpr const char* kToolVersion = "0.3.0";

// Artifact layout under the configured output directory.
struct Artifacts {
  std::string root;
  explicit Artifacts(const std::string& out_dir) : root(out_dir) {}
  std::string world_path(const std::string& split, int index) const;
  std::string dataset_path() const { return root + "/syfis/train.jsonl"; }
  std::string dataset_stats_path() const { return root + "/syfis/stats.json"; }
  std::string translator_ckpt_path() const {
    return root + "/checkpoints/translator.ckpt";
  }
  std::string pretrain_metrics_path() const {
    return root + "/checkpoints/pretrain_metrics.json";
  }
  std::string agent_ckpt_path() const {
    return root + "/checkpoints/agent.ckpt";
  }
  std::string episodes_path(const std::string& split) const {
    return root + "/episodes/" + split + ".jsonl";
  }
  std::string metrics_csv_path(const std::string& split) const {
    return root + "/reports/metrics_" + split + ".csv";
  }
  std::string eval_summary_path() const {
    return root + "/reports/eval_summary.json";
  }
  std::string overlap_path() const { return root + "/reports/overlap.json"; }
  std::string report_path() const { return root + "/reports/summary.txt"; }
  std::string manifest_path(const std::string& verb) const {
    return root + "/manifests/manifest_" + verb + ".json";
  }
};

// The non-learned machinery every verb needs, derived from the config.
struct Toolkit {
  landmark::LabelVocabulary labels;
  landmark::BagOfObjectsDetector detector;
  syfis::MotionDictionary dictionary;
  syfis::Tokenizer tokenizer;
  syfis::SyfisConfig record_config;

  static Toolkit from_config(const RunConfig& config);
};

std::uint64_t world_seed(const RunConfig& config, const std::string& split,
                         int index);
world::WorldGenParams worldgen_params(const RunConfig& config);

trans::TranslatorConfig translator_config(const RunConfig& config,
                                          const Toolkit& toolkit);
agent::AgentConfig agent_config(const RunConfig& config,
                                const Toolkit& toolkit);
num::AdamConfig adam_config(const RunConfig& config);
agent::TrainConfig agent_train_config(const RunConfig& config);

// Deterministic holdout rule shared by pretraining and its evaluation.
bool is_heldout_record(const syfis::SyfisRecord& rec, double fraction);

// Rebuilds the candidate-feature matrix a record's step saw. Records whose
// arrival heading is not recoverable from the grouped trajectory (previous
// step skipped) yield nullopt and are left out of pretraining.
std::optional<num::Tensor> record_candidate_features(
    const world::EnvironmentGraph& g,
    const std::vector<syfis::SyfisRecord>& trajectory_records,
    std::size_t position);

struct PretrainData {
  std::vector<trans::PretrainExample> train;
  std::vector<trans::PretrainExample> heldout;
  std::vector<std::size_t> heldout_with_hard;  // indices with a hard negative
  std::vector<std::vector<int>> heldout_hard_negative;
};
PretrainData build_pretrain_examples(
    const std::vector<syfis::SyfisRecord>& records,
    const std::map<std::string, const world::EnvironmentGraph*>& worlds,
    double heldout_fraction);

// ---- verbs -------------------------------------------------------------

void cmd_gen_worlds(const RunConfig& config);

syfis::DatasetStats cmd_gen_syfis(const RunConfig& config);

struct PretrainReport {
  double initial_total = 0.0, final_total = 0.0;
  double final_sig = 0.0, final_dsl = 0.0;
  double heldout_token_accuracy = 0.0;
  double heldout_mean_d_positive = 0.0;
  double heldout_mean_d_hard = 0.0;
  long heldout_examples = 0;
  long steps = 0;
};
PretrainReport cmd_pretrain_translator(const RunConfig& config);

void cmd_train_agent(const RunConfig& config);

struct SplitEvalSummary {
  metrics::Aggregate agg;
  double split_mask_f1 = -1.0;  // -1 when the translator is ablated
};
std::map<std::string, SplitEvalSummary> cmd_evaluate(const RunConfig& config);

std::string cmd_translate(const RunConfig& config,
                          const std::string& record_id);

void cmd_report(const RunConfig& config);

// Measures translator geometry/decoding quality on held-out examples.
struct HeldoutQuality {
  double token_accuracy = 0.0;
  double mean_d_positive = 0.0;
  double mean_d_hard = 0.0;
  long examples = 0;
  long hard_examples = 0;
};
HeldoutQuality heldout_quality(num::ParameterStore& store,
                               const trans::TranslatorModel& model,
                               const PretrainData& data);

}  // namespace vlnlab::cli

#endif  // VLNLAB_EXPCLI_PIPELINE_HPP
