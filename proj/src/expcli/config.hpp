#ifndef VLNLAB_EXPCLI_CONFIG_HPP
#define VLNLAB_EXPCLI_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "common/errors.hpp"

namespace vlnlab::cli {

// Effective experiment configuration. JSON sections mirror the struct
// nesting; unknown keys are rejected, flag overrides win over file values.
struct RunConfig {
  struct WorldGen {
    int node_count = 36;
    int label_count = 32;
    double spacing = 1.0;
    double xy_jitter = 0.25;
    double z_jitter = 0.35;
    double extra_edge_prob = 0.18;
    double zipf_exponent = 0.7;
    double mean_objects_per_view = 2.0;
    int seen_worlds = 4;
    int unseen_worlds = 4;
  } worldgen;

  struct Detector {
    int k = 5;
    double tau1 = 0.1;
    double noise_sigma = 0.05;
  } detector;

  struct Syfis {
    std::string dictionary_path;  // empty -> builtin
    int trajectories = 2000;      // total across the seen worlds
    int path_len_min = 5;
    int path_len_max = 7;
    int l_max = 8;
    double heading_threshold = 30.0;
    double heldout_fraction = 0.1;
  } syfis;

  struct Model {
    int embed_dim = 32;
    int hidden = 32;
    int mlp_hidden = 128;
  } model;

  struct Optimizer {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double clip_norm = 5.0;  // 0 disables gradient clipping
  } optimizer;

  struct Loss {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double beta1 = 1.0;
    double beta2 = 1.0;
    double beta3 = 0.1;
    double lambda = 0.2;
    double margin = 0.5;
    bool dsl_literal_generated = false;
    bool ss_positive_term_only = false;
  } loss;

  struct Rollout {
    int max_steps = 15;
    double success_radius = 1.0;
    double gamma = 0.9;
  } rollout;

  struct Training {
    int pretrain_steps = 1000;
    int pretrain_batch = 96;
    double pretrain_lr = 0.03;  // peak rate for the translator phase
    bool pretrain_lr_decay = true;  // linear decay to 10% over the run
    int agent_steps = 1600;
    int agent_batch = 2;
    int eval_episodes = 50;
  } training;

  struct Ablation {
    bool no_translator = false;
    bool no_sig = false;
    bool no_dsl = false;
    bool no_ss = false;
  } ablation;

  std::uint64_t seed = 7;
  std::string output_dir = "out";

  void validate() const;
};

// Loads defaults, applies the JSON file when non-empty, then applies
// "section.key=value" overrides.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

// Canonical serialization (sorted keys, full precision); two configs hash
// equal iff every effective value matches.
std::string canonical_json(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

}  // namespace vlnlab::cli

#endif  // VLNLAB_EXPCLI_CONFIG_HPP
