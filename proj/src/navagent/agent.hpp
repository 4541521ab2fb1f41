#ifndef VLNLAB_NAVAGENT_AGENT_HPP
#define VLNLAB_NAVAGENT_AGENT_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syfis/dataset.hpp"
#include "translator/translator.hpp"

namespace vlnlab::agent {

using num::Tape;
using num::Tensor;
using num::Var;

struct AgentConfig {
  int vocab = 0;
  int cand_dim = 0;
  int dim = 32;  // text/state width; must equal the translator hidden width
};

// Single-cross-attention analog of the recurrent VLN backbone: text tokens
// attend into the fused [state; candidates] stack, actions are scored by
// state-candidate agreement, and the state is updated recurrently.
// Parameters live under "agent." in the bound store.
class AgentModel {
 public:
  AgentModel(num::ParameterStore& store, const AgentConfig& config, Rng& rng);
  static AgentModel attach(num::ParameterStore& store,
                           const AgentConfig& config);

  const AgentConfig& config() const { return config_; }

  Var embed_tokens(Tape& tape, std::span<const int> tokens) const;
  Var initial_state(Tape& tape) const;

  struct StepOutput {
    Var next_state;  // 1 x d
    Var probs;       // 1 x n over candidate entries
  };
  StepOutput policy_step(Tape& tape, Var text, Var state,
                         const Tensor& candidate_features) const;

 private:
  AgentModel(num::ParameterStore* store, const AgentConfig& config);
  num::ParameterStore* store_;
  AgentConfig config_;
};

// [X; X~'; X''] along the sequence axis; identity when the translator
// output is absent (ablation baseline).
Var augment_text(Tape& tape, Var text, std::optional<std::pair<Var, Var>>
                                           translated_and_attended);

// Everything a rollout needs to run and be supervised.
struct EpisodeSpec {
  const world::EnvironmentGraph* graph = nullptr;
  int start = 0, goal = 0;
  std::vector<int> teacher_path;                // node indices, start..goal
  std::vector<int> instruction_tokens;          // concatenated positives
  std::vector<std::pair<int, int>> spans;       // per-step token spans
  std::vector<int> step_landmarks;              // positive landmark per step
  std::vector<double> dist_to_goal;             // geodesic table from goal
};

// Builds the spec for one sampled trajectory; nullopt when any step lacks a
// record (incomplete instructions are never used for episodes).
std::optional<EpisodeSpec> sample_episode_spec(
    const world::EnvironmentGraph& g, const landmark::Detector& detector,
    const syfis::MotionDictionary& dictionary,
    const syfis::Tokenizer& tokenizer, const landmark::LabelVocabulary& labels,
    const syfis::SyfisConfig& record_config, int len_min, int len_max,
    Rng& rng);

enum class RolloutMode { kTeacher, kSample, kGreedy };

struct StepLog {
  int viewpoint = -1;
  int chosen = -1;
  bool chose_stop = false;
  double reward = 0.0;  // geodesic distance change toward the goal
  std::vector<double> action_probs;
};

struct Episode {
  std::vector<int> visited;  // node sequence including the start
  std::vector<StepLog> steps;
  bool success = false;
  double terminal_bonus = 0.0;  // +2 on success, -2 otherwise
  std::string stop_reason;      // "stopped" | "max_steps"
};

struct RolloutOptions {
  RolloutMode mode = RolloutMode::kGreedy;
  int max_steps = 15;
  double success_radius = 1.0;
  bool translator_losses = false;  // collect split/generation vars per step
  const std::vector<int>* forced_actions = nullptr;  // gradient-check replay
};

// Tape-tracked rollout; per-step log-prob vars allow policy-gradient and
// imitation losses to be assembled afterwards.
struct TracedEpisode {
  Episode episode;
  std::vector<Var> logp_chosen;
  std::vector<Var> split_preds;  // per step, L x 1 (translator runs only)
  std::vector<Var> gen_dists;    // per step, L x vocab
};

TracedEpisode run_episode(Tape& tape, const AgentModel& agent,
                          const trans::TranslatorModel* translator,
                          const EpisodeSpec& spec, const RolloutOptions& opts,
                          Rng* rng);

// Grad-free rollout on a scratch tape.
Episode rollout(const AgentModel& agent,
                const trans::TranslatorModel* translator,
                num::ParameterStore& store, const EpisodeSpec& spec,
                const RolloutOptions& opts, Rng* rng);

}  // namespace vlnlab::agent

#endif  // VLNLAB_NAVAGENT_AGENT_HPP
