#ifndef VLNLAB_NAVAGENT_TRAIN_HPP
#define VLNLAB_NAVAGENT_TRAIN_HPP

#include "navagent/agent.hpp"

namespace vlnlab::agent {

struct NavLossConfig {
  double lambda = 0.2;  // imitation weight inside the nav objective
  double gamma = 0.9;   // return discount
};

// Discounted returns per step, terminal bonus folded into the last step.
std::vector<double> episode_returns(const Episode& episode, double gamma);

// RL term -sum_t A_t log p(a_t) over sampled episodes plus lambda times the
// IL term -sum_t log p(a*_t) over teacher episodes; per-episode sums, batch
// means, batch-mean return baseline.
Var loss_nav(Tape& tape, std::span<const TracedEpisode> sampled,
             std::span<const TracedEpisode> teacher,
             const NavLossConfig& config);

// Binary cross entropy between predicted and ground-truth split masks,
// averaged over tokens then steps. Predictions are clamped to
// [1e-12, 1-1e-12] before the log. `positive_term_only` drops the
// negative-class term (the equation's literal one-sided form).
Var loss_ss(Tape& tape, std::span<const Var> split_preds,
            const EpisodeSpec& spec, bool positive_term_only = false);

// Generation loss against each step's sub-instruction span (other positions
// count as PAD), averaged over steps.
Var loss_sig_steps(Tape& tape, std::span<const Var> gen_dists,
                   const EpisodeSpec& spec, int pad_id);

struct TrainConfig {
  double beta1 = 1.0, beta2 = 1.0, beta3 = 0.1;
  NavLossConfig nav;
  int max_steps = 15;
  double success_radius = 1.0;
  bool ss_positive_term_only = false;
};

struct TrainStepResult {
  double total = 0.0, nav = 0.0, sig = 0.0, ss = 0.0;
  double rl = 0.0, il = 0.0;  // unweighted components of the nav term
  long mask_clamp_clips = 0;
};

// One optimizer step over the union of agent and translator parameters.
// Every spec contributes a sampled rollout (RL) and a teacher rollout (IL +
// translator supervision). Pass translator = nullptr (with beta2 = beta3 =
// 0) for the ablation; the op sequence then reduces exactly to the baseline.
TrainStepResult train_step(num::ParameterStore& store, const AgentModel& agent,
                           const trans::TranslatorModel* translator,
                           std::span<const EpisodeSpec> batch,
                           const TrainConfig& config,
                           const num::AdamConfig& adam, Rng& rng);

// Baseline-only code path: no translator machinery anywhere. Exists so the
// reduction identity can be checked bitwise against train_step.
TrainStepResult train_step_baseline(num::ParameterStore& store,
                                    const AgentModel& agent,
                                    std::span<const EpisodeSpec> batch,
                                    const TrainConfig& config,
                                    const num::AdamConfig& adam, Rng& rng);

}  // namespace vlnlab::agent

#endif  // VLNLAB_NAVAGENT_TRAIN_HPP
