#include "navagent/train.hpp"

namespace vlnlab::agent {

namespace {

// Mean over episodes of the summed negative log-likelihood of the executed
// actions; reported for monitoring, not part of the computation graph.
double mean_nll(Tape& tape, std::span<const TracedEpisode> episodes) {
  if (episodes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ep : episodes) {
    double nll = 0.0;
    for (const Var& logp : ep.logp_chosen) nll -= tape.scalar_of(logp);
    total += nll;
  }
  return total / static_cast<double>(episodes.size());
}

}  // namespace

std::vector<double> episode_returns(const Episode& episode, double gamma) {
  std::vector<double> returns(episode.steps.size(), 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(episode.steps.size()) - 1; t >= 0; --t) {
    double r = episode.steps[t].reward;
    if (t == static_cast<int>(episode.steps.size()) - 1)
      r += episode.terminal_bonus;
    acc = r + gamma * acc;
    returns[t] = acc;
  }
  return returns;
}

Var loss_nav(Tape& tape, std::span<const TracedEpisode> sampled,
             std::span<const TracedEpisode> teacher,
             const NavLossConfig& config) {
  if (sampled.empty() && teacher.empty())
    throw InvalidInputError("loss_nav: empty batch");

  std::vector<Var> terms;

  if (!sampled.empty()) {
    // Batch-mean baseline over every step's return.
    std::vector<std::vector<double>> all_returns;
    double baseline = 0.0;
    long count = 0;
    for (const auto& ep : sampled) {
      all_returns.push_back(episode_returns(ep.episode, config.gamma));
      for (double g : all_returns.back()) {
        baseline += g;
        ++count;
      }
    }
    if (count > 0) baseline /= static_cast<double>(count);

    std::vector<Var> rl_eps;
    for (std::size_t e = 0; e < sampled.size(); ++e) {
      std::vector<Var> step_terms;
      for (std::size_t t = 0; t < sampled[e].logp_chosen.size(); ++t) {
        const double advantage = all_returns[e][t] - baseline;
        step_terms.push_back(
            tape.scale(sampled[e].logp_chosen[t], -advantage));
      }
      rl_eps.push_back(tape.sum(tape.concat_rows(step_terms)));
    }
    terms.push_back(tape.mean(tape.concat_rows(rl_eps)));
  }

  if (!teacher.empty()) {
    std::vector<Var> il_eps;
    for (const auto& ep : teacher) {
      std::vector<Var> step_terms;
      for (const Var& logp : ep.logp_chosen)
        step_terms.push_back(tape.scale(logp, -1.0));
      il_eps.push_back(tape.sum(tape.concat_rows(step_terms)));
    }
    terms.push_back(
        tape.scale(tape.mean(tape.concat_rows(il_eps)), config.lambda));
  }

  if (terms.size() == 1) return terms[0];
  return tape.add(terms[0], terms[1]);
}

Var loss_ss(Tape& tape, std::span<const Var> split_preds,
            const EpisodeSpec& spec, bool positive_term_only) {
  if (split_preds.empty()) throw InvalidInputError("loss_ss: no steps");
  const int length = static_cast<int>(spec.instruction_tokens.size());
  std::vector<Var> step_terms;
  for (std::size_t t = 0; t < split_preds.size(); ++t) {
    if (t >= spec.spans.size())
      throw InvalidInputError("loss_ss: more steps than spans");
    Tensor truth(length, 1);
    for (int i = spec.spans[t].first; i < spec.spans[t].second; ++i)
      truth.at(i, 0) = 1.0;
    Var gt = tape.constant(truth);
    Var pred = tape.clamp(split_preds[t], 1e-12, 1.0 - 1e-12);
    Var positive = tape.mul(gt, tape.log_op(pred));
    Var bce;
    if (positive_term_only) {
      bce = positive;
    } else {
      Tensor ones_t(length, 1, 1.0);
      Var ones = tape.constant(ones_t);
      Var negative =
          tape.mul(tape.sub(ones, gt), tape.log_op(tape.sub(ones, pred)));
      bce = tape.add(positive, negative);
    }
    step_terms.push_back(tape.scale(tape.mean(bce), -1.0));
  }
  return tape.mean(tape.concat_rows(step_terms));
}

Var loss_sig_steps(Tape& tape, std::span<const Var> gen_dists,
                   const EpisodeSpec& spec, int pad_id) {
  if (gen_dists.empty()) throw InvalidInputError("loss_sig_steps: no steps");
  std::vector<Var> step_terms;
  for (std::size_t t = 0; t < gen_dists.size(); ++t) {
    std::vector<int> targets(spec.instruction_tokens.size(), pad_id);
    for (int i = spec.spans[t].first; i < spec.spans[t].second; ++i)
      targets[i] = spec.instruction_tokens[i];
    step_terms.push_back(
        trans::TranslatorModel::loss_sig(tape, gen_dists[t], targets, pad_id));
  }
  return tape.mean(tape.concat_rows(step_terms));
}

TrainStepResult train_step(num::ParameterStore& store, const AgentModel& agent,
                           const trans::TranslatorModel* translator,
                           std::span<const EpisodeSpec> batch,
                           const TrainConfig& config,
                           const num::AdamConfig& adam, Rng& rng) {
  if (batch.empty()) throw InvalidInputError("train_step: empty batch");
  Tape tape(&store);

  RolloutOptions sample_opts;
  sample_opts.mode = RolloutMode::kSample;
  sample_opts.max_steps = config.max_steps;
  sample_opts.success_radius = config.success_radius;

  RolloutOptions teacher_opts = sample_opts;
  teacher_opts.mode = RolloutMode::kTeacher;
  teacher_opts.translator_losses =
      translator && (config.beta2 > 0.0 || config.beta3 > 0.0);

  std::vector<TracedEpisode> sampled, teacher;
  for (const auto& spec : batch) {
    sampled.push_back(
        run_episode(tape, agent, translator, spec, sample_opts, &rng));
    teacher.push_back(
        run_episode(tape, agent, translator, spec, teacher_opts, nullptr));
  }

  Var nav = loss_nav(tape, sampled, teacher, config.nav);
  Var total = tape.scale(nav, config.beta1);

  TrainStepResult result;
  result.nav = tape.scalar_of(nav);
  result.il = mean_nll(tape, teacher);
  result.rl = result.nav - config.nav.lambda * result.il;

  if (translator && config.beta2 > 0.0) {
    std::vector<Var> sig_terms;
    for (std::size_t e = 0; e < batch.size(); ++e)
      sig_terms.push_back(
          loss_sig_steps(tape, teacher[e].gen_dists, batch[e], /*pad_id=*/0));
    Var sig = tape.mean(tape.concat_rows(sig_terms));
    result.sig = tape.scalar_of(sig);
    total = tape.add(total, tape.scale(sig, config.beta2));
  }
  if (translator && config.beta3 > 0.0) {
    std::vector<Var> ss_terms;
    for (std::size_t e = 0; e < batch.size(); ++e)
      ss_terms.push_back(loss_ss(tape, teacher[e].split_preds, batch[e],
                                 config.ss_positive_term_only));
    Var ss = tape.mean(tape.concat_rows(ss_terms));
    result.ss = tape.scalar_of(ss);
    total = tape.add(total, tape.scale(ss, config.beta3));
  }

  result.total = tape.scalar_of(total);
  result.mask_clamp_clips = tape.clamp_clip_count();
  tape.backward(total);
  store.adamw_update(adam);
  return result;
}

TrainStepResult train_step_baseline(num::ParameterStore& store,
                                    const AgentModel& agent,
                                    std::span<const EpisodeSpec> batch,
                                    const TrainConfig& config,
                                    const num::AdamConfig& adam, Rng& rng) {
  if (batch.empty()) throw InvalidInputError("train_step: empty batch");
  Tape tape(&store);

  RolloutOptions sample_opts;
  sample_opts.mode = RolloutMode::kSample;
  sample_opts.max_steps = config.max_steps;
  sample_opts.success_radius = config.success_radius;
  RolloutOptions teacher_opts = sample_opts;
  teacher_opts.mode = RolloutMode::kTeacher;

  std::vector<TracedEpisode> sampled, teacher;
  for (const auto& spec : batch) {
    sampled.push_back(
        run_episode(tape, agent, nullptr, spec, sample_opts, &rng));
    teacher.push_back(
        run_episode(tape, agent, nullptr, spec, teacher_opts, nullptr));
  }

  Var nav = loss_nav(tape, sampled, teacher, config.nav);
  Var total = tape.scale(nav, config.beta1);

  TrainStepResult result;
  result.nav = tape.scalar_of(nav);
  result.il = mean_nll(tape, teacher);
  result.rl = result.nav - config.nav.lambda * result.il;
  result.total = tape.scalar_of(total);
  tape.backward(total);
  store.adamw_update(adam);
  return result;
}

}  // namespace vlnlab::agent
