#include "navagent/agent.hpp"

#include <array>
#include <cmath>

namespace vlnlab::agent {

AgentModel::AgentModel(num::ParameterStore* store, const AgentConfig& config)
    : store_(store), config_(config) {
  if (config_.vocab < 2 || config_.cand_dim < 1)
    throw InvalidParameterError("agent config missing vocab/cand_dim");
}

AgentModel::AgentModel(num::ParameterStore& store, const AgentConfig& config,
                       Rng& rng)
    : AgentModel(&store, config) {
  const int d = config_.dim;
  store.create_xavier("agent.embed", config_.vocab, d, rng);
  store.create_xavier("agent.cand.W", config_.cand_dim, d, rng);
  store.create("agent.cand.b", 1, d);
  store.create_xavier("agent.attn.Wq", d, d, rng);
  store.create_xavier("agent.attn.Wk", d, d, rng);
  store.create_xavier("agent.attn.Wv", d, d, rng);
  store.create_xavier("agent.attn.Wo", d, d, rng);
  store.create("agent.attn.bo", 1, d);
  store.create_xavier("agent.state.Ws", d, d, rng);
  store.create_xavier("agent.state.Wc", d, d, rng);
  store.create("agent.state.b", 1, d);
  store.create_xavier("agent.s0", 1, d, rng);
}

AgentModel AgentModel::attach(num::ParameterStore& store,
                              const AgentConfig& config) {
  AgentModel m(&store, config);
  for (const char* name : {"agent.embed", "agent.attn.Wq", "agent.s0"})
    if (!store.has(name))
      throw NotFoundError(std::string("agent parameter missing: ") + name);
  return m;
}

Var AgentModel::embed_tokens(Tape& tape, std::span<const int> tokens) const {
  if (tokens.empty()) throw InvalidInputError("embed_tokens: empty sequence");
  return tape.embedding(tape.param("agent.embed"),
                        std::vector<int>(tokens.begin(), tokens.end()));
}

Var AgentModel::initial_state(Tape& tape) const {
  return tape.param("agent.s0");
}

AgentModel::StepOutput AgentModel::policy_step(
    Tape& tape, Var text, Var state, const Tensor& candidate_features) const {
  const int d = config_.dim;
  if (tape.val(text).cols() != d)
    throw ShapeError("policy_step: text width " +
                     std::to_string(tape.val(text).cols()) + " != agent dim " +
                     std::to_string(d));
  const int n = candidate_features.rows();
  if (n < 1) throw InvalidInputError("policy_step: no candidates");

  Var cand_in = tape.constant(candidate_features);
  Var bias = tape.param("agent.cand.b");
  std::vector<Var> bias_rows(n, bias);
  Var v_emb = tape.tanh_op(
      tape.add(tape.matmul(cand_in, tape.param("agent.cand.W")),
               tape.concat_rows(bias_rows)));  // n x d

  Var z = tape.concat_rows(std::array<Var, 2>{state, v_emb});  // (1+n) x d
  Var q = tape.matmul(z, tape.param("agent.attn.Wq"));
  Var k = tape.matmul(text, tape.param("agent.attn.Wk"));
  Var v = tape.matmul(text, tape.param("agent.attn.Wv"));
  Var attn = tape.softmax_rows(
      tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(d)));
  Var context = tape.matmul(attn, v);  // (1+n) x d

  Var bo = tape.param("agent.attn.bo");
  std::vector<Var> bo_rows(n + 1, bo);
  Var fused = tape.tanh_op(
      tape.add(tape.matmul(tape.add(z, context), tape.param("agent.attn.Wo")),
               tape.concat_rows(bo_rows)));  // (1+n) x d

  Var s_hat = tape.slice_rows(fused, 0, 1);
  Var v_hat = tape.slice_rows(fused, 1, n + 1);
  Var logits = tape.scale(
      tape.transpose(tape.matmul(v_hat, tape.transpose(s_hat))),
      1.0 / std::sqrt(d));  // 1 x n
  Var probs = tape.softmax_rows(logits);

  Var visual_context = tape.matmul(probs, v_hat);  // 1 x d
  Var next_state = tape.tanh_op(tape.add(
      tape.add(tape.matmul(s_hat, tape.param("agent.state.Ws")),
               tape.matmul(visual_context, tape.param("agent.state.Wc"))),
      tape.param("agent.state.b")));
  return {next_state, probs};
}

Var augment_text(Tape& tape, Var text,
                 std::optional<std::pair<Var, Var>> translated_and_attended) {
  if (!translated_and_attended) return text;
  return tape.concat_rows(std::array<Var, 3>{
      text, translated_and_attended->first, translated_and_attended->second});
}

std::optional<EpisodeSpec> sample_episode_spec(
    const world::EnvironmentGraph& g, const landmark::Detector& detector,
    const syfis::MotionDictionary& dictionary,
    const syfis::Tokenizer& tokenizer, const landmark::LabelVocabulary& labels,
    const syfis::SyfisConfig& record_config, int len_min, int len_max,
    Rng& rng) {
  const std::vector<int> trajectory =
      syfis::sample_trajectory(g, len_min, len_max, rng);
  if (trajectory.empty()) return std::nullopt;

  std::vector<syfis::SyfisRecord> records;
  for (int step = 0; step < static_cast<int>(trajectory.size()); ++step) {
    auto rec = syfis::build_record(g, trajectory, step, detector, dictionary,
                                   tokenizer, labels, record_config, rng,
                                   nullptr);
    if (!rec) return std::nullopt;  // incomplete instruction
    rec->trajectory_id = 0;
    records.push_back(std::move(*rec));
  }
  const auto instruction = syfis::compose_trajectory_instruction(records);

  EpisodeSpec spec;
  spec.graph = &g;
  spec.start = trajectory.front();
  spec.goal = trajectory.back();
  spec.teacher_path = trajectory;
  spec.instruction_tokens = instruction.tokens;
  spec.spans = instruction.spans;
  for (const auto& rec : records)
    spec.step_landmarks.push_back(labels.index_of(rec.positive.landmark));
  spec.dist_to_goal = world::distances_from(g, spec.goal);
  return spec;
}

namespace {

int draw_from_probs(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax_index(const std::vector<double>& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

TracedEpisode run_episode(Tape& tape, const AgentModel& agent,
                          const trans::TranslatorModel* translator,
                          const EpisodeSpec& spec, const RolloutOptions& opts,
                          Rng* rng) {
  if (opts.mode == RolloutMode::kSample && !rng && !opts.forced_actions)
    throw InvalidInputError("sample rollout needs an rng");
  const world::EnvironmentGraph& g = *spec.graph;

  TracedEpisode out;
  Var text = agent.embed_tokens(tape, spec.instruction_tokens);
  Var state = agent.initial_state(tape);

  int current = spec.start;
  double heading = 0.0;
  out.episode.visited.push_back(current);
  out.episode.stop_reason = "max_steps";

  for (int t = 0; t < opts.max_steps; ++t) {
    const auto obs = world::observe(g, current, heading);
    const auto& entries = obs.candidates.entries;
    Tensor cand_feats(static_cast<int>(entries.size()),
                      g.label_count + world::kCandidateExtraDims);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto f = world::candidate_feature_vector(entries[i], g.label_count);
      for (std::size_t j = 0; j < f.size(); ++j)
        cand_feats.at(static_cast<int>(i), static_cast<int>(j)) = f[j];
    }

    Var x_aug = text;
    if (translator) {
      Var encoded =
          translator->encode(tape, spec.instruction_tokens, cand_feats);
      Var mask = translator->split_mask(tape, encoded);
      Var attended =
          trans::TranslatorModel::attended_instruction(tape, mask, text);
      x_aug = augment_text(tape, text, std::make_pair(encoded, attended));
      if (opts.translator_losses) {
        out.split_preds.push_back(mask);
        out.gen_dists.push_back(translator->generate_tokens(tape, encoded));
      }
    }

    const auto step_out = agent.policy_step(tape, x_aug, state, cand_feats);
    const Tensor& probs_tensor = tape.val(step_out.probs);
    std::vector<double> probs(probs_tensor.raw());

    int chosen;
    if (opts.forced_actions) {
      if (t >= static_cast<int>(opts.forced_actions->size()))
        throw InvalidInputError("forced action list shorter than episode");
      chosen = (*opts.forced_actions)[t];
    } else if (opts.mode == RolloutMode::kTeacher) {
      chosen = world::teacher_action(g, current, spec.goal, heading);
    } else if (opts.mode == RolloutMode::kSample) {
      chosen = draw_from_probs(probs, *rng);
    } else {
      chosen = argmax_index(probs);
    }

    StepLog log;
    log.viewpoint = current;
    log.chosen = chosen;
    log.action_probs = probs;
    out.logp_chosen.push_back(
        tape.log_op(tape.pick(step_out.probs, 0, chosen)));

    const auto& entry = entries[chosen];
    if (entry.is_stop) {
      log.chose_stop = true;
      log.reward = 0.0;
      out.episode.steps.push_back(std::move(log));
      out.episode.stop_reason = "stopped";
      break;
    }

    const int next = entry.viewpoint_index;
    log.reward = spec.dist_to_goal[current] - spec.dist_to_goal[next];
    out.episode.steps.push_back(std::move(log));

    heading = world::relative_orientation(g.viewpoints[current].position, 0.0,
                                          g.viewpoints[next].position)
                  .rel_heading;
    current = next;
    out.episode.visited.push_back(current);
    state = step_out.next_state;
  }

  out.episode.success = spec.dist_to_goal[current] <= opts.success_radius;
  out.episode.terminal_bonus = out.episode.success ? 2.0 : -2.0;
  return out;
}

Episode rollout(const AgentModel& agent,
                const trans::TranslatorModel* translator,
                num::ParameterStore& store, const EpisodeSpec& spec,
                const RolloutOptions& opts, Rng* rng) {
  Tape tape(&store);
  return run_episode(tape, agent, translator, spec, opts, rng).episode;
}

}  // namespace vlnlab::agent
