#include "expcli/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "numcore/checkpoint.hpp"
#include "syfis/dataset.hpp"

namespace vlnlab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void ensure_parent_dir(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void require_artifact(const std::string& path, const std::string& produced_by) {
  if (!fs::exists(path))
    throw DependencyError("missing artifact " + path + " (run " + produced_by +
                          " first)");
}

void write_manifest(const RunConfig& config, const std::string& verb,
                    const std::vector<std::pair<std::string, std::string>>&
                        artifact_paths,
                    double elapsed_seconds) {
  for (const auto& [name, path] : artifact_paths)
    if (!fs::exists(path))
      throw IoError("manifest references missing file: " + path);
  ordered_json j;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  j["config_hash"] = hash;
  j["tool_version"] = kToolVersion;
  j["verb"] = verb;
  j["wall_clock_seconds"] = elapsed_seconds;
  auto& arts = j["artifacts"] = ordered_json::object();
  for (const auto& [name, path] : artifact_paths) arts[name] = path;

  const Artifacts art(config.output_dir);
  const std::string path = art.manifest_path(verb);
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

std::vector<world::EnvironmentGraph> load_split_worlds(const RunConfig& config,
                                                       const std::string& split) {
  const Artifacts art(config.output_dir);
  const int count = split == "seen" ? config.worldgen.seen_worlds
                                    : config.worldgen.unseen_worlds;
  std::vector<world::EnvironmentGraph> worlds;
  for (int i = 0; i < count; ++i) {
    require_artifact(art.world_path(split, i), "gen-worlds");
    worlds.push_back(world::load_world(art.world_path(split, i)));
  }
  return worlds;
}

syfis::DatasetConfig dataset_config(const RunConfig& config,
                                    int trajectories_per_world) {
  syfis::DatasetConfig d;
  d.record.k = config.detector.k;
  d.record.tau1 = config.detector.tau1;
  d.record.heading_threshold = config.syfis.heading_threshold;
  d.record.l_max = config.syfis.l_max;
  d.trajectories_per_world = trajectories_per_world;
  d.path_len_min = config.syfis.path_len_min;
  d.path_len_max = config.syfis.path_len_max;
  return d;
}

agent::EpisodeSpec sample_spec_or_throw(
    const world::EnvironmentGraph& g, const Toolkit& toolkit,
    const RunConfig& config, Rng& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    auto spec = agent::sample_episode_spec(
        g, toolkit.detector, toolkit.dictionary, toolkit.tokenizer,
        toolkit.labels, toolkit.record_config, config.syfis.path_len_min,
        config.syfis.path_len_max, rng);
    if (spec) return std::move(*spec);
  }
  throw InvalidParameterError(
      "could not sample a complete episode in world " + g.world_id +
      "; relax the path-length range or landmark parameters");
}

struct JointModels {
  num::ParameterStore store;
  std::optional<agent::AgentModel> agent_model;
  std::optional<trans::TranslatorModel> translator_model;
};

// Fresh parameter layout for (agent [+ translator]); initialization draws
// are fixed by the run seed so checkpoint loads land on identical shapes.
void build_joint_models(JointModels& m, const RunConfig& config,
                        const Toolkit& toolkit, bool with_translator) {
  Rng agent_rng(derive_seed(config.seed, "agent-init"));
  m.agent_model.emplace(m.store, agent_config(config, toolkit), agent_rng);
  if (with_translator) {
    Rng trans_rng(derive_seed(config.seed, "translator-init"));
    m.translator_model.emplace(m.store, translator_config(config, toolkit),
                               trans_rng);
  }
}

}  // namespace

std::string Artifacts::world_path(const std::string& split, int index) const {
  return root + "/worlds/" + split + "_" + std::to_string(index) + ".json";
}

Toolkit Toolkit::from_config(const RunConfig& config) {
  auto dictionary = config.syfis.dictionary_path.empty()
                        ? syfis::MotionDictionary::builtin()
                        : syfis::MotionDictionary::from_json_file(
                              config.syfis.dictionary_path);
  dictionary.validate(config.syfis.l_max - 2);
  auto labels = landmark::LabelVocabulary::builtin(config.worldgen.label_count);
  auto tokenizer = syfis::Tokenizer::build(dictionary, labels);
  syfis::SyfisConfig record_config;
  record_config.k = config.detector.k;
  record_config.tau1 = config.detector.tau1;
  record_config.heading_threshold = config.syfis.heading_threshold;
  record_config.l_max = config.syfis.l_max;
  return Toolkit{std::move(labels),
                 landmark::BagOfObjectsDetector(config.worldgen.label_count),
                 std::move(dictionary), std::move(tokenizer), record_config};
}

std::uint64_t world_seed(const RunConfig& config, const std::string& split,
                         int index) {
  // Disjoint derivation tags keep seen and unseen worlds from ever sharing
  // a generation stream.
  return derive_seed(config.seed, "world-" + split + "-" + std::to_string(index));
}

world::WorldGenParams worldgen_params(const RunConfig& config) {
  world::WorldGenParams p;
  p.node_count = config.worldgen.node_count;
  p.label_count = config.worldgen.label_count;
  p.spacing = config.worldgen.spacing;
  p.xy_jitter = config.worldgen.xy_jitter;
  p.z_jitter = config.worldgen.z_jitter;
  p.extra_edge_prob = config.worldgen.extra_edge_prob;
  p.zipf_exponent = config.worldgen.zipf_exponent;
  p.mean_objects_per_view = config.worldgen.mean_objects_per_view;
  p.feature_noise_sigma = config.detector.noise_sigma;
  return p;
}

trans::TranslatorConfig translator_config(const RunConfig& config,
                                          const Toolkit& toolkit) {
  trans::TranslatorConfig t;
  t.vocab = toolkit.tokenizer.size();
  t.cand_dim = config.worldgen.label_count + world::kCandidateExtraDims;
  t.embed_dim = config.model.embed_dim;
  t.hidden = config.model.hidden;
  t.mlp_hidden = config.model.mlp_hidden;
  t.margin = config.loss.margin;
  t.dsl_literal_generated = config.loss.dsl_literal_generated;
  return t;
}

agent::AgentConfig agent_config(const RunConfig& config,
                                const Toolkit& toolkit) {
  agent::AgentConfig a;
  a.vocab = toolkit.tokenizer.size();
  a.cand_dim = config.worldgen.label_count + world::kCandidateExtraDims;
  a.dim = config.model.hidden;
  return a;
}

num::AdamConfig adam_config(const RunConfig& config) {
  num::AdamConfig a;
  a.lr = config.optimizer.lr;
  a.beta1 = config.optimizer.beta1;
  a.beta2 = config.optimizer.beta2;
  a.eps = config.optimizer.eps;
  a.weight_decay = config.optimizer.weight_decay;
  a.clip_norm = config.optimizer.clip_norm;
  return a;
}

agent::TrainConfig agent_train_config(const RunConfig& config) {
  agent::TrainConfig t;
  t.beta1 = config.loss.beta1;
  t.beta2 = config.ablation.no_sig ? 0.0 : config.loss.beta2;
  t.beta3 = config.ablation.no_ss ? 0.0 : config.loss.beta3;
  t.nav.lambda = config.loss.lambda;
  t.nav.gamma = config.rollout.gamma;
  t.max_steps = config.rollout.max_steps;
  t.success_radius = config.rollout.success_radius;
  t.ss_positive_term_only = config.loss.ss_positive_term_only;
  return t;
}

bool is_heldout_record(const syfis::SyfisRecord& rec, double fraction) {
  const std::uint64_t h =
      fnv1a64(rec.world_id + "#" + std::to_string(rec.trajectory_id));
  return static_cast<double>(h % 10000) < fraction * 10000.0;
}

std::optional<num::Tensor> record_candidate_features(
    const world::EnvironmentGraph& g,
    const std::vector<syfis::SyfisRecord>& trajectory_records,
    std::size_t position) {
  const auto& rec = trajectory_records.at(position);
  double heading = 0.0;
  if (rec.step_index > 0) {
    if (position == 0 ||
        trajectory_records[position - 1].step_index != rec.step_index - 1)
      return std::nullopt;  // arrival heading unrecoverable after a skip
    const auto& prev = trajectory_records[position - 1];
    heading = world::relative_orientation(
                  g.viewpoints[g.index_of(prev.source_id)].position, 0.0,
                  g.viewpoints[g.index_of(rec.source_id)].position)
                  .rel_heading;
  }
  const auto obs = world::observe(g, g.index_of(rec.source_id), heading);
  const auto& entries = obs.candidates.entries;
  num::Tensor features(static_cast<int>(entries.size()),
                       g.label_count + world::kCandidateExtraDims);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto f = world::candidate_feature_vector(entries[i], g.label_count);
    for (std::size_t j = 0; j < f.size(); ++j)
      features.at(static_cast<int>(i), static_cast<int>(j)) = f[j];
  }
  return features;
}

PretrainData build_pretrain_examples(
    const std::vector<syfis::SyfisRecord>& records,
    const std::map<std::string, const world::EnvironmentGraph*>& worlds,
    double heldout_fraction) {
  PretrainData data;
  for (const auto& group : syfis::group_by_trajectory(records)) {
    const auto it = worlds.find(group.front().world_id);
    if (it == worlds.end())
      throw NotFoundError("dataset references unknown world " +
                          group.front().world_id);
    const world::EnvironmentGraph& g = *it->second;
    for (std::size_t pos = 0; pos < group.size(); ++pos) {
      auto features = record_candidate_features(g, group, pos);
      if (!features) continue;
      const auto& rec = group[pos];
      trans::PretrainExample ex;
      ex.positive = rec.positive.tokens;
      ex.anchor = rec.anchor.tokens;
      for (const auto& neg : rec.negatives)
        ex.negatives.push_back(neg.sub.tokens);
      ex.candidate_features = std::move(*features);
      if (is_heldout_record(rec, heldout_fraction)) {
        data.heldout.push_back(std::move(ex));
        for (const auto& neg : rec.negatives) {
          if (neg.kind == syfis::NegativeKind::kHard) {
            data.heldout_with_hard.push_back(data.heldout.size() - 1);
            data.heldout_hard_negative.push_back(neg.sub.tokens);
            break;
          }
        }
      } else {
        data.train.push_back(std::move(ex));
      }
    }
  }
  return data;
}

void cmd_gen_worlds(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  const auto params = worldgen_params(config);
  std::vector<std::pair<std::string, std::string>> produced;
  for (const std::string split : {"seen", "unseen"}) {
    const int count = split == "seen" ? config.worldgen.seen_worlds
                                      : config.worldgen.unseen_worlds;
    for (int i = 0; i < count; ++i) {
      const auto g = world::generate_world(world_seed(config, split, i),
                                           params, split);
      const std::string path = art.world_path(split, i);
      ensure_parent_dir(path);
      world::save_world(g, path);
      produced.emplace_back(split + "_" + std::to_string(i), path);
    }
  }
  write_manifest(config, "gen-worlds", produced, now_seconds() - t0);
}

syfis::DatasetStats cmd_gen_syfis(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  const Toolkit toolkit = Toolkit::from_config(config);
  const auto worlds = load_split_worlds(config, "seen");

  std::vector<const world::EnvironmentGraph*> refs;
  for (const auto& g : worlds) refs.push_back(&g);
  const int per_world = std::max(
      1, config.syfis.trajectories / std::max(1, (int)worlds.size()));

  const std::string path = art.dataset_path();
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset: " + path);
  const auto stats = syfis::generate_dataset(
      refs, toolkit.detector, toolkit.dictionary, toolkit.tokenizer,
      toolkit.labels, dataset_config(config, per_world),
      derive_seed(config.seed, "syfis"), out);
  out.close();

  std::ofstream stats_out(art.dataset_stats_path(), std::ios::trunc);
  stats_out << stats.to_json() << '\n';
  stats_out.close();

  write_manifest(config, "gen-syfis",
                 {{"dataset", path}, {"stats", art.dataset_stats_path()}},
                 now_seconds() - t0);
  return stats;
}

HeldoutQuality heldout_quality(num::ParameterStore& store,
                               const trans::TranslatorModel& model,
                               const PretrainData& data) {
  HeldoutQuality q;
  long token_hits = 0, token_total = 0;
  for (const auto& ex : data.heldout) {
    num::Tape tape(&store);
    const num::Var enc_p = model.encode(tape, ex.positive,
                                        ex.candidate_features);
    const auto decoded =
        trans::argmax_decode(tape.val(model.generate_tokens(tape, enc_p)));
    for (std::size_t t = 0; t < ex.positive.size(); ++t) {
      ++token_total;
      if (decoded[t] == ex.positive[t]) ++token_hits;
    }
    const num::Var enc_a = model.encode(tape, ex.anchor,
                                        ex.candidate_features);
    q.mean_d_positive +=
        tape.scalar_of(tape.pairwise_distance(enc_a, enc_p));
    ++q.examples;
  }
  for (std::size_t i = 0; i < data.heldout_with_hard.size(); ++i) {
    const auto& ex = data.heldout[data.heldout_with_hard[i]];
    num::Tape tape(&store);
    const num::Var enc_a = model.encode(tape, ex.anchor,
                                        ex.candidate_features);
    const num::Var enc_n = model.encode(tape, data.heldout_hard_negative[i],
                                        ex.candidate_features);
    q.mean_d_hard += tape.scalar_of(tape.pairwise_distance(enc_a, enc_n));
    ++q.hard_examples;
  }
  if (q.examples > 0) q.mean_d_positive /= q.examples;
  if (q.hard_examples > 0) q.mean_d_hard /= q.hard_examples;
  q.token_accuracy =
      token_total > 0 ? static_cast<double>(token_hits) / token_total : 0.0;
  return q;
}

PretrainReport cmd_pretrain_translator(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  require_artifact(art.dataset_path(), "gen-syfis");
  const Toolkit toolkit = Toolkit::from_config(config);
  const auto worlds = load_split_worlds(config, "seen");
  std::map<std::string, const world::EnvironmentGraph*> world_map;
  for (const auto& g : worlds) world_map[g.world_id] = &g;

  const auto records = syfis::load_records(art.dataset_path());
  const PretrainData data = build_pretrain_examples(
      records, world_map, config.syfis.heldout_fraction);
  if (data.train.empty())
    throw InvalidInputError("pretraining has no usable training examples");

  num::ParameterStore store;
  Rng init_rng(derive_seed(config.seed, "translator-init"));
  trans::TranslatorModel model(store, translator_config(config, toolkit),
                               init_rng);

  const double alpha1 = config.ablation.no_sig ? 0.0 : config.loss.alpha1;
  const double alpha2 = config.ablation.no_dsl ? 0.0 : config.loss.alpha2;
  num::AdamConfig adam = adam_config(config);
  adam.lr = config.training.pretrain_lr;

  PretrainReport report;
  report.steps = config.training.pretrain_steps;
  const int batch_size = config.training.pretrain_batch;
  std::vector<trans::PretrainExample> batch;
  for (int step = 0; step < config.training.pretrain_steps; ++step) {
    batch.clear();
    for (int i = 0; i < batch_size; ++i)
      batch.push_back(
          data.train[(static_cast<std::size_t>(step) * batch_size + i) %
                     data.train.size()]);
    num::AdamConfig step_adam = adam;
    if (config.training.pretrain_lr_decay) {
      // 5% linear warmup, then linear decay to 10% of the peak rate.
      const int total = std::max(1, config.training.pretrain_steps - 1);
      const int warmup = std::max(1, total / 20);
      const double progress = static_cast<double>(step) / total;
      const double ramp = std::min(1.0, static_cast<double>(step + 1) / warmup);
      step_adam.lr = adam.lr * ramp * (1.0 - 0.9 * progress);
    }
    const auto losses =
        trans::pretrain_step(store, model, batch, alpha1, alpha2, step_adam);
    if (step == 0) report.initial_total = losses.total;
    if (step == config.training.pretrain_steps - 1) {
      report.final_total = losses.total;
      report.final_sig = losses.sig;
      report.final_dsl = losses.dsl;
    }
    if (step % 100 == 0)
      std::cerr << "pretrain step " << step << " loss " << losses.total
                << " (sig " << losses.sig << ", dsl " << losses.dsl << ")\n";
  }

  const auto quality = heldout_quality(store, model, data);
  report.heldout_token_accuracy = quality.token_accuracy;
  report.heldout_mean_d_positive = quality.mean_d_positive;
  report.heldout_mean_d_hard = quality.mean_d_hard;
  report.heldout_examples = quality.examples;

  ensure_parent_dir(art.translator_ckpt_path());
  num::save_checkpoint(store, art.translator_ckpt_path());

  ordered_json j;
  j["steps"] = report.steps;
  j["initial_total"] = report.initial_total;
  j["final_total"] = report.final_total;
  j["final_sig"] = report.final_sig;
  j["final_dsl"] = report.final_dsl;
  j["heldout_examples"] = report.heldout_examples;
  j["heldout_token_accuracy"] = report.heldout_token_accuracy;
  j["heldout_mean_d_positive"] = report.heldout_mean_d_positive;
  j["heldout_mean_d_hard"] = report.heldout_mean_d_hard;
  std::ofstream mout(art.pretrain_metrics_path(), std::ios::trunc);
  mout << j.dump(2) << '\n';
  mout.close();

  write_manifest(config, "pretrain-translator",
                 {{"checkpoint", art.translator_ckpt_path()},
                  {"metrics", art.pretrain_metrics_path()}},
                 now_seconds() - t0);
  return report;
}

void cmd_train_agent(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  const Toolkit toolkit = Toolkit::from_config(config);
  const auto worlds = load_split_worlds(config, "seen");
  const bool with_translator = !config.ablation.no_translator;

  JointModels models;
  build_joint_models(models, config, toolkit, with_translator);
  if (with_translator) {
    require_artifact(art.dataset_path(), "gen-syfis");
    require_artifact(art.translator_ckpt_path(), "pretrain-translator");
    models.store.load_values(num::load_checkpoint(art.translator_ckpt_path()),
                             /*strict=*/true);
  }

  const auto train_cfg = agent_train_config(config);
  const auto adam = adam_config(config);
  Rng rng(derive_seed(config.seed, "agent-train"));

  for (int step = 0; step < config.training.agent_steps; ++step) {
    std::vector<agent::EpisodeSpec> batch;
    for (int i = 0; i < config.training.agent_batch; ++i) {
      const auto& g = worlds[rng.uniform_int((int)worlds.size())];
      batch.push_back(sample_spec_or_throw(g, toolkit, config, rng));
    }
    agent::TrainStepResult result;
    if (with_translator) {
      result = agent::train_step(models.store, *models.agent_model,
                                 &*models.translator_model, batch, train_cfg,
                                 adam, rng);
    } else {
      result = agent::train_step_baseline(models.store, *models.agent_model,
                                          batch, train_cfg, adam, rng);
    }
    if (step % 100 == 0)
      std::cerr << "agent step " << step << " total " << result.total
                << " nav " << result.nav << " sig " << result.sig << " ss "
                << result.ss << "\n";
  }

  ensure_parent_dir(art.agent_ckpt_path());
  num::save_checkpoint(models.store, art.agent_ckpt_path());
  write_manifest(config, "train-agent",
                 {{"checkpoint", art.agent_ckpt_path()}},
                 now_seconds() - t0);
}

std::map<std::string, SplitEvalSummary> cmd_evaluate(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  require_artifact(art.agent_ckpt_path(), "train-agent");
  const Toolkit toolkit = Toolkit::from_config(config);
  const bool with_translator = !config.ablation.no_translator;

  JointModels models;
  build_joint_models(models, config, toolkit, with_translator);
  models.store.load_values(num::load_checkpoint(art.agent_ckpt_path()),
                           /*strict=*/true);

  agent::RolloutOptions greedy;
  greedy.mode = agent::RolloutMode::kGreedy;
  greedy.max_steps = config.rollout.max_steps;
  greedy.success_radius = config.rollout.success_radius;

  std::map<std::string, SplitEvalSummary> summary;
  std::vector<std::pair<std::string, std::string>> produced;
  ordered_json overlap_json;

  for (const std::string split : {"seen", "unseen"}) {
    const auto worlds = load_split_worlds(config, split);
    Rng rng(derive_seed(config.seed, "eval-" + split));

    std::vector<metrics::EvalResult> results;
    std::vector<std::vector<metrics::OverlapInput>> overlap_by_world(
        worlds.size());
    long f1_tp = 0, f1_fp = 0, f1_fn = 0;

    const std::string epi_path = art.episodes_path(split);
    ensure_parent_dir(epi_path);
    std::ofstream epi_out(epi_path, std::ios::binary | std::ios::trunc);
    if (!epi_out) throw IoError("cannot write episode log: " + epi_path);

    for (int e = 0; e < config.training.eval_episodes; ++e) {
      const int world_index = rng.uniform_int((int)worlds.size());
      const auto& g = worlds[world_index];
      const auto spec = sample_spec_or_throw(g, toolkit, config, rng);
      const auto episode = agent::rollout(
          *models.agent_model,
          with_translator ? &*models.translator_model : nullptr, models.store,
          spec, greedy, nullptr);

      metrics::TrajectoryPair pair;
      pair.graph = &g;
      pair.predicted = episode.visited;
      pair.reference = spec.teacher_path;
      pair.success_radius = config.rollout.success_radius;
      const auto result = metrics::evaluate_pair(pair);
      results.push_back(result);

      metrics::OverlapInput ov;
      ov.instruction_landmarks = spec.step_landmarks;
      ov.visited = episode.visited;
      ov.success = result.sr == 1;
      overlap_by_world[world_index].push_back(std::move(ov));

      if (with_translator) {
        // Split-mask F1 along the teacher path (token-level, 0.5 threshold).
        num::Tape tape(&models.store);
        agent::RolloutOptions teacher = greedy;
        teacher.mode = agent::RolloutMode::kTeacher;
        teacher.translator_losses = true;
        const auto traced =
            agent::run_episode(tape, *models.agent_model,
                               &*models.translator_model, spec, teacher,
                               nullptr);
        for (std::size_t t = 0; t < traced.split_preds.size(); ++t) {
          if (t >= spec.spans.size()) break;
          const auto& pred = tape.val(traced.split_preds[t]);
          for (int i = 0; i < pred.rows(); ++i) {
            const bool on = pred.at(i, 0) > 0.5;
            const bool truth =
                i >= spec.spans[t].first && i < spec.spans[t].second;
            if (on && truth) ++f1_tp;
            else if (on && !truth) ++f1_fp;
            else if (!on && truth) ++f1_fn;
          }
        }
      }

      ordered_json j;
      j["episode"] = e;
      j["world_id"] = g.world_id;
      j["start"] = g.viewpoints[spec.start].id;
      j["goal"] = g.viewpoints[spec.goal].id;
      j["instruction"] =
          toolkit.tokenizer.detokenize(spec.instruction_tokens);
      j["landmarks"] = spec.step_landmarks;
      auto& visited = j["visited"] = ordered_json::array();
      for (int node : episode.visited) visited.push_back(g.viewpoints[node].id);
      j["stop_reason"] = episode.stop_reason;
      j["ne"] = result.ne;
      j["sr"] = result.sr;
      j["spl"] = result.spl;
      j["cls"] = result.cls;
      j["ndtw"] = result.ndtw;
      j["sdtw"] = result.sdtw;
      epi_out << j.dump() << '\n';
    }
    epi_out.close();

    const std::string csv_path = art.metrics_csv_path(split);
    ensure_parent_dir(csv_path);
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    metrics::write_csv(results, csv);
    csv.close();

    SplitEvalSummary s;
    s.agg = metrics::aggregate(results);
    if (with_translator) {
      const double denom_p = f1_tp + f1_fp, denom_r = f1_tp + f1_fn;
      const double precision = denom_p > 0 ? f1_tp / denom_p : 0.0;
      const double recall = denom_r > 0 ? f1_tp / denom_r : 0.0;
      s.split_mask_f1 = (precision + recall) > 0
                            ? 2.0 * precision * recall / (precision + recall)
                            : 0.0;
    }
    summary[split] = s;
    produced.emplace_back("episodes_" + split, epi_path);
    produced.emplace_back("metrics_" + split, csv_path);

    // Landmark/object overlap histogram, merged across the split's worlds.
    metrics::OverlapReport merged;
    for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
      const auto part = metrics::overlap_report(
          worlds[wi], overlap_by_world[wi], toolkit.detector,
          config.detector.k, config.detector.tau1);
      for (int b = 0; b < 11; ++b) {
        merged.all_bins[b] += part.all_bins[b];
        merged.success_bins[b] += part.success_bins[b];
      }
      merged.included += part.included;
      merged.excluded_zero_landmarks += part.excluded_zero_landmarks;
    }
    ordered_json oj;
    oj["included"] = merged.included;
    oj["excluded_zero_landmarks"] = merged.excluded_zero_landmarks;
    oj["all_bins"] = merged.all_bins;
    oj["success_bins"] = merged.success_bins;
    overlap_json[split] = oj;
  }

  ensure_parent_dir(art.overlap_path());
  {
    std::ofstream oout(art.overlap_path(), std::ios::trunc);
    oout << overlap_json.dump(2) << '\n';
  }
  produced.emplace_back("overlap", art.overlap_path());

  // Aggregate summary JSON for report / downstream checks.
  ordered_json sj;
  for (const auto& [split, s] : summary) {
    ordered_json row;
    row["episodes"] = s.agg.episodes;
    row["ne"] = s.agg.ne;
    row["sr"] = s.agg.sr;
    row["spl"] = s.agg.spl;
    row["cls"] = s.agg.cls;
    row["ndtw"] = s.agg.ndtw;
    row["sdtw"] = s.agg.sdtw;
    row["split_mask_f1"] = s.split_mask_f1;
    sj[split] = row;
  }
  ensure_parent_dir(art.eval_summary_path());
  std::ofstream sout(art.eval_summary_path(), std::ios::trunc);
  sout << sj.dump(2) << '\n';
  sout.close();
  produced.emplace_back("eval_summary", art.eval_summary_path());

  write_manifest(config, "evaluate", produced, now_seconds() - t0);
  return summary;
}

std::string cmd_translate(const RunConfig& config,
                          const std::string& record_id) {
  const Artifacts art(config.output_dir);
  require_artifact(art.dataset_path(), "gen-syfis");
  require_artifact(art.translator_ckpt_path(), "pretrain-translator");
  const Toolkit toolkit = Toolkit::from_config(config);
  const auto worlds = load_split_worlds(config, "seen");
  std::map<std::string, const world::EnvironmentGraph*> world_map;
  for (const auto& g : worlds) world_map[g.world_id] = &g;

  const auto records = syfis::load_records(art.dataset_path());
  const auto groups = syfis::group_by_trajectory(records);
  for (const auto& group : groups) {
    for (std::size_t pos = 0; pos < group.size(); ++pos) {
      if (group[pos].record_id != record_id) continue;
      auto features = record_candidate_features(*world_map.at(group[pos].world_id),
                                                group, pos);
      if (!features)
        throw InvalidInputError("record " + record_id +
                                " has no recoverable arrival heading");
      num::ParameterStore store;
      Rng init_rng(derive_seed(config.seed, "translator-init"));
      trans::TranslatorModel model(store, translator_config(config, toolkit),
                                   init_rng);
      store.load_values(num::load_checkpoint(art.translator_ckpt_path()),
                        /*strict=*/true);
      num::Tape tape(&store);
      const num::Var enc =
          model.encode(tape, group[pos].positive.tokens, *features);
      const auto decoded =
          trans::argmax_decode(tape.val(model.generate_tokens(tape, enc)));
      const auto& mask = tape.val(model.split_mask(tape, enc));

      ordered_json j;
      j["record_id"] = record_id;
      j["input"] = toolkit.tokenizer.detokenize(group[pos].positive.tokens);
      j["decoded"] = toolkit.tokenizer.detokenize(decoded);
      j["decoded_tokens"] = decoded;
      auto& m = j["split_mask"] = ordered_json::array();
      for (int i = 0; i < mask.rows(); ++i) m.push_back(mask.at(i, 0));
      return j.dump(2);
    }
  }
  throw NotFoundError("record not found in dataset: " + record_id);
}

void cmd_report(const RunConfig& config) {
  const double t0 = now_seconds();
  const Artifacts art(config.output_dir);
  std::vector<std::pair<std::string, metrics::Aggregate>> rows;
  for (const std::string split : {"seen", "unseen"}) {
    const std::string csv_path = art.metrics_csv_path(split);
    require_artifact(csv_path, "evaluate");
    std::ifstream in(csv_path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<metrics::EvalResult> results;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      metrics::EvalResult r;
      std::istringstream row(line);
      std::string cell;
      std::getline(row, cell, ',');
      r.ne = std::stod(cell);
      std::getline(row, cell, ',');
      r.sr = std::stoi(cell);
      std::getline(row, cell, ',');
      r.spl = std::stod(cell);
      std::getline(row, cell, ',');
      r.cls = std::stod(cell);
      std::getline(row, cell, ',');
      r.ndtw = std::stod(cell);
      std::getline(row, cell, ',');
      r.sdtw = std::stod(cell);
      results.push_back(r);
    }
    const std::string label =
        (config.ablation.no_translator ? std::string("baseline ")
                                       : std::string("vln-trans ")) +
        split;
    rows.emplace_back(label, metrics::aggregate(results));
  }

  ensure_parent_dir(art.report_path());
  std::ofstream out(art.report_path(), std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + art.report_path());
  metrics::write_summary_table(rows, out);

  if (fs::exists(art.overlap_path())) {
    std::ifstream oin(art.overlap_path());
    nlohmann::json oj;
    oin >> oj;
    out << "\nlandmark/object overlap (bin = overlap decile; all | success)\n";
    for (const auto& [split, data] : oj.items()) {
      out << split << ":";
      const auto all = data.at("all_bins").get<std::vector<long>>();
      const auto succ = data.at("success_bins").get<std::vector<long>>();
      for (std::size_t b = 0; b < all.size(); ++b)
        out << "  " << b * 10 << "%:" << all[b] << "|" << succ[b];
      out << '\n';
    }
  }
  out.close();

  write_manifest(config, "report", {{"summary", art.report_path()}},
                 now_seconds() - t0);
}

}  // namespace vlnlab::cli
