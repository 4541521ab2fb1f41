#include "syfis/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace vlnlab::syfis {

namespace {

nlohmann::ordered_json sub_to_json(const SubInstruction& s) {
  nlohmann::ordered_json j;
  j["phrase"] = s.motion_phrase;
  j["landmark"] = s.landmark;
  j["tokens"] = s.tokens;
  return j;
}

SubInstruction sub_from_json(const nlohmann::json& j, MotionCategory category) {
  SubInstruction s;
  s.motion_phrase = j.at("phrase").get<std::string>();
  s.landmark = j.at("landmark").get<std::string>();
  s.tokens = j.at("tokens").get<std::vector<int>>();
  s.category = category;
  return s;
}

}  // namespace

std::string record_to_jsonl(const SyfisRecord& rec) {
  nlohmann::ordered_json j;
  j["record_id"] = rec.record_id;
  j["world_id"] = rec.world_id;
  j["trajectory_id"] = rec.trajectory_id;
  j["step_index"] = rec.step_index;
  j["source"] = rec.source_id;
  j["target"] = rec.target_id;
  j["candidates"] = rec.candidate_ids;
  j["category"] = category_name(rec.category);
  j["anchor"] = sub_to_json(rec.anchor);
  j["positive"] = sub_to_json(rec.positive);
  auto& negatives = j["negatives"] = nlohmann::ordered_json::array();
  for (const auto& n : rec.negatives) {
    nlohmann::ordered_json jn = sub_to_json(n.sub);
    jn["kind"] = negative_kind_name(n.kind);
    negatives.push_back(std::move(jn));
  }
  return j.dump();
}

SyfisRecord record_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad dataset record: ") + e.what());
  }
  SyfisRecord rec;
  rec.record_id = j.at("record_id").get<std::string>();
  rec.world_id = j.at("world_id").get<std::string>();
  rec.trajectory_id = j.at("trajectory_id").get<int>();
  rec.step_index = j.at("step_index").get<int>();
  rec.source_id = j.at("source").get<std::string>();
  rec.target_id = j.at("target").get<std::string>();
  rec.candidate_ids = j.at("candidates").get<std::vector<std::string>>();
  rec.category = category_from_name(j.at("category").get<std::string>());
  rec.anchor = sub_from_json(j.at("anchor"), rec.category);
  rec.positive = sub_from_json(j.at("positive"), rec.category);
  for (const auto& jn : j.at("negatives"))
    rec.negatives.push_back(
        {sub_from_json(jn, rec.category),
         negative_kind_from_name(jn.at("kind").get<std::string>())});
  if (rec.negatives.size() != 3)
    throw FormatError("record " + rec.record_id +
                      " does not have exactly 3 negatives");
  return rec;
}

std::vector<SyfisRecord> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<SyfisRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_jsonl(line));
  }
  return out;
}

std::vector<std::vector<SyfisRecord>> group_by_trajectory(
    std::vector<SyfisRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const SyfisRecord& a, const SyfisRecord& b) {
                     if (a.world_id != b.world_id) return a.world_id < b.world_id;
                     if (a.trajectory_id != b.trajectory_id)
                       return a.trajectory_id < b.trajectory_id;
                     return a.step_index < b.step_index;
                   });
  std::vector<std::vector<SyfisRecord>> out;
  for (auto& rec : records) {
    if (out.empty() || out.back().back().world_id != rec.world_id ||
        out.back().back().trajectory_id != rec.trajectory_id)
      out.emplace_back();
    out.back().push_back(std::move(rec));
  }
  return out;
}

std::vector<int> teacher_trajectory(const world::EnvironmentGraph& g,
                                    int start, int goal) {
  std::vector<int> path{start};
  int current = start;
  int guard = g.node_count() + 1;
  while (current != goal && guard-- > 0) {
    const int action = world::teacher_action(g, current, goal);
    const auto obs = world::observe(g, current, 0.0);
    current = obs.candidates.entries[action].viewpoint_index;
    path.push_back(current);
  }
  if (current != goal)
    throw NoPathError("teacher rollout failed to reach goal");
  return path;
}

std::vector<int> sample_trajectory(const world::EnvironmentGraph& g,
                                   int len_min, int len_max, Rng& rng,
                                   int max_tries) {
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    const int start = rng.uniform_int(g.node_count());
    const int goal = rng.uniform_int(g.node_count());
    if (start == goal) continue;
    const std::vector<int> path = teacher_trajectory(g, start, goal);
    const int len = static_cast<int>(path.size());
    if (len >= len_min && len <= len_max) return path;
  }
  return {};
}

std::string DatasetStats::to_json() const {
  nlohmann::ordered_json j;
  j["total_steps"] = total_steps;
  j["emitted"] = emitted;
  j["skipped_no_distinctive"] = skipped_no_distinctive;
  j["skipped_insufficient_negatives"] = skipped_insufficient_negatives;
  j["trajectories"] = trajectories;
  j["complete_trajectories"] = complete_trajectories;
  j["hard_negatives"] = hard_negatives;
  j["easy_negatives"] = easy_negatives;
  j["category_counts"] = category_counts;
  j["landmark_class_sizes"] = landmark_class_sizes;
  return j.dump(2);
}

DatasetStats generate_dataset(
    const std::vector<const world::EnvironmentGraph*>& worlds,
    const landmark::Detector& detector, const MotionDictionary& dictionary,
    const Tokenizer& tokenizer, const landmark::LabelVocabulary& labels,
    const DatasetConfig& config, std::uint64_t seed, std::ostream& jsonl_out) {
  if (worlds.empty())
    throw InvalidParameterError("generate_dataset: needs at least one world");

  std::vector<const world::EnvironmentGraph*> ordered = worlds;
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->world_id < b->world_id; });

  DatasetStats stats;
  for (const auto* g : ordered) {
    Rng rng(derive_seed(seed, g->world_id));
    for (int traj_id = 0; traj_id < config.trajectories_per_world; ++traj_id) {
      const std::vector<int> trajectory = sample_trajectory(
          *g, config.path_len_min, config.path_len_max, rng);
      if (trajectory.empty()) continue;
      ++stats.trajectories;
      bool complete = true;
      for (int step = 0; step < static_cast<int>(trajectory.size()); ++step) {
        ++stats.total_steps;
        SkipCounters skips;
        landmark::LandmarkPartition partition;
        auto rec = build_record(*g, trajectory, step, detector, dictionary,
                                tokenizer, labels, config.record, rng, &skips,
                                &partition);
        stats.skipped_no_distinctive += skips.no_distinctive;
        stats.skipped_insufficient_negatives += skips.insufficient_negatives;
        stats.landmark_class_sizes["distinctive"] +=
            static_cast<long>(partition.distinctive.size());
        stats.landmark_class_sizes["nondistinctive"] +=
            static_cast<long>(partition.nondistinctive.size());
        stats.landmark_class_sizes["irrelevant"] +=
            static_cast<long>(partition.irrelevant.size());
        if (!rec) {
          complete = false;
          continue;
        }
        rec->trajectory_id = traj_id;
        rec->record_id = rec->world_id + ":" + std::to_string(traj_id) + ":" +
                         std::to_string(step);
        ++stats.emitted;
        ++stats.category_counts[category_name(rec->category)];
        for (const auto& n : rec->negatives) {
          if (n.kind == NegativeKind::kHard)
            ++stats.hard_negatives;
          else
            ++stats.easy_negatives;
        }
        jsonl_out << record_to_jsonl(*rec) << '\n';
      }
      if (complete) ++stats.complete_trajectories;
    }
  }
  return stats;
}

}  // namespace vlnlab::syfis
