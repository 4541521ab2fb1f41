#ifndef VLNLAB_SYFIS_DATASET_HPP
#define VLNLAB_SYFIS_DATASET_HPP

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "syfis/records.hpp"

namespace vlnlab::syfis {

struct DatasetConfig {
  SyfisConfig record;
  int trajectories_per_world = 0;
  int path_len_min = 5;  // viewpoints per trajectory
  int path_len_max = 7;
};

struct DatasetStats {
  long total_steps = 0;
  long emitted = 0;
  long skipped_no_distinctive = 0;
  long skipped_insufficient_negatives = 0;
  long trajectories = 0;
  long complete_trajectories = 0;  // no skipped step
  long hard_negatives = 0;
  long easy_negatives = 0;
  std::map<std::string, long> category_counts;
  std::map<std::string, long> landmark_class_sizes;  // summed set sizes
  std::string to_json() const;
};

// Samples teacher-path trajectories per world and emits records in canonical
// (world_id, trajectory_id, step_index) order. Deterministic in `seed`.
DatasetStats generate_dataset(
    const std::vector<const world::EnvironmentGraph*>& worlds,
    const landmark::Detector& detector, const MotionDictionary& dictionary,
    const Tokenizer& tokenizer, const landmark::LabelVocabulary& labels,
    const DatasetConfig& config, std::uint64_t seed, std::ostream& jsonl_out);

// Canonical teacher-path trajectory between start and goal.
std::vector<int> teacher_trajectory(const world::EnvironmentGraph& g,
                                    int start, int goal);

// Samples (start, goal) whose teacher path has the requested viewpoint
// count; empty when no admissible pair is found within the try budget.
std::vector<int> sample_trajectory(const world::EnvironmentGraph& g,
                                   int len_min, int len_max, Rng& rng,
                                   int max_tries = 300);

std::string record_to_jsonl(const SyfisRecord& rec);
SyfisRecord record_from_jsonl(const std::string& line);
std::vector<SyfisRecord> load_records(const std::string& path);

// Records of one trajectory, grouped in step order.
std::vector<std::vector<SyfisRecord>> group_by_trajectory(
    std::vector<SyfisRecord> records);

}  // namespace vlnlab::syfis

#endif  // VLNLAB_SYFIS_DATASET_HPP
