#ifndef VLNLAB_SYFIS_RECORDS_HPP
#define VLNLAB_SYFIS_RECORDS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "landmark/landmark.hpp"
#include "syfis/motion.hpp"
#include "syfis/tokenizer.hpp"
#include "worldsim/world.hpp"

namespace vlnlab::syfis {

struct SubInstruction {
  std::string motion_phrase;
  std::string landmark;
  MotionCategory category = MotionCategory::kForward;
  std::vector<int> tokens;  // tokenize(phrase) ++ ["the"] ++ tokenize(landmark)
};

SubInstruction compose_subinstruction(const MotionDictionary& dictionary,
                                      const Tokenizer& tokenizer,
                                      const landmark::LabelVocabulary& labels,
                                      MotionCategory category,
                                      const std::string& landmark, Rng& rng,
                                      int l_max = 8);

enum class NegativeKind { kEasy, kHard };
const char* negative_kind_name(NegativeKind k);
NegativeKind negative_kind_from_name(const std::string& name);

struct Negative {
  SubInstruction sub;
  NegativeKind kind;
};

// One navigation step's contrastive bundle.
struct SyfisRecord {
  std::string record_id;
  std::string world_id;
  int trajectory_id = 0;
  int step_index = 0;
  std::string source_id;
  std::string target_id;  // == source_id on the stop step
  std::vector<std::string> candidate_ids;  // non-stop candidates, canonical order
  MotionCategory category = MotionCategory::kForward;
  SubInstruction anchor;
  SubInstruction positive;
  std::vector<Negative> negatives;  // exactly 3
};

struct SyfisConfig {
  int k = 5;
  double tau1 = 0.1;
  double heading_threshold = 30.0;
  int l_max = 8;
};

struct SkipCounters {
  long no_distinctive = 0;
  long insufficient_negatives = 0;
  long total() const { return no_distinctive + insufficient_negatives; }
};

// Heading on arrival at each trajectory node: 0 at the start, then the
// absolute bearing of the previous hop. Candidate ordering and motion
// categories both depend on it.
std::vector<double> trajectory_headings(const world::EnvironmentGraph& g,
                                        std::span<const int> trajectory);

// Builds the record for one trajectory step, or skips when the step has no
// distinctive landmark / not enough negative material. Steps 0..T-2 are
// moves; step T-1 is the stop step at the final viewpoint.
std::optional<SyfisRecord> build_record(
    const world::EnvironmentGraph& g, std::span<const int> trajectory,
    int step_index, const landmark::Detector& detector,
    const MotionDictionary& dictionary, const Tokenizer& tokenizer,
    const landmark::LabelVocabulary& labels, const SyfisConfig& config,
    Rng& rng, SkipCounters* skips,
    landmark::LandmarkPartition* out_partition = nullptr);

// Full-trajectory instruction: concatenated positive token sequences plus
// per-step token spans (the ground truth for sub-instruction split masks).
struct TrajectoryInstruction {
  std::vector<int> tokens;
  std::vector<std::pair<int, int>> spans;  // [begin, end) per step
};
TrajectoryInstruction compose_trajectory_instruction(
    std::span<const SyfisRecord> records);

// Materializes the 0/1 mask for one step's span over the whole instruction.
std::vector<double> span_mask(const TrajectoryInstruction& instr, int step);

}  // namespace vlnlab::syfis

#endif  // VLNLAB_SYFIS_RECORDS_HPP
