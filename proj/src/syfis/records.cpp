#include "syfis/records.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace vlnlab::syfis {

namespace {

std::vector<int> sub_tokens(const Tokenizer& tokenizer,
                            const std::string& phrase,
                            const std::string& landmark, int l_max) {
  std::vector<int> tokens = tokenizer.tokenize(phrase);
  tokens.push_back(tokenizer.id("the"));
  const std::vector<int> lm = tokenizer.tokenize(landmark);
  tokens.insert(tokens.end(), lm.begin(), lm.end());
  if (static_cast<int>(tokens.size()) > l_max)
    throw InvalidParameterError("sub-instruction exceeds token budget: \"" +
                                phrase + " the " + landmark + "\"");
  return tokens;
}

SubInstruction make_sub(const Tokenizer& tokenizer, MotionCategory category,
                        const std::string& phrase, const std::string& landmark,
                        int l_max) {
  SubInstruction s;
  s.motion_phrase = phrase;
  s.landmark = landmark;
  s.category = category;
  s.tokens = sub_tokens(tokenizer, phrase, landmark, l_max);
  return s;
}

}  // namespace

const char* negative_kind_name(NegativeKind k) {
  return k == NegativeKind::kEasy ? "easy" : "hard";
}

NegativeKind negative_kind_from_name(const std::string& name) {
  if (name == "easy") return NegativeKind::kEasy;
  if (name == "hard") return NegativeKind::kHard;
  throw InvalidParameterError("unknown negative kind: " + name);
}

SubInstruction compose_subinstruction(const MotionDictionary& dictionary,
                                      const Tokenizer& tokenizer,
                                      const landmark::LabelVocabulary& labels,
                                      MotionCategory category,
                                      const std::string& landmark, Rng& rng,
                                      int l_max) {
  labels.index_of(landmark);  // vocabulary check
  const auto& phrases = dictionary.phrases(category);
  const std::string& phrase = phrases[rng.uniform_int(
      static_cast<int>(phrases.size()))];
  return make_sub(tokenizer, category, phrase, landmark, l_max);
}

std::vector<double> trajectory_headings(const world::EnvironmentGraph& g,
                                        std::span<const int> trajectory) {
  std::vector<double> headings(trajectory.size(), 0.0);
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const auto o = world::relative_orientation(
        g.viewpoints[trajectory[t - 1]].position, 0.0,
        g.viewpoints[trajectory[t]].position);
    headings[t] = o.rel_heading;  // absolute bearing of the arrival hop
  }
  return headings;
}

std::optional<SyfisRecord> build_record(
    const world::EnvironmentGraph& g, std::span<const int> trajectory,
    int step_index, const landmark::Detector& detector,
    const MotionDictionary& dictionary, const Tokenizer& tokenizer,
    const landmark::LabelVocabulary& labels, const SyfisConfig& config,
    Rng& rng, SkipCounters* skips,
    landmark::LandmarkPartition* out_partition) {
  if (trajectory.size() < 1)
    throw InvalidInputError("build_record: empty trajectory");
  if (step_index < 0 || step_index >= static_cast<int>(trajectory.size()))
    throw IndexError("build_record: step " + std::to_string(step_index) +
                     " out of trajectory length " +
                     std::to_string(trajectory.size()));

  const bool is_stop = step_index == static_cast<int>(trajectory.size()) - 1;
  const int source = trajectory[step_index];
  const int target = is_stop ? source : trajectory[step_index + 1];
  const std::vector<double> headings = trajectory_headings(g, trajectory);
  const double heading = headings[step_index];

  const world::PanoramicObservation obs = world::observe(g, source, heading);
  const auto& entries = obs.candidates.entries;

  // The step needs at least one candidate beyond the source itself.
  if (g.neighbors(source).empty())
    throw InvalidInputError("build_record: step has no candidates");

  // Target view and classification context. For a move step the target is
  // the candidate entry toward the next node; for the stop step it is the
  // panorama summary, contrasted against every non-stop candidate.
  world::View stop_view;
  const std::vector<double>* target_feature = nullptr;
  double rel_heading = 0.0, rel_elevation = 0.0;
  std::vector<const std::vector<double>*> other_features;
  std::vector<std::string> candidate_ids;
  for (const auto& e : entries) {
    if (e.is_stop) continue;
    candidate_ids.push_back(e.viewpoint_id);
    if (!is_stop && e.viewpoint_index == target) {
      target_feature = &e.view->feature;
      rel_heading = e.rel_heading;
      rel_elevation = e.rel_elevation;
    } else {
      other_features.push_back(&e.view->feature);
    }
  }
  if (is_stop) {
    stop_view = world::panorama_summary_view(g.viewpoints[source],
                                             g.label_count);
    target_feature = &stop_view.feature;
  }
  if (!target_feature)
    throw MalformedTrajectoryError("build_record: target " +
                                   g.viewpoints[target].id +
                                   " is not a candidate of " +
                                   g.viewpoints[source].id);

  const landmark::LandmarkPartition partition = landmark::classify_landmarks(
      *target_feature, other_features, detector, config.k, config.tau1);
  if (out_partition) *out_partition = partition;

  if (partition.distinctive.empty()) {
    if (skips) ++skips->no_distinctive;
    return std::nullopt;
  }

  // Rank irrelevant labels by their best probability across the other
  // candidates, ties by vocabulary order.
  std::map<int, double> irrelevant_best;
  for (const auto* feature : other_features) {
    const auto probs = landmark::label_probabilities(
        landmark::similarity_scores(detector, *feature), config.tau1);
    for (int label : partition.irrelevant) {
      auto [it, inserted] = irrelevant_best.emplace(label, probs[label]);
      if (!inserted) it->second = std::max(it->second, probs[label]);
    }
  }
  std::vector<int> irrelevant_ranked(partition.irrelevant.begin(),
                                     partition.irrelevant.end());
  std::stable_sort(irrelevant_ranked.begin(), irrelevant_ranked.end(),
                   [&](int a, int b) {
                     return irrelevant_best[a] > irrelevant_best[b];
                   });

  // Negative slots: one hard (top nondistinctive) + two easy (top
  // irrelevant). Short pools fill from the other pool, kind tags follow the
  // actual source pool.
  std::vector<std::pair<int, NegativeKind>> negative_labels;
  std::size_t hard_used = 0, easy_used = 0;
  if (!partition.nondistinctive.empty()) {
    negative_labels.emplace_back(partition.nondistinctive[0],
                                 NegativeKind::kHard);
    hard_used = 1;
  }
  while (negative_labels.size() < 3 && easy_used < irrelevant_ranked.size()) {
    negative_labels.emplace_back(irrelevant_ranked[easy_used++],
                                 NegativeKind::kEasy);
  }
  while (negative_labels.size() < 3 &&
         hard_used < partition.nondistinctive.size()) {
    negative_labels.emplace_back(partition.nondistinctive[hard_used++],
                                 NegativeKind::kHard);
  }
  if (negative_labels.size() < 3) {
    if (skips) ++skips->insufficient_negatives;
    return std::nullopt;
  }

  const MotionCategory category = select_motion_category(
      rel_heading, rel_elevation, is_stop, config.heading_threshold);

  const std::string positive_landmark = labels.label(partition.distinctive[0]);

  // One phrase draw shared by the positive and all negatives; the anchor
  // swaps in a different phrase from the same category (reused when the
  // category has a single phrase).
  const auto& phrases = dictionary.phrases(category);
  const std::string positive_phrase =
      phrases[rng.uniform_int(static_cast<int>(phrases.size()))];
  std::vector<std::string> anchor_choices;
  for (const auto& p : phrases)
    if (p != positive_phrase) anchor_choices.push_back(p);
  const std::string anchor_phrase =
      anchor_choices.empty()
          ? positive_phrase
          : anchor_choices[rng.uniform_int(
                static_cast<int>(anchor_choices.size()))];

  SyfisRecord rec;
  rec.world_id = g.world_id;
  rec.step_index = step_index;
  rec.source_id = g.viewpoints[source].id;
  rec.target_id = g.viewpoints[target].id;
  rec.candidate_ids = std::move(candidate_ids);
  rec.category = category;
  rec.positive = make_sub(tokenizer, category, positive_phrase,
                          positive_landmark, config.l_max);
  rec.anchor = make_sub(tokenizer, category, anchor_phrase, positive_landmark,
                        config.l_max);
  for (const auto& [label, kind] : negative_labels)
    rec.negatives.push_back({make_sub(tokenizer, category, positive_phrase,
                                      labels.label(label), config.l_max),
                             kind});
  return rec;
}

TrajectoryInstruction compose_trajectory_instruction(
    std::span<const SyfisRecord> records) {
  if (records.empty())
    throw InvalidInputError("compose_trajectory_instruction: no records");
  TrajectoryInstruction out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SyfisRecord& r = records[i];
    if (r.trajectory_id != records[0].trajectory_id ||
        r.world_id != records[0].world_id)
      throw MalformedTrajectoryError(
          "records from different trajectories cannot be composed");
    if (r.step_index != static_cast<int>(i))
      throw MalformedTrajectoryError(
          "gap in step indices at position " + std::to_string(i) +
          " (step " + std::to_string(r.step_index) + ")");
    const int begin = static_cast<int>(out.tokens.size());
    out.tokens.insert(out.tokens.end(), r.positive.tokens.begin(),
                      r.positive.tokens.end());
    out.spans.emplace_back(begin, static_cast<int>(out.tokens.size()));
  }
  return out;
}

std::vector<double> span_mask(const TrajectoryInstruction& instr, int step) {
  if (step < 0 || step >= static_cast<int>(instr.spans.size()))
    throw IndexError("span_mask: step out of range");
  std::vector<double> mask(instr.tokens.size(), 0.0);
  for (int t = instr.spans[step].first; t < instr.spans[step].second; ++t)
    mask[t] = 1.0;
  return mask;
}

}  // namespace vlnlab::syfis
