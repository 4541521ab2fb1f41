#ifndef VLNLAB_EVALMETRICS_METRICS_HPP
#define VLNLAB_EVALMETRICS_METRICS_HPP

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "landmark/landmark.hpp"
#include "worldsim/world.hpp"

namespace vlnlab::metrics {

struct TrajectoryPair {
  const world::EnvironmentGraph* graph = nullptr;
  std::vector<int> predicted;  // node indices, consecutive nodes adjacent
  std::vector<int> reference;
  double success_radius = 1.0;
};

void validate_pair(const TrajectoryPair& pair);

// Geodesic distance between the endpoints of predicted and reference.
double navigation_error(const TrajectoryPair& pair);

struct SrSpl {
  int sr = 0;      // 1 iff the endpoint lies within the success radius
  double spl = 0.0;
};
SrSpl success_rate_spl(const TrajectoryPair& pair);

struct DtwResult {
  double dtw = 0.0;
  double ndtw = 0.0;  // exp(-dtw / (|R| * radius))
  double sdtw = 0.0;  // sr * ndtw
};
DtwResult dtw_ndtw_sdtw(const TrajectoryPair& pair);

// Coverage weighted by length score: PC * LS with the geodesic
// node-to-path distance, matching the NE distance notion.
double cls(const TrajectoryPair& pair);

struct EvalResult {
  double ne = 0.0;
  int sr = 0;
  double spl = 0.0;
  double cls = 0.0;
  double ndtw = 0.0;
  double sdtw = 0.0;
  double path_length = 0.0;
};
EvalResult evaluate_pair(const TrajectoryPair& pair);

struct Aggregate {
  double ne = 0.0, sr = 0.0, spl = 0.0, cls = 0.0, ndtw = 0.0, sdtw = 0.0;
  long episodes = 0;
};
Aggregate aggregate(std::span<const EvalResult> results);

// ne,sr,spl,cls,ndtw,sdtw rows, one per episode.
void write_csv(std::span<const EvalResult> results, std::ostream& out);

// Delimited summary mirroring the usual NE / SR / SPL / CLS / sDTW layout.
void write_summary_table(
    std::span<const std::pair<std::string, Aggregate>> rows,
    std::ostream& out);

// Landmark/object overlap analysis: fraction of instruction landmarks that
// are recognizable somewhere along the visited path, binned into deciles,
// split into all vs successful episodes.
struct OverlapInput {
  std::vector<int> instruction_landmarks;
  std::vector<int> visited;  // node indices
  bool success = false;
};

struct OverlapReport {
  std::array<long, 11> all_bins{};      // floor(overlap * 10), 100% in bin 10
  std::array<long, 11> success_bins{};
  long included = 0;
  long excluded_zero_landmarks = 0;
};

OverlapReport overlap_report(const world::EnvironmentGraph& g,
                             std::span<const OverlapInput> episodes,
                             const landmark::Detector& detector, int k,
                             double tau1);

}  // namespace vlnlab::metrics

#endif  // VLNLAB_EVALMETRICS_METRICS_HPP
