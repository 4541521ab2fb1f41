#ifndef VLNLAB_WORLDSIM_WORLD_HPP
#define VLNLAB_WORLDSIM_WORLD_HPP

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common/errors.hpp"
#include "common/rng.hpp"

namespace vlnlab::world {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

inline constexpr int kHeadings = 12;
inline constexpr int kElevations = 3;
inline constexpr int kViewsPerViewpoint = kHeadings * kElevations;

// One directional image stand-in: ground-truth object labels plus a noisy
// L2-normalized bag-of-objects feature.
struct View {
  std::vector<int> object_labels;  // sorted ascending, drawn from [0, M)
  std::vector<double> feature;     // length M
};

struct Viewpoint {
  std::string id;
  Vec3 position;
  std::array<View, kViewsPerViewpoint> views;  // index = heading * 3 + elev

  const View& view(int heading_index, int elevation_index) const {
    return views[heading_index * kElevations + elevation_index];
  }
};

struct Edge {
  int a = 0, b = 0;  // viewpoint indices, a < b
  double dist = 0.0;
};

// Immutable navigable world. All operations are pure reads; safe to share
// across threads once finalize() has run.
class EnvironmentGraph {
 public:
  std::string world_id;
  std::uint64_t seed = 0;
  std::string split;  // "seen" | "unseen"
  int label_count = 0;
  std::vector<Viewpoint> viewpoints;
  std::vector<Edge> edges;

  // Builds adjacency and validates every graph invariant (connectivity,
  // edge/Euclidean agreement, no self-loops, 36 views, uniform feature dim).
  void finalize();

  int index_of(const std::string& id) const;
  const std::vector<std::pair<int, double>>& neighbors(int vp_index) const;
  int node_count() const { return static_cast<int>(viewpoints.size()); }

 private:
  std::unordered_map<std::string, int> id_index_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
};

struct WorldGenParams {
  int node_count = 36;
  int label_count = 40;
  double spacing = 1.0;
  double xy_jitter = 0.25;
  double z_jitter = 0.35;
  double extra_edge_prob = 0.18;
  double zipf_exponent = 0.9;
  double mean_objects_per_view = 2.0;
  double feature_noise_sigma = 0.05;
};

EnvironmentGraph generate_world(std::uint64_t seed, const WorldGenParams& params,
                                const std::string& split);

// Dijkstra with smallest-id tie-breaking on predecessors.
struct PathResult {
  std::vector<int> path;  // viewpoint indices
  double length = 0.0;
};
PathResult shortest_path(const EnvironmentGraph& g, int a, int b);
PathResult shortest_path_by_id(const EnvironmentGraph& g, const std::string& a,
                               const std::string& b);

// Geodesic distance from `source` to every node (inf where unreachable).
std::vector<double> distances_from(const EnvironmentGraph& g, int source);

// Heading convention: degrees clockwise from +y, so positive relative
// heading means the target lies to the agent's right.
struct Orientation {
  double rel_heading = 0.0;    // (-180, 180]
  double rel_elevation = 0.0;  // [-90, 90]
};
Orientation relative_orientation(const Vec3& current, double heading_deg,
                                 const Vec3& target);
double normalize_heading(double deg);  // into (-180, 180]

struct CandidateEntry {
  int viewpoint_index = -1;   // equals current for the STOP entry
  std::string viewpoint_id;
  double rel_heading = 0.0;
  double rel_elevation = 0.0;
  const View* view = nullptr;  // null for STOP
  bool is_stop = false;
};

struct CandidateSet {
  std::vector<CandidateEntry> entries;  // sorted by (heading, elevation, id)
  int stop_index = -1;
};

struct PanoramicObservation {
  const Viewpoint* viewpoint = nullptr;  // the 36 views
  CandidateSet candidates;
};

PanoramicObservation observe(const EnvironmentGraph& g, int vp_index,
                             double heading_deg);

// Index of the next-hop candidate on a shortest path to `goal` (ties broken
// by smallest viewpoint id), or the STOP index when already there. The
// heading determines candidate ordering only, not the chosen node.
int teacher_action(const EnvironmentGraph& g, int current, int goal,
                   double heading_deg = 0.0);

// Directional view bucket for the displacement current -> target.
std::pair<int, int> view_bucket(const Vec3& current, const Vec3& target);

// Inputs the models consume per candidate: bag-of-objects feature (M),
// sin/cos of relative heading and elevation, and a stop flag.
inline constexpr int kCandidateExtraDims = 5;
std::vector<double> candidate_feature_vector(const CandidateEntry& e,
                                             int label_count);

// Aggregate of a viewpoint's panorama; used as the target "view" of a stop
// step. Labels are the union over the 36 views; the feature is the
// L2-normalized mean of the stored view features.
View panorama_summary_view(const Viewpoint& vp, int label_count);

}  // namespace vlnlab::world

#endif  // VLNLAB_WORLDSIM_WORLD_HPP
