#include <algorithm>
#include <cmath>
#include <set>

#include "worldsim/world.hpp"

namespace vlnlab::world {

namespace {

// Zipf-like label sampler over [0, M): weight 1/(i+1)^s. Skewed labels mimic
// the indoor-scene frequency imbalance that makes some landmarks generic.
class ZipfSampler {
 public:
  ZipfSampler(int m, double exponent) {
    cumulative_.reserve(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cumulative_.push_back(total);
    }
  }

  int draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    const auto it =
        std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<int>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

std::string viewpoint_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%03d", index);
  return buf;
}

}  // namespace

EnvironmentGraph generate_world(std::uint64_t seed,
                                const WorldGenParams& params,
                                const std::string& split) {
  if (params.node_count < 2)
    throw InvalidParameterError("generate_world: node_count must be >= 2");
  if (params.label_count < 2)
    throw InvalidParameterError("generate_world: label_count must be >= 2");
  if (split != "seen" && split != "unseen")
    throw InvalidParameterError("generate_world: split must be seen|unseen");

  Rng rng(seed);
  EnvironmentGraph g;
  g.world_id = split + "-" + std::to_string(seed);
  g.seed = seed;
  g.split = split;
  g.label_count = params.label_count;

  const int n = params.node_count;
  const int grid_w = static_cast<int>(std::ceil(std::sqrt(double(n))));

  // Perturbed lattice positions; spacing keeps mean edge length near 1.
  g.viewpoints.resize(n);
  for (int i = 0; i < n; ++i) {
    const int gx = i % grid_w, gy = i / grid_w;
    Viewpoint& vp = g.viewpoints[i];
    vp.id = viewpoint_name(i);
    vp.position.x =
        gx * params.spacing + rng.uniform(-params.xy_jitter, params.xy_jitter);
    vp.position.y =
        gy * params.spacing + rng.uniform(-params.xy_jitter, params.xy_jitter);
    vp.position.z = rng.uniform(-params.z_jitter, params.z_jitter);
  }

  // Lattice edges keep the graph connected; diagonal extras add variety.
  auto add_edge = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    g.edges.push_back(
        {a, b, distance(g.viewpoints[a].position, g.viewpoints[b].position)});
  };
  for (int i = 0; i < n; ++i) {
    const int gx = i % grid_w;
    if (gx + 1 < grid_w && i + 1 < n) add_edge(i, i + 1);
    if (i + grid_w < n) add_edge(i, i + grid_w);
  }
  for (int i = 0; i < n; ++i) {
    const int gx = i % grid_w;
    if (gx + 1 < grid_w && i + grid_w + 1 < n &&
        rng.uniform() < params.extra_edge_prob)
      add_edge(i, i + grid_w + 1);
    if (gx > 0 && i + grid_w - 1 < n && rng.uniform() < params.extra_edge_prob)
      add_edge(i, i + grid_w - 1);
  }

  // Per-view object sets and features. Every view carries at least one
  // object so the detector never scores a blank image.
  const ZipfSampler zipf(params.label_count, params.zipf_exponent);
  const int max_objects = std::max(
      1, static_cast<int>(std::lround(2.0 * params.mean_objects_per_view - 1.0)));
  for (auto& vp : g.viewpoints) {
    for (auto& view : vp.views) {
      const int count = 1 + rng.uniform_int(max_objects);
      std::set<int> labels;
      int tries = 0;
      while (static_cast<int>(labels.size()) < count && tries < 64) {
        labels.insert(zipf.draw(rng));
        ++tries;
      }
      view.object_labels.assign(labels.begin(), labels.end());
      view.feature.assign(params.label_count, 0.0);
      const double unit = 1.0 / std::sqrt(static_cast<double>(labels.size()));
      for (int label : view.object_labels) view.feature[label] = unit;
      if (params.feature_noise_sigma > 0.0)
        for (double& f : view.feature)
          f += params.feature_noise_sigma * rng.normal();
    }
  }

  g.finalize();
  return g;
}

}  // namespace vlnlab::world
