#include "worldsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace vlnlab::world {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDistanceTolerance = 1e-9;

double deg(double rad) { return rad * 180.0 / kPi; }
double rad(double d) { return d * kPi / 180.0; }
}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void EnvironmentGraph::finalize() {
  if (viewpoints.size() < 2)
    throw InvalidParameterError("graph needs at least 2 viewpoints");
  id_index_.clear();
  for (int i = 0; i < node_count(); ++i) {
    const auto& vp = viewpoints[i];
    if (!id_index_.emplace(vp.id, i).second)
      throw InvalidParameterError("duplicate viewpoint id: " + vp.id);
    if (!std::isfinite(vp.position.x) || !std::isfinite(vp.position.y) ||
        !std::isfinite(vp.position.z))
      throw NumericError("viewpoint position not finite: " + vp.id);
    for (const auto& view : vp.views) {
      if (static_cast<int>(view.feature.size()) != label_count)
        throw ShapeError("view feature dim " +
                         std::to_string(view.feature.size()) +
                         " != label count " + std::to_string(label_count));
      for (int label : view.object_labels)
        if (label < 0 || label >= label_count)
          throw IndexError("object label out of vocabulary: " +
                           std::to_string(label));
    }
  }

  adjacency_.assign(viewpoints.size(), {});
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= node_count() || e.b >= node_count())
      throw IndexError("edge endpoint out of range");
    if (e.a == e.b) throw InvalidParameterError("self-loop edge on " +
                                                viewpoints[e.a].id);
    if (!seen.emplace(std::min(e.a, e.b), std::max(e.a, e.b)).second)
      throw InvalidParameterError("duplicate edge");
    const double euclid =
        distance(viewpoints[e.a].position, viewpoints[e.b].position);
    if (std::abs(euclid - e.dist) > kDistanceTolerance)
      throw InvalidParameterError("edge distance " + std::to_string(e.dist) +
                                  " does not equal Euclidean distance");
    adjacency_[e.a].emplace_back(e.b, e.dist);
    adjacency_[e.b].emplace_back(e.a, e.dist);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

  // Connectivity: BFS from node 0 must reach all nodes.
  std::vector<char> visited(viewpoints.size(), 0);
  std::queue<int> q;
  q.push(0);
  visited[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& [v, w] : adjacency_[u])
      if (!visited[v]) {
        visited[v] = 1;
        ++reached;
        q.push(v);
      }
  }
  if (reached != node_count())
    throw InvalidParameterError("graph is not connected");
}

int EnvironmentGraph::index_of(const std::string& id) const {
  auto it = id_index_.find(id);
  if (it == id_index_.end())
    throw NotFoundError("unknown viewpoint id: " + id);
  return it->second;
}

const std::vector<std::pair<int, double>>& EnvironmentGraph::neighbors(
    int vp_index) const {
  if (vp_index < 0 || vp_index >= node_count())
    throw NotFoundError("viewpoint index out of range: " +
                        std::to_string(vp_index));
  return adjacency_[vp_index];
}

PathResult shortest_path(const EnvironmentGraph& g, int a, int b) {
  if (a < 0 || a >= g.node_count() || b < 0 || b >= g.node_count())
    throw NotFoundError("shortest_path: viewpoint index out of range");
  const int n = g.node_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> pred(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[a] = 0.0;
  pq.emplace(0.0, a);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : g.neighbors(u)) {
      const double nd = d + w;
      if (nd < dist[v] ||
          (nd == dist[v] && pred[v] >= 0 &&
           g.viewpoints[u].id < g.viewpoints[pred[v]].id)) {
        dist[v] = nd;
        pred[v] = u;
        pq.emplace(nd, v);
      }
    }
  }
  if (dist[b] == inf)
    throw NoPathError("no path between " + g.viewpoints[a].id + " and " +
                      g.viewpoints[b].id);
  PathResult out;
  out.length = dist[b];
  for (int v = b; v != -1; v = pred[v]) out.path.push_back(v);
  std::reverse(out.path.begin(), out.path.end());
  return out;
}

PathResult shortest_path_by_id(const EnvironmentGraph& g, const std::string& a,
                               const std::string& b) {
  return shortest_path(g, g.index_of(a), g.index_of(b));
}

std::vector<double> distances_from(const EnvironmentGraph& g, int source) {
  if (source < 0 || source >= g.node_count())
    throw NotFoundError("distances_from: index out of range");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.node_count(), inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : g.neighbors(u))
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pq.emplace(dist[v], v);
      }
  }
  return dist;
}

double normalize_heading(double d) {
  d = std::fmod(d, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Orientation relative_orientation(const Vec3& current, double heading_deg,
                                 const Vec3& target) {
  const double dx = target.x - current.x;
  const double dy = target.y - current.y;
  const double dz = target.z - current.z;
  const double planar = std::sqrt(dx * dx + dy * dy);
  if (planar == 0.0 && dz == 0.0) return {0.0, 0.0};
  const double bearing = deg(std::atan2(dx, dy));  // clockwise from +y
  Orientation out;
  out.rel_heading = normalize_heading(bearing - heading_deg);
  out.rel_elevation = deg(std::atan2(dz, planar));
  return out;
}

std::pair<int, int> view_bucket(const Vec3& current, const Vec3& target) {
  const Orientation abs = relative_orientation(current, 0.0, target);
  int h = static_cast<int>(std::lround(abs.rel_heading / 30.0));
  h = ((h % kHeadings) + kHeadings) % kHeadings;
  int e = 1;
  if (abs.rel_elevation < -15.0) e = 0;
  else if (abs.rel_elevation > 15.0) e = 2;
  return {h, e};
}

PanoramicObservation observe(const EnvironmentGraph& g, int vp_index,
                             double heading_deg) {
  if (vp_index < 0 || vp_index >= g.node_count())
    throw NotFoundError("observe: viewpoint index out of range");
  const Viewpoint& cur = g.viewpoints[vp_index];

  PanoramicObservation obs;
  obs.viewpoint = &cur;
  auto& entries = obs.candidates.entries;
  for (const auto& [nb, w] : g.neighbors(vp_index)) {
    const Viewpoint& other = g.viewpoints[nb];
    CandidateEntry e;
    e.viewpoint_index = nb;
    e.viewpoint_id = other.id;
    const Orientation rel =
        relative_orientation(cur.position, heading_deg, other.position);
    e.rel_heading = rel.rel_heading;
    e.rel_elevation = rel.rel_elevation;
    const auto [hb, eb] = view_bucket(cur.position, other.position);
    e.view = &cur.view(hb, eb);
    entries.push_back(std::move(e));
  }
  CandidateEntry stop;
  stop.viewpoint_index = vp_index;
  stop.viewpoint_id = cur.id;
  stop.is_stop = true;
  entries.push_back(std::move(stop));

  std::sort(entries.begin(), entries.end(),
            [](const CandidateEntry& a, const CandidateEntry& b) {
              if (a.rel_heading != b.rel_heading)
                return a.rel_heading < b.rel_heading;
              if (a.rel_elevation != b.rel_elevation)
                return a.rel_elevation < b.rel_elevation;
              if (a.viewpoint_id != b.viewpoint_id)
                return a.viewpoint_id < b.viewpoint_id;
              return a.is_stop < b.is_stop;
            });
  for (int i = 0; i < static_cast<int>(entries.size()); ++i)
    if (entries[i].is_stop) obs.candidates.stop_index = i;
  return obs;
}

int teacher_action(const EnvironmentGraph& g, int current, int goal,
                   double heading_deg) {
  if (current < 0 || current >= g.node_count() || goal < 0 ||
      goal >= g.node_count())
    throw NotFoundError("teacher_action: viewpoint index out of range");
  const PanoramicObservation obs = observe(g, current, heading_deg);
  if (current == goal) return obs.candidates.stop_index;

  const std::vector<double> dist_to_goal = distances_from(g, goal);
  if (!std::isfinite(dist_to_goal[current]))
    throw NoPathError("teacher_action: goal unreachable from " +
                      g.viewpoints[current].id);
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& [nb, w] : g.neighbors(current)) {
    const double cost = w + dist_to_goal[nb];
    if (cost < best_cost ||
        (cost == best_cost && best >= 0 &&
         g.viewpoints[nb].id < g.viewpoints[best].id)) {
      best_cost = cost;
      best = nb;
    }
  }
  for (int i = 0; i < static_cast<int>(obs.candidates.entries.size()); ++i)
    if (!obs.candidates.entries[i].is_stop &&
        obs.candidates.entries[i].viewpoint_index == best)
      return i;
  throw NoPathError("teacher_action: no candidate toward goal");
}

std::vector<double> candidate_feature_vector(const CandidateEntry& e,
                                             int label_count) {
  std::vector<double> out(label_count + kCandidateExtraDims, 0.0);
  if (!e.is_stop && e.view) {
    if (static_cast<int>(e.view->feature.size()) != label_count)
      throw ShapeError("candidate view feature dim mismatch");
    std::copy(e.view->feature.begin(), e.view->feature.end(), out.begin());
  }
  out[label_count + 0] = std::sin(rad(e.rel_heading));
  out[label_count + 1] = std::cos(rad(e.rel_heading));
  out[label_count + 2] = std::sin(rad(e.rel_elevation));
  out[label_count + 3] = std::cos(rad(e.rel_elevation));
  out[label_count + 4] = e.is_stop ? 1.0 : 0.0;
  return out;
}

View panorama_summary_view(const Viewpoint& vp, int label_count) {
  View out;
  std::set<int> labels;
  out.feature.assign(label_count, 0.0);
  for (const auto& v : vp.views) {
    for (int label : v.object_labels) labels.insert(label);
    for (int j = 0; j < label_count; ++j) out.feature[j] += v.feature[j];
  }
  double norm = 0.0;
  for (double f : out.feature) norm += f * f;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& f : out.feature) f /= norm;
  out.object_labels.assign(labels.begin(), labels.end());
  return out;
}

}  // namespace vlnlab::world
