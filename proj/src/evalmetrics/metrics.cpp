#include "evalmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "common/textfmt.hpp"

namespace vlnlab::metrics {

namespace {

double path_length(const world::EnvironmentGraph& g,
                   const std::vector<int>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i)
    total += world::distance(g.viewpoints[path[i - 1]].position,
                             g.viewpoints[path[i]].position);
  return total;
}

// Geodesic distances from every reference node; one Dijkstra per node.
std::vector<std::vector<double>> reference_distance_tables(
    const TrajectoryPair& pair) {
  std::vector<std::vector<double>> tables;
  tables.reserve(pair.reference.size());
  for (int node : pair.reference)
    tables.push_back(world::distances_from(*pair.graph, node));
  return tables;
}

}  // namespace

void validate_pair(const TrajectoryPair& pair) {
  if (!pair.graph) throw InvalidInputError("trajectory pair has no graph");
  if (pair.predicted.empty() || pair.reference.empty())
    throw InvalidInputError("trajectory pair has an empty path");
  if (pair.success_radius <= 0.0)
    throw InvalidParameterError("success radius must be positive");
  for (const auto* path : {&pair.predicted, &pair.reference}) {
    for (std::size_t i = 0; i < path->size(); ++i) {
      const int node = (*path)[i];
      if (node < 0 || node >= pair.graph->node_count())
        throw NotFoundError("trajectory node out of range");
      if (i > 0) {
        bool adjacent = false;
        for (const auto& [nb, w] : pair.graph->neighbors((*path)[i - 1]))
          if (nb == node) adjacent = true;
        if (!adjacent)
          throw InvalidInputError("trajectory nodes not adjacent: " +
                                  pair.graph->viewpoints[(*path)[i - 1]].id +
                                  " -> " + pair.graph->viewpoints[node].id);
      }
    }
  }
}

double navigation_error(const TrajectoryPair& pair) {
  validate_pair(pair);
  const auto dist =
      world::distances_from(*pair.graph, pair.reference.back());
  const double ne = dist[pair.predicted.back()];
  if (!std::isfinite(ne))
    throw NoPathError("navigation_error: endpoint unreachable from goal");
  return ne;
}

SrSpl success_rate_spl(const TrajectoryPair& pair) {
  validate_pair(pair);
  const double ne = navigation_error(pair);
  SrSpl out;
  out.sr = ne <= pair.success_radius ? 1 : 0;
  const double shortest =
      world::shortest_path(*pair.graph, pair.predicted.front(),
                           pair.reference.back())
          .length;
  const double walked = path_length(*pair.graph, pair.predicted);
  if (shortest == 0.0) {
    out.spl = out.sr;  // start == goal; any success is optimal
  } else {
    out.spl = out.sr * shortest / std::max(walked, shortest);
  }
  return out;
}

DtwResult dtw_ndtw_sdtw(const TrajectoryPair& pair) {
  validate_pair(pair);
  const auto tables = reference_distance_tables(pair);
  const int np = static_cast<int>(pair.predicted.size());
  const int nr = static_cast<int>(pair.reference.size());
  const double inf = std::numeric_limits<double>::infinity();

  // dp[i][j]: cost of the best monotone alignment of predicted[0..i] and
  // reference[0..j], both prefixes fully covered.
  std::vector<std::vector<double>> dp(np, std::vector<double>(nr, inf));
  auto cost = [&](int i, int j) { return tables[j][pair.predicted[i]]; };
  dp[0][0] = cost(0, 0);
  for (int i = 1; i < np; ++i) dp[i][0] = dp[i - 1][0] + cost(i, 0);
  for (int j = 1; j < nr; ++j) dp[0][j] = dp[0][j - 1] + cost(0, j);
  for (int i = 1; i < np; ++i)
    for (int j = 1; j < nr; ++j)
      dp[i][j] = cost(i, j) +
                 std::min({dp[i - 1][j], dp[i][j - 1], dp[i - 1][j - 1]});

  DtwResult out;
  out.dtw = dp[np - 1][nr - 1];
  out.ndtw = std::exp(-out.dtw / (nr * pair.success_radius));
  out.sdtw = success_rate_spl(pair).sr * out.ndtw;
  return out;
}

double cls(const TrajectoryPair& pair) {
  validate_pair(pair);
  const auto tables = reference_distance_tables(pair);
  const int nr = static_cast<int>(pair.reference.size());

  double pc = 0.0;
  for (int j = 0; j < nr; ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int node : pair.predicted) nearest = std::min(nearest, tables[j][node]);
    pc += std::exp(-nearest / pair.success_radius);
  }
  pc /= nr;

  const double ref_length = path_length(*pair.graph, pair.reference);
  const double pred_length = path_length(*pair.graph, pair.predicted);
  const double epl = pc * ref_length;
  const double denom = epl + std::abs(epl - pred_length);
  const double ls = denom == 0.0 ? 1.0 : epl / denom;
  return pc * ls;
}

EvalResult evaluate_pair(const TrajectoryPair& pair) {
  EvalResult out;
  out.ne = navigation_error(pair);
  const SrSpl s = success_rate_spl(pair);
  out.sr = s.sr;
  out.spl = s.spl;
  out.cls = cls(pair);
  const DtwResult d = dtw_ndtw_sdtw(pair);
  out.ndtw = d.ndtw;
  out.sdtw = d.sdtw;
  out.path_length = path_length(*pair.graph, pair.predicted);
  return out;
}

Aggregate aggregate(std::span<const EvalResult> results) {
  Aggregate a;
  a.episodes = static_cast<long>(results.size());
  if (results.empty()) return a;
  for (const auto& r : results) {
    a.ne += r.ne;
    a.sr += r.sr;
    a.spl += r.spl;
    a.cls += r.cls;
    a.ndtw += r.ndtw;
    a.sdtw += r.sdtw;
  }
  const double n = static_cast<double>(results.size());
  a.ne /= n;
  a.sr /= n;
  a.spl /= n;
  a.cls /= n;
  a.ndtw /= n;
  a.sdtw /= n;
  return a;
}

void write_csv(std::span<const EvalResult> results, std::ostream& out) {
  out << "ne,sr,spl,cls,ndtw,sdtw,path_length\n";
  for (const auto& r : results)
    out << fmt_double17(r.ne) << ',' << r.sr << ',' << fmt_double17(r.spl)
        << ',' << fmt_double17(r.cls) << ',' << fmt_double17(r.ndtw) << ','
        << fmt_double17(r.sdtw) << ',' << fmt_double17(r.path_length) << '\n';
}

void write_summary_table(
    std::span<const std::pair<std::string, Aggregate>> rows,
    std::ostream& out) {
  out << "config                          |   N |  NE v |  SR ^ | SPL ^ | "
         "CLS ^ | sDTW ^\n";
  for (const auto& [name, a] : rows) {
    out << name;
    for (std::size_t i = name.size(); i < 32; ++i) out << ' ';
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "| %3ld | %5.2f | %5.3f | %5.3f | %5.3f | %5.3f\n",
                  a.episodes, a.ne, a.sr, a.spl, a.cls, a.sdtw);
    out << buf;
  }
}

OverlapReport overlap_report(const world::EnvironmentGraph& g,
                             std::span<const OverlapInput> episodes,
                             const landmark::Detector& detector, int k,
                             double tau1) {
  OverlapReport report;
  for (const auto& ep : episodes) {
    if (ep.instruction_landmarks.empty()) {
      ++report.excluded_zero_landmarks;
      continue;
    }
    std::set<int> on_path;
    for (int node : ep.visited) {
      const auto& vp = g.viewpoints.at(node);
      for (const auto& view : vp.views) {
        const auto topk =
            landmark::recognizable_landmarks(detector, view.feature, k, tau1);
        on_path.insert(topk.begin(), topk.end());
      }
    }
    const std::set<int> mentioned(ep.instruction_landmarks.begin(),
                                  ep.instruction_landmarks.end());
    long hit = 0;
    for (int label : mentioned)
      if (on_path.count(label)) ++hit;
    const double overlap =
        static_cast<double>(hit) / static_cast<double>(mentioned.size());
    const int bin = std::min(10, static_cast<int>(overlap * 10.0));
    ++report.all_bins[bin];
    if (ep.success) ++report.success_bins[bin];
    ++report.included;
  }
  return report;
}

}  // namespace vlnlab::metrics
