#include "worldsim/world_json.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "common/textfmt.hpp"

namespace vlnlab::world {

std::string world_to_json(const EnvironmentGraph& g) {
  std::ostringstream out;
  out << "{\"world_id\":\"" << g.world_id << "\",\"seed\":" << g.seed
      << ",\"split\":\"" << g.split << "\",\"viewpoints\":[";
  for (std::size_t i = 0; i < g.viewpoints.size(); ++i) {
    const Viewpoint& vp = g.viewpoints[i];
    if (i) out << ',';
    out << "{\"id\":\"" << vp.id << "\",\"position\":["
        << fmt_double17(vp.position.x) << ',' << fmt_double17(vp.position.y)
        << ',' << fmt_double17(vp.position.z) << "],\"views\":[";
    for (int h = 0; h < kHeadings; ++h) {
      for (int e = 0; e < kElevations; ++e) {
        const View& view = vp.view(h, e);
        if (h || e) out << ',';
        out << "{\"h\":" << h << ",\"e\":" << e << ",\"objects\":[";
        for (std::size_t k = 0; k < view.object_labels.size(); ++k) {
          if (k) out << ',';
          out << view.object_labels[k];
        }
        out << "],\"feature\":[";
        for (std::size_t k = 0; k < view.feature.size(); ++k) {
          if (k) out << ',';
          out << fmt_double17(view.feature[k]);
        }
        out << "]}";
      }
    }
    out << "]}";
  }
  out << "],\"edges\":[";
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (i) out << ',';
    out << "[\"" << g.viewpoints[e.a].id << "\",\"" << g.viewpoints[e.b].id
        << "\"," << fmt_double17(e.dist) << ']';
  }
  out << "]}";
  return out.str();
}

void save_world(const EnvironmentGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open world file for writing: " + path);
  out << world_to_json(g) << '\n';
  if (!out) throw IoError("failed writing world file: " + path);
}

EnvironmentGraph load_world(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open world file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("world file " + path + ": " + e.what());
  }

  EnvironmentGraph g;
  try {
    g.world_id = j.at("world_id").get<std::string>();
    g.seed = j.at("seed").get<std::uint64_t>();
    g.split = j.at("split").get<std::string>();
    for (const auto& jvp : j.at("viewpoints")) {
      Viewpoint vp;
      vp.id = jvp.at("id").get<std::string>();
      const auto& pos = jvp.at("position");
      vp.position = {pos.at(0).get<double>(), pos.at(1).get<double>(),
                     pos.at(2).get<double>()};
      const auto& views = jvp.at("views");
      if (views.size() != kViewsPerViewpoint)
        throw FormatError("viewpoint " + vp.id + " does not have 36 views");
      for (const auto& jview : views) {
        const int h = jview.at("h").get<int>();
        const int e = jview.at("e").get<int>();
        if (h < 0 || h >= kHeadings || e < 0 || e >= kElevations)
          throw FormatError("view bucket out of range in " + vp.id);
        View& view = vp.views[h * kElevations + e];
        view.object_labels = jview.at("objects").get<std::vector<int>>();
        view.feature = jview.at("feature").get<std::vector<double>>();
      }
      g.viewpoints.push_back(std::move(vp));
    }
    if (!g.viewpoints.empty())
      g.label_count =
          static_cast<int>(g.viewpoints[0].views[0].feature.size());
    std::unordered_map<std::string, int> idx;
    for (int i = 0; i < g.node_count(); ++i) idx[g.viewpoints[i].id] = i;
    for (const auto& je : j.at("edges")) {
      Edge e;
      const std::string a = je.at(0).get<std::string>();
      const std::string b = je.at(1).get<std::string>();
      if (!idx.count(a) || !idx.count(b))
        throw FormatError("edge references unknown viewpoint");
      e.a = idx[a];
      e.b = idx[b];
      e.dist = je.at(2).get<double>();
      g.edges.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("world file " + path + ": " + e.what());
  }
  g.finalize();
  return g;
}

}  // namespace vlnlab::world
