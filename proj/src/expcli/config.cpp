#include "expcli/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "common/rng.hpp"
#include "landmark/landmark.hpp"

namespace vlnlab::cli {

namespace {

using nlohmann::json;

struct Field {
  std::function<void(const json&)> set;
  std::function<json()> get;
};

// Section name -> key -> accessors. One table drives file parsing, flag
// overrides, and canonical serialization, so they cannot drift apart.
using FieldTable = std::map<std::string, std::map<std::string, Field>>;

void expect_number(const json& v, const std::string& where) {
  if (!v.is_number())
    throw ConfigError("key \"" + where + "\" expects a number");
}

Field int_field(int* slot, int lo, int hi, const std::string& where) {
  return {[slot, lo, hi, where](const json& v) {
            expect_number(v, where);
            const double d = v.get<double>();
            if (d != std::floor(d) || d < lo || d > hi)
              throw ConfigError("key \"" + where + "\" expects an integer in [" +
                                std::to_string(lo) + ", " + std::to_string(hi) +
                                "]");
            *slot = static_cast<int>(d);
          },
          [slot]() { return json(*slot); }};
}

Field double_field(double* slot, double lo, double hi,
                   const std::string& where) {
  return {[slot, lo, hi, where](const json& v) {
            expect_number(v, where);
            const double d = v.get<double>();
            if (!std::isfinite(d) || d < lo || d > hi)
              throw ConfigError("key \"" + where + "\" expects a finite value in [" +
                                std::to_string(lo) + ", " + std::to_string(hi) +
                                "]");
            *slot = d;
          },
          [slot]() { return json(*slot); }};
}

Field bool_field(bool* slot, const std::string& where) {
  return {[slot, where](const json& v) {
            if (!v.is_boolean())
              throw ConfigError("key \"" + where + "\" expects a boolean");
            *slot = v.get<bool>();
          },
          [slot]() { return json(*slot); }};
}

Field string_field(std::string* slot, const std::string& where) {
  return {[slot, where](const json& v) {
            if (!v.is_string())
              throw ConfigError("key \"" + where + "\" expects a string");
            *slot = v.get<std::string>();
          },
          [slot]() { return json(*slot); }};
}

Field seed_field(std::uint64_t* slot) {
  return {[slot](const json& v) {
            if (!v.is_number_unsigned() && !v.is_number_integer())
              throw ConfigError("key \"seed\" expects a non-negative integer");
            *slot = v.get<std::uint64_t>();
          },
          [slot]() { return json(*slot); }};
}

FieldTable bind_fields(RunConfig& c) {
  FieldTable t;
  const double inf = 1e18;
  auto& wg = t["worldgen"];
  wg["node_count"] = int_field(&c.worldgen.node_count, 2, 100000, "worldgen.node_count");
  wg["label_count"] = int_field(&c.worldgen.label_count, 2, 1000, "worldgen.label_count");
  wg["spacing"] = double_field(&c.worldgen.spacing, 1e-6, inf, "worldgen.spacing");
  wg["xy_jitter"] = double_field(&c.worldgen.xy_jitter, 0.0, inf, "worldgen.xy_jitter");
  wg["z_jitter"] = double_field(&c.worldgen.z_jitter, 0.0, inf, "worldgen.z_jitter");
  wg["extra_edge_prob"] = double_field(&c.worldgen.extra_edge_prob, 0.0, 1.0, "worldgen.extra_edge_prob");
  wg["zipf_exponent"] = double_field(&c.worldgen.zipf_exponent, 0.0, 10.0, "worldgen.zipf_exponent");
  wg["mean_objects_per_view"] = double_field(&c.worldgen.mean_objects_per_view, 1.0, 32.0, "worldgen.mean_objects_per_view");
  wg["seen_worlds"] = int_field(&c.worldgen.seen_worlds, 1, 1000, "worldgen.seen_worlds");
  wg["unseen_worlds"] = int_field(&c.worldgen.unseen_worlds, 1, 1000, "worldgen.unseen_worlds");

  auto& det = t["detector"];
  det["k"] = int_field(&c.detector.k, 1, 1000, "detector.k");
  det["tau1"] = double_field(&c.detector.tau1, 1e-9, inf, "detector.tau1");
  det["noise_sigma"] = double_field(&c.detector.noise_sigma, 0.0, inf, "detector.noise_sigma");

  auto& sy = t["syfis"];
  sy["dictionary_path"] = string_field(&c.syfis.dictionary_path, "syfis.dictionary_path");
  sy["trajectories"] = int_field(&c.syfis.trajectories, 1, 10000000, "syfis.trajectories");
  sy["path_len_min"] = int_field(&c.syfis.path_len_min, 2, 100, "syfis.path_len_min");
  sy["path_len_max"] = int_field(&c.syfis.path_len_max, 2, 100, "syfis.path_len_max");
  sy["l_max"] = int_field(&c.syfis.l_max, 3, 64, "syfis.l_max");
  sy["heading_threshold"] = double_field(&c.syfis.heading_threshold, 0.0, 180.0, "syfis.heading_threshold");
  sy["heldout_fraction"] = double_field(&c.syfis.heldout_fraction, 0.0, 0.9, "syfis.heldout_fraction");

  auto& mo = t["model"];
  mo["embed_dim"] = int_field(&c.model.embed_dim, 1, 4096, "model.embed_dim");
  mo["hidden"] = int_field(&c.model.hidden, 1, 4096, "model.hidden");
  mo["mlp_hidden"] = int_field(&c.model.mlp_hidden, 1, 4096, "model.mlp_hidden");

  auto& op = t["optimizer"];
  op["lr"] = double_field(&c.optimizer.lr, 1e-12, 10.0, "optimizer.lr");
  op["beta1"] = double_field(&c.optimizer.beta1, 0.0, 1.0, "optimizer.beta1");
  op["beta2"] = double_field(&c.optimizer.beta2, 0.0, 1.0, "optimizer.beta2");
  op["eps"] = double_field(&c.optimizer.eps, 0.0, 1.0, "optimizer.eps");
  op["weight_decay"] = double_field(&c.optimizer.weight_decay, 0.0, 1.0, "optimizer.weight_decay");
  op["clip_norm"] = double_field(&c.optimizer.clip_norm, 0.0, 1e9, "optimizer.clip_norm");

  auto& lo = t["loss"];
  lo["alpha1"] = double_field(&c.loss.alpha1, 0.0, inf, "loss.alpha1");
  lo["alpha2"] = double_field(&c.loss.alpha2, 0.0, inf, "loss.alpha2");
  lo["beta1"] = double_field(&c.loss.beta1, 0.0, inf, "loss.beta1");
  lo["beta2"] = double_field(&c.loss.beta2, 0.0, inf, "loss.beta2");
  lo["beta3"] = double_field(&c.loss.beta3, 0.0, inf, "loss.beta3");
  lo["lambda"] = double_field(&c.loss.lambda, 0.0, inf, "loss.lambda");
  lo["margin"] = double_field(&c.loss.margin, 0.0, inf, "loss.margin");
  lo["dsl_literal_generated"] = bool_field(&c.loss.dsl_literal_generated, "loss.dsl_literal_generated");
  lo["ss_positive_term_only"] = bool_field(&c.loss.ss_positive_term_only, "loss.ss_positive_term_only");

  auto& ro = t["rollout"];
  ro["max_steps"] = int_field(&c.rollout.max_steps, 1, 1000, "rollout.max_steps");
  ro["success_radius"] = double_field(&c.rollout.success_radius, 1e-9, inf, "rollout.success_radius");
  ro["gamma"] = double_field(&c.rollout.gamma, 0.0, 1.0, "rollout.gamma");

  auto& tr = t["training"];
  tr["pretrain_steps"] = int_field(&c.training.pretrain_steps, 0, 10000000, "training.pretrain_steps");
  tr["pretrain_batch"] = int_field(&c.training.pretrain_batch, 1, 100000, "training.pretrain_batch");
  tr["pretrain_lr"] = double_field(&c.training.pretrain_lr, 1e-12, 10.0, "training.pretrain_lr");
  tr["pretrain_lr_decay"] = bool_field(&c.training.pretrain_lr_decay, "training.pretrain_lr_decay");
  tr["agent_steps"] = int_field(&c.training.agent_steps, 0, 10000000, "training.agent_steps");
  tr["agent_batch"] = int_field(&c.training.agent_batch, 1, 100000, "training.agent_batch");
  tr["eval_episodes"] = int_field(&c.training.eval_episodes, 1, 1000000, "training.eval_episodes");

  auto& ab = t["ablation"];
  ab["no_translator"] = bool_field(&c.ablation.no_translator, "ablation.no_translator");
  ab["no_sig"] = bool_field(&c.ablation.no_sig, "ablation.no_sig");
  ab["no_dsl"] = bool_field(&c.ablation.no_dsl, "ablation.no_dsl");
  ab["no_ss"] = bool_field(&c.ablation.no_ss, "ablation.no_ss");

  auto& top = t[""];
  top["seed"] = seed_field(&c.seed);
  top["output_dir"] = string_field(&c.output_dir, "output_dir");
  return t;
}

void apply_json(const FieldTable& table, const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (table.count(key) && key != "") {
      if (!value.is_object())
        throw ConfigError("section \"" + key + "\" must be an object");
      const auto& section = table.at(key);
      for (const auto& [sub, subvalue] : value.items()) {
        const auto it = section.find(sub);
        if (it == section.end())
          throw ConfigError("unknown key \"" + key + "." + sub + "\"");
        it->second.set(subvalue);
      }
    } else {
      const auto& top = table.at("");
      const auto it = top.find(key);
      if (it == top.end()) throw ConfigError("unknown key \"" + key + "\"");
      it->second.set(value);
    }
  }
}

json parse_override_value(const std::string& text) {
  // Numbers, booleans, and bare strings.
  if (text == "true") return json(true);
  if (text == "false") return json(false);
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (syfis.path_len_min > syfis.path_len_max)
    throw ConfigError("syfis.path_len_min exceeds syfis.path_len_max");
  if (worldgen.label_count >
      landmark::LabelVocabulary::builtin_size())
    throw ConfigError("worldgen.label_count exceeds the builtin vocabulary (" +
                      std::to_string(landmark::LabelVocabulary::builtin_size()) +
                      ")");
  if (model.hidden != model.embed_dim)
    throw ConfigError(
        "model.hidden must equal model.embed_dim (the agent text width and "
        "translator output width are concatenated row-wise)");
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  RunConfig config;
  FieldTable table = bind_fields(config);

  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path + " is not valid JSON: " +
                        e.what());
    }
    apply_json(table, j);
  }

  for (const auto& override_text : overrides) {
    const auto eq = override_text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override \"" + override_text +
                        "\" must look like section.key=value");
    const std::string key = override_text.substr(0, eq);
    const json value = parse_override_value(override_text.substr(eq + 1));
    const auto dot = key.find('.');
    json wrapped;
    if (dot == std::string::npos) {
      wrapped[key] = value;
    } else {
      wrapped[key.substr(0, dot)][key.substr(dot + 1)] = value;
    }
    apply_json(table, wrapped);
  }

  config.validate();
  return config;
}

std::string canonical_json(const RunConfig& config) {
  RunConfig copy = config;
  FieldTable table = bind_fields(copy);
  json out;
  for (const auto& [section, fields] : table) {
    for (const auto& [key, field] : fields) {
      if (section.empty())
        out[key] = field.get();
      else
        out[section][key] = field.get();
    }
  }
  // nlohmann::json keeps keys sorted; full-precision doubles round-trip.
  return out.dump();
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a64(canonical_json(config));
}

}  // namespace vlnlab::cli
