#ifndef VLNLAB_WORLDSIM_WORLD_JSON_HPP
#define VLNLAB_WORLDSIM_WORLD_JSON_HPP

#include <string>

#include "worldsim/world.hpp"

namespace vlnlab::world {

// World JSON schema (canonical field order, floats as 17-significant-digit
// decimals so save/load/save is byte-stable):
// {"world_id","seed","split","viewpoints":[{"id","position":[x,y,z],
//   "views":[{"h","e","objects":[label],"feature":[f64]}]}],
//  "edges":[[id_a,id_b,dist]]}
std::string world_to_json(const EnvironmentGraph& g);
void save_world(const EnvironmentGraph& g, const std::string& path);
EnvironmentGraph load_world(const std::string& path);

}  // namespace vlnlab::world

#endif  // VLNLAB_WORLDSIM_WORLD_JSON_HPP
