#ifndef VLNLAB_NUMCORE_CHECKPOINT_HPP
#define VLNLAB_NUMCORE_CHECKPOINT_HPP

#include <map>
#include <string>

#include "numcore/store.hpp"

namespace vlnlab::num {

// Checkpoint layout: one JSON header line
//   {"format_version":1,"params":[{"name":...,"shape":[r,c],"byte_offset":N},...]}
// followed by the concatenated parameter payloads as little-endian 64-bit
// reals. Offsets are relative to the byte after the header newline. Values
// round-trip bit-exactly.
inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const ParameterStore& store, const std::string& path);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace vlnlab::num

#endif  // VLNLAB_NUMCORE_CHECKPOINT_HPP
