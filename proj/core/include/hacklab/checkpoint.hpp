#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "hacklab/param_vector.hpp"

namespace hacklab {

// On-disk container: a JSON object
//   {"format": "hacklab-checkpoint", "version": 1, "step": <int>,
//    "meta": {<string>: <string>, ...},
//    "layers": [{"name": "layer0", "values": [<double>, ...]}, ...]}
// Doubles are written in shortest round-trip form, so load(save(x)) == x
// bit for bit.
struct Checkpoint {
  ParamVector params;
  std::int64_t step = 0;
  std::map<std::string, std::string> meta;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
// Throws std::invalid_argument on malformed input.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hacklab
