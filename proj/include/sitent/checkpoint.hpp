#pragma once

#include <optional>
#include <string>

#include "sitent/model.hpp"

namespace sitent {

struct Checkpoint {
    ModelParams params;
    TrainConfig config;       // configuration echo
    std::uint64_t seed = 0;   // training seed
    std::size_t epoch = 0;    // epoch the parameters come from
    std::optional<AdamState> adam;
};

// Single-file binary format: magic, format version, a JSON header carrying
// the variant tag, shapes, label inventory, config echo, seed and epoch,
// then the raw row-major double payload per tensor. Round-trips bit-exact.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sitent
