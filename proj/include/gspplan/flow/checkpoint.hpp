#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gspplan/flow/architecture.hpp"

namespace gspplan::flow {

struct Checkpoint {
  Architecture arch;
  nlohmann::json meta = nlohmann::json::object();  // training config, normalizer, provenance
  std::int64_t step = 0;
  std::string rng_state;
  ParamVector online;
  ParamVector target;
};

// Magic line, one JSON metadata line, then the online and target parameter
// blocks as little-endian float32.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gspplan::flow
