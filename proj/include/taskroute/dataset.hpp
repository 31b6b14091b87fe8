#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "taskroute/types.hpp"

namespace taskroute {

// Reads a pool file (one JSON object per line: model_id, cost_per_query) and
// a records file (one JSON object per line: prompt_id, source,
// prompt_embedding, desc_embedding, quality). Rejects the whole file on the
// first malformed record, naming the offending line.
Dataset load_dataset(const std::string& records_path, const std::string& pool_path);

void write_pool_file(const std::vector<ModelCard>& pool, const std::string& path);
void write_records_file(const Dataset& ds, const std::string& path);

// Deterministic shuffle-then-cut split. Sizes are floor(n * ratio) per split
// with the remainder assigned to train. Ratios must sum to 1 within 1e-9.
std::array<Dataset, 3> split_dataset(const Dataset& ds,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

}  // namespace taskroute
