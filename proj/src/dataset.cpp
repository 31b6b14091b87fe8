#include "taskroute/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "taskroute/rng.hpp"

namespace taskroute {

using nlohmann::json;

namespace {

Eigen::VectorXd json_vector(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw Error(where + ": expected a non-empty array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) {
    if (!x.is_number()) throw Error(where + ": non-numeric entry");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw Error(where + ": non-finite entry");
    v[i++] = d;
  }
  return v;
}

json line_json(const std::string& line, const std::string& file, int lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(file + ":" + std::to_string(lineno) + ": malformed JSON object");
  return j;
}

std::string loc(const std::string& file, int lineno) {
  return file + ":" + std::to_string(lineno);
}

}  // namespace

Dataset load_dataset(const std::string& records_path, const std::string& pool_path) {
  Dataset ds;

  std::ifstream pool_in(pool_path);
  if (!pool_in) throw Error("pool file not found: " + pool_path);
  std::string line;
  int lineno = 0;
  std::unordered_set<std::string> seen_models;
  while (std::getline(pool_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = line_json(line, pool_path, lineno);
    ModelCard card;
    if (!j.contains("model_id") || !j["model_id"].is_string())
      throw Error(loc(pool_path, lineno) + ": missing string field model_id");
    card.model_id = j["model_id"].get<std::string>();
    if (!j.contains("cost_per_query") || !j["cost_per_query"].is_number())
      throw Error(loc(pool_path, lineno) + ": missing numeric field cost_per_query");
    card.cost_per_query = j["cost_per_query"].get<double>();
    if (!(card.cost_per_query >= 0.0) || !std::isfinite(card.cost_per_query))
      throw Error(loc(pool_path, lineno) + ": cost_per_query must be >= 0");
    if (!seen_models.insert(card.model_id).second)
      throw Error(loc(pool_path, lineno) + ": duplicate model_id '" + card.model_id + "'");
    card.index = static_cast<int>(ds.pool.size());
    ds.pool.push_back(std::move(card));
  }
  if (ds.pool.empty()) throw Error("pool file is empty: " + pool_path);

  std::ifstream rec_in(records_path);
  if (!rec_in) throw Error("records file not found: " + records_path);
  lineno = 0;
  std::unordered_set<std::string> seen_prompts;
  Eigen::Index prompt_dim = -1, desc_dim = -1;
  const auto n = static_cast<Eigen::Index>(ds.pool.size());
  while (std::getline(rec_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = line_json(line, records_path, lineno);
    PromptRecord rec;
    for (const char* key : {"prompt_id", "source"}) {
      if (!j.contains(key) || !j[key].is_string())
        throw Error(loc(records_path, lineno) + ": missing string field " + key);
    }
    rec.prompt_id = j["prompt_id"].get<std::string>();
    rec.source = j["source"].get<std::string>();
    if (!seen_prompts.insert(rec.prompt_id).second)
      throw Error(loc(records_path, lineno) + ": duplicate prompt_id '" + rec.prompt_id + "'");
    for (const char* key : {"prompt_embedding", "desc_embedding", "quality"}) {
      if (!j.contains(key))
        throw Error(loc(records_path, lineno) + ": missing field " + key);
    }
    rec.prompt_embedding =
        json_vector(j["prompt_embedding"], loc(records_path, lineno) + ": prompt_embedding");
    rec.desc_embedding =
        json_vector(j["desc_embedding"], loc(records_path, lineno) + ": desc_embedding");
    rec.quality = json_vector(j["quality"], loc(records_path, lineno) + ": quality");
    if (rec.quality.size() != n)
      throw Error(loc(records_path, lineno) + ": quality has " +
                  std::to_string(rec.quality.size()) + " entries, pool has " +
                  std::to_string(n));
    for (Eigen::Index m = 0; m < n; ++m) {
      if (rec.quality[m] < 0.0 || rec.quality[m] > 1.0)
        throw Error(loc(records_path, lineno) + ": quality[" + std::to_string(m) +
                    "] = " + std::to_string(rec.quality[m]) + " outside [0,1]");
    }
    if (prompt_dim < 0) {
      prompt_dim = rec.prompt_embedding.size();
      desc_dim = rec.desc_embedding.size();
    } else {
      if (rec.prompt_embedding.size() != prompt_dim)
        throw Error(loc(records_path, lineno) + ": prompt_embedding dimension " +
                    std::to_string(rec.prompt_embedding.size()) +
                    " does not match first record's " + std::to_string(prompt_dim));
      if (rec.desc_embedding.size() != desc_dim)
        throw Error(loc(records_path, lineno) + ": desc_embedding dimension " +
                    std::to_string(rec.desc_embedding.size()) +
                    " does not match first record's " + std::to_string(desc_dim));
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_pool_file(const std::vector<ModelCard>& pool, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write pool file: " + path);
  for (const auto& card : pool) {
    json j;
    j["model_id"] = card.model_id;
    j["cost_per_query"] = card.cost_per_query;
    out << j.dump() << "\n";
  }
}

void write_records_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write records file: " + path);
  for (const auto& rec : ds.records) {
    json j;
    j["prompt_id"] = rec.prompt_id;
    j["source"] = rec.source;
    j["prompt_embedding"] = std::vector<double>(
        rec.prompt_embedding.data(), rec.prompt_embedding.data() + rec.prompt_embedding.size());
    j["desc_embedding"] = std::vector<double>(
        rec.desc_embedding.data(), rec.desc_embedding.data() + rec.desc_embedding.size());
    j["quality"] = std::vector<double>(rec.quality.data(),
                                       rec.quality.data() + rec.quality.size());
    out << j.dump() << "\n";
  }
}

std::array<Dataset, 3> split_dataset(const Dataset& ds,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("split ratios must sum to 1, got " + std::to_string(sum));
  for (double r : ratios)
    if (r < 0.0) throw Error("split ratios must be nonnegative");
  if (ds.records.empty()) throw Error("cannot split an empty dataset");

  const auto total = ds.records.size();
  std::size_t n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(total)));
  const std::size_t n_dev = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(total)));
  const std::size_t n_test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(total)));
  n_train += total - (n_train + n_dev + n_test);  // remainder goes to train

  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);

  std::array<Dataset, 3> out;
  const std::array<std::size_t, 3> sizes = {n_train, n_dev, n_test};
  std::size_t pos = 0;
  for (int s = 0; s < 3; ++s) {
    out[s].pool = ds.pool;
    out[s].records.reserve(sizes[s]);
    for (std::size_t i = 0; i < sizes[s]; ++i)
      out[s].records.push_back(ds.records[idx[pos++]]);
  }
  return out;
}

}  // namespace taskroute
