#include "taskroute/types.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace taskroute {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

std::string double_to_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("config: bad numeric value for " + key + ": '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("config: bad integer value for " + key + ": '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

void PipelineConfig::validate() const {
  require(knn_k >= 1, "config: knn_k must be >= 1");
  require(rbo_threshold >= 0.0 && rbo_threshold <= 1.0,
          "config: rbo_threshold must be in [0,1]");
  require(rbo_persistence > 0.0 && rbo_persistence < 1.0,
          "config: rbo_persistence must be in (0,1)");
  require(rrf_epsilon > 0.0, "config: rrf_epsilon must be positive");
  require(leiden_iterations >= 1, "config: leiden_iterations must be >= 1");
  require(leiden_resolution > 0.0, "config: leiden_resolution must be positive");
  require(coverage_threshold > 0.0 && coverage_threshold <= 1.0,
          "config: coverage_threshold must be in (0,1]");
  require(min_cluster_size >= 1, "config: min_cluster_size must be >= 1");
  require(alpha >= 0.0 && alpha <= 1.0, "config: alpha must be in [0,1]");
  require(classifier_threshold > 0.0 && classifier_threshold < 1.0,
          "config: classifier_threshold must be in (0,1)");
  require(model_embed_dim >= 1, "config: model_embed_dim must be >= 1");
  require(adapter_hidden_dim >= 1, "config: adapter_hidden_dim must be >= 1");
}

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  return a.knn_k == b.knn_k && a.rbo_threshold == b.rbo_threshold &&
         a.rbo_persistence == b.rbo_persistence &&
         a.rrf_epsilon == b.rrf_epsilon &&
         a.leiden_iterations == b.leiden_iterations &&
         a.leiden_resolution == b.leiden_resolution &&
         a.coverage_threshold == b.coverage_threshold &&
         a.min_cluster_size == b.min_cluster_size && a.alpha == b.alpha &&
         a.classifier_threshold == b.classifier_threshold &&
         a.model_embed_dim == b.model_embed_dim &&
         a.adapter_hidden_dim == b.adapter_hidden_dim && a.seed == b.seed;
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key == "knn_k") cfg.knn_k = static_cast<int>(parse_int(key, val));
    else if (key == "rbo_threshold") cfg.rbo_threshold = parse_double(key, val);
    else if (key == "rbo_persistence") cfg.rbo_persistence = parse_double(key, val);
    else if (key == "rrf_epsilon") cfg.rrf_epsilon = parse_double(key, val);
    else if (key == "leiden_iterations") cfg.leiden_iterations = static_cast<int>(parse_int(key, val));
    else if (key == "leiden_resolution") cfg.leiden_resolution = parse_double(key, val);
    else if (key == "coverage_threshold") cfg.coverage_threshold = parse_double(key, val);
    else if (key == "min_cluster_size") cfg.min_cluster_size = static_cast<int>(parse_int(key, val));
    else if (key == "alpha") cfg.alpha = parse_double(key, val);
    else if (key == "classifier_threshold") cfg.classifier_threshold = parse_double(key, val);
    else if (key == "model_embed_dim") cfg.model_embed_dim = static_cast<int>(parse_int(key, val));
    else if (key == "adapter_hidden_dim") cfg.adapter_hidden_dim = static_cast<int>(parse_int(key, val));
    else if (key == "seed") cfg.seed = parse_int(key, val);
    else throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

std::string config_to_text(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "knn_k=" << cfg.knn_k << "\n";
  out << "rbo_threshold=" << double_to_text(cfg.rbo_threshold) << "\n";
  out << "rbo_persistence=" << double_to_text(cfg.rbo_persistence) << "\n";
  out << "rrf_epsilon=" << double_to_text(cfg.rrf_epsilon) << "\n";
  out << "leiden_iterations=" << cfg.leiden_iterations << "\n";
  out << "leiden_resolution=" << double_to_text(cfg.leiden_resolution) << "\n";
  out << "coverage_threshold=" << double_to_text(cfg.coverage_threshold) << "\n";
  out << "min_cluster_size=" << cfg.min_cluster_size << "\n";
  out << "alpha=" << double_to_text(cfg.alpha) << "\n";
  out << "classifier_threshold=" << double_to_text(cfg.classifier_threshold) << "\n";
  out << "model_embed_dim=" << cfg.model_embed_dim << "\n";
  out << "adapter_hidden_dim=" << cfg.adapter_hidden_dim << "\n";
  out << "seed=" << cfg.seed << "\n";
  return out.str();
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace taskroute
