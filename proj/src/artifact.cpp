#include "taskroute/artifact.hpp"

#include <cstring>
#include <fstream>

namespace taskroute {

namespace {

std::string read_whole_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("artifact file not found: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

void write_artifact_file(const std::filesystem::path& path, ArtifactTag tag,
                         const std::string& payload) {
  BinaryWriter w;
  for (char c : kArtifactMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kArtifactVersion);
  w.u32(static_cast<std::uint32_t>(tag));
  w.u64(payload.size());
  std::string head = std::move(w).take();
  const std::uint32_t crc =
      crc32(payload.data(), payload.size(), crc32(head.data(), head.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write artifact file: " + path.string());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  BinaryWriter trailer;
  trailer.u32(crc);
  out.write(trailer.buffer().data(), static_cast<std::streamsize>(trailer.buffer().size()));
  if (!out) throw Error("short write on artifact file: " + path.string());
}

std::string read_artifact_file(const std::filesystem::path& path,
                               ArtifactTag expected) {
  const std::string data = read_whole_file(path);
  constexpr std::size_t kHeadSize = 4 + 4 + 4 + 8;
  if (data.size() < kHeadSize + 4)
    throw Error("artifact file too short: " + path.string());
  if (std::memcmp(data.data(), kArtifactMagic, 4) != 0)
    throw Error("artifact file has wrong magic: " + path.string());

  BinaryReader r(data.substr(4, kHeadSize - 4));
  const std::uint32_t version = r.u32();
  if (version != kArtifactVersion)
    throw Error("artifact version mismatch in " + path.string() + ": file has v" +
                std::to_string(version) + ", expected v" +
                std::to_string(kArtifactVersion));
  const std::uint32_t tag = r.u32();
  const std::uint64_t payload_size = r.u64();
  if (data.size() != kHeadSize + payload_size + 4)
    throw Error("artifact payload size mismatch: " + path.string());

  const std::uint32_t stored_crc =
      BinaryReader(data.substr(kHeadSize + payload_size, 4)).u32();
  const std::uint32_t actual_crc = crc32(data.data(), kHeadSize + payload_size);
  if (stored_crc != actual_crc)
    throw Error("artifact checksum mismatch (corrupt file): " + path.string());

  if (tag != static_cast<std::uint32_t>(expected))
    throw Error("artifact type mismatch in " + path.string() + ": file has tag " +
                std::to_string(tag) + ", expected " +
                std::to_string(static_cast<std::uint32_t>(expected)));
  return data.substr(kHeadSize, payload_size);
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  const std::string data = read_whole_file(path);
  return crc32(data.data(), data.size());
}

void ArtifactCodec<PipelineConfig>::encode(BinaryWriter& w, const PipelineConfig& cfg) {
  w.i64(cfg.knn_k);
  w.f64(cfg.rbo_threshold);
  w.f64(cfg.rbo_persistence);
  w.f64(cfg.rrf_epsilon);
  w.i64(cfg.leiden_iterations);
  w.f64(cfg.leiden_resolution);
  w.f64(cfg.coverage_threshold);
  w.i64(cfg.min_cluster_size);
  w.f64(cfg.alpha);
  w.f64(cfg.classifier_threshold);
  w.i64(cfg.model_embed_dim);
  w.i64(cfg.adapter_hidden_dim);
  w.i64(cfg.seed);
}

PipelineConfig ArtifactCodec<PipelineConfig>::decode(BinaryReader& r) {
  PipelineConfig cfg;
  cfg.knn_k = static_cast<int>(r.i64());
  cfg.rbo_threshold = r.f64();
  cfg.rbo_persistence = r.f64();
  cfg.rrf_epsilon = r.f64();
  cfg.leiden_iterations = static_cast<int>(r.i64());
  cfg.leiden_resolution = r.f64();
  cfg.coverage_threshold = r.f64();
  cfg.min_cluster_size = static_cast<int>(r.i64());
  cfg.alpha = r.f64();
  cfg.classifier_threshold = r.f64();
  cfg.model_embed_dim = static_cast<int>(r.i64());
  cfg.adapter_hidden_dim = static_cast<int>(r.i64());
  cfg.seed = r.i64();
  return cfg;
}

}  // namespace taskroute
