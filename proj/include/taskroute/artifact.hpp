#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "taskroute/binio.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

// Artifact files: 4-byte magic, format version, type tag, payload length,
// payload, crc32 trailer over everything before it.
inline constexpr char kArtifactMagic[4] = {'T', 'R', 'T', 'E'};
inline constexpr std::uint32_t kArtifactVersion = 1;

enum class ArtifactTag : std::uint32_t {
  Config = 1,
  Discovery = 2,
  Classifier = 3,
  Router = 4,
  GroundTruth = 5,
};

void write_artifact_file(const std::filesystem::path& path, ArtifactTag tag,
                         const std::string& payload);

// Verifies magic, version, tag, and checksum; returns the payload.
std::string read_artifact_file(const std::filesystem::path& path,
                               ArtifactTag expected);

// crc32 of a whole file, e.g. for health reporting
std::uint32_t file_crc32(const std::filesystem::path& path);

// Specialized by each persistent type.
template <class T>
struct ArtifactCodec;

template <class T>
void save_artifact(const T& value, const std::filesystem::path& path) {
  BinaryWriter w;
  ArtifactCodec<T>::encode(w, value);
  write_artifact_file(path, ArtifactCodec<T>::tag, w.buffer());
}

template <class T>
T load_artifact(const std::filesystem::path& path) {
  BinaryReader r(read_artifact_file(path, ArtifactCodec<T>::tag));
  T value = ArtifactCodec<T>::decode(r);
  r.expect_end();
  return value;
}

template <>
struct ArtifactCodec<PipelineConfig> {
  static constexpr ArtifactTag tag = ArtifactTag::Config;
  static void encode(BinaryWriter& w, const PipelineConfig& cfg);
  static PipelineConfig decode(BinaryReader& r);
};

}  // namespace taskroute
