#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sparsegn::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kManifestSchema = "sparsegn.manifest.v1";

/// SHA-1 of "blob <size>\0<content>", the id git gives a file with this content.
std::string git_blob_digest(std::string_view content);

/// Current UTC time as 2026-01-31T12:34:56.789Z.
std::string utc_timestamp();

/// Everything needed to re-run a command: the argument vector (minus the
/// output directory), the fully resolved configuration, input digests, seeds
/// and wall-clock bounds.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  json config = json::object();
  json inputs = json::object();
  json seeds = json::object();
  json schemas = json::object();
  json results = json::object();  // headline numbers, also present in the outputs
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;

  json to_json() const;
  static RunManifest from_json(const json& j);
};

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace sparsegn::cli
