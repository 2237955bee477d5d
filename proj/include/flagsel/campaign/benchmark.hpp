#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flagsel/error.hpp"
#include "flagsel/features.hpp"
#include "flagsel/labeling.hpp"

namespace flagsel {

struct BenchmarkEntry {
  std::string id;
  std::filesystem::path path;
  TaskType task = TaskType::CoverError;
  double time_limit_seconds = 300;

  friend bool operator==(const BenchmarkEntry&, const BenchmarkEntry&) = default;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Parses a manifest: a JSON array of
/// `{"id", "path", "task", "time_limit_seconds"}`. Relative paths resolve
/// against `base_dir`; `time_limit_seconds` defaults to 300.
inline std::vector<BenchmarkEntry> parse_manifest(const nlohmann::json& j,
                                                  const std::filesystem::path& base_dir = {}) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::ManifestError, why); };
  if (!j.is_array()) throw fail("manifest must be a JSON array");
  if (j.empty()) throw fail("manifest is empty");

  std::vector<BenchmarkEntry> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string where = "manifest entry " + std::to_string(i);
    if (!e.is_object()) throw fail(where + " is not an object");
    for (const char* key : {"id", "path", "task"})
      if (!e.contains(key) || !e[key].is_string()) throw fail(where + " lacks string field '" + key + "'");

    BenchmarkEntry b;
    b.id = e["id"].get<std::string>();
    if (b.id.empty()) throw fail(where + " has an empty id");
    if (!ids.insert(b.id).second) throw fail("duplicate benchmark id '" + b.id + "'");
    b.path = e["path"].get<std::string>();
    if (b.path.is_relative() && !base_dir.empty()) b.path = base_dir / b.path;
    try {
      b.task = parse_task_type(e["task"].get<std::string>());
    } catch (const Error& err) {
      throw fail(where + ": " + err.what());
    }
    if (e.contains("time_limit_seconds")) {
      if (!e["time_limit_seconds"].is_number() || !(e["time_limit_seconds"].get<double>() > 0))
        throw fail(where + ": time_limit_seconds must be a positive number");
      b.time_limit_seconds = e["time_limit_seconds"].get<double>();
    }
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<BenchmarkEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ManifestError, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestError, path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

inline nlohmann::ordered_json manifest_to_json(const std::vector<BenchmarkEntry>& manifest) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& b : manifest) {
    nlohmann::ordered_json e;
    e["id"] = b.id;
    e["path"] = b.path.string();
    e["task"] = to_string(b.task);
    e["time_limit_seconds"] = b.time_limit_seconds;
    j.push_back(std::move(e));
  }
  return j;
}

/// Reads and profiles every benchmark. Any unreadable or unscannable file
/// is a ManifestError, raised before a single backend run starts.
inline std::vector<FeatureVector> profile_benchmarks(const std::vector<BenchmarkEntry>& manifest,
                                                     const ExtractOptions& options = {}) {
  std::vector<FeatureVector> out;
  out.reserve(manifest.size());
  for (const auto& b : manifest) {
    try {
      out.push_back(extract_features(read_text_file(b.path), options));
    } catch (const Error& e) {
      throw Error(ErrorCode::ManifestError, "benchmark '" + b.id + "': " + e.what());
    }
  }
  return out;
}

}  // namespace flagsel
