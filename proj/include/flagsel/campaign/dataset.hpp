#pragma once

// Line-delimited JSON dataset. Line 1 is a header
//
//   {"format":"flagsel-dataset","schema_version":1,"feature_order":[...21 names...]}
//
// and every further line is one run, keys in this order:
//
//   benchmark_id, task, features (array in feature_order), flags
//   (canonical text), flag_index, verdict | coverage_score,
//   elapsed_seconds, time_limit_seconds, class, note
//
// cover-error rows carry `verdict`, cover-branches rows `coverage_score`.

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flagsel/error.hpp"
#include "flagsel/features.hpp"
#include "flagsel/flagspace.hpp"
#include "flagsel/labeling.hpp"

namespace flagsel {

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr const char* kDatasetFormat = "flagsel-dataset";

struct DatasetRecord {
  std::string benchmark_id;
  TaskType task = TaskType::CoverError;
  FeatureVector features;
  FlagConfiguration flags;
  Verdict verdict = Verdict::Unknown;    // cover-error only
  std::optional<double> coverage_score;  // cover-branches only
  double elapsed_seconds = 0;
  double time_limit_seconds = 300;
  ClassLabel label = kWorstClass;
  std::string note;

  RunOutcome outcome() const {
    return {task, task == TaskType::CoverError ? verdict : Verdict::Unknown, coverage_score,
            elapsed_seconds, time_limit_seconds};
  }

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

using Dataset = std::vector<DatasetRecord>;

inline DatasetRecord make_record(const std::string& benchmark_id, const FeatureVector& features,
                                 const FlagConfiguration& flags, const RunOutcome& outcome,
                                 std::string note = {}) {
  DatasetRecord r;
  r.benchmark_id = benchmark_id;
  r.task = outcome.task;
  r.features = features;
  r.flags = flags;
  r.verdict = outcome.task == TaskType::CoverError ? outcome.verdict : Verdict::Unknown;
  r.coverage_score = outcome.coverage_score;
  r.elapsed_seconds = outcome.elapsed_seconds;
  r.time_limit_seconds = outcome.time_limit_seconds;
  r.label = classify(outcome);
  r.note = std::move(note);
  return r;
}

inline nlohmann::ordered_json dataset_header() {
  nlohmann::ordered_json h;
  h["format"] = kDatasetFormat;
  h["schema_version"] = kDatasetSchemaVersion;
  h["feature_order"] = nlohmann::ordered_json::array();
  for (auto name : kFeatureNames) h["feature_order"].push_back(name);
  return h;
}

inline nlohmann::ordered_json to_json(const DatasetRecord& r) {
  nlohmann::ordered_json j;
  j["benchmark_id"] = r.benchmark_id;
  j["task"] = to_string(r.task);
  j["features"] = nlohmann::ordered_json::array();
  const auto values = r.features.to_array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (is_average_feature(i))
      j["features"].push_back(values[i]);
    else
      j["features"].push_back(static_cast<std::uint64_t>(values[i]));
  }
  j["flags"] = to_canonical_text(r.flags);
  j["flag_index"] = canonical_index(r.flags);
  if (r.task == TaskType::CoverError)
    j["verdict"] = to_string(r.verdict);
  else
    j["coverage_score"] = r.coverage_score.value_or(0.0);
  j["elapsed_seconds"] = r.elapsed_seconds;
  j["time_limit_seconds"] = r.time_limit_seconds;
  j["class"] = r.label;
  j["note"] = r.note;
  return j;
}

inline void write_dataset(std::ostream& out, const Dataset& records) {
  out << dataset_header().dump() << '\n';
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline void write_dataset(const std::string& path, const Dataset& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::DatasetError, "cannot write " + path);
  write_dataset(out, records);
  if (!out) throw Error(ErrorCode::DatasetError, "write to " + path + " failed");
}

namespace detail {

inline DatasetRecord record_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw Error(ErrorCode::DatasetError, std::string("missing key '") + key + "'");
    return j.at(key);
  };
  DatasetRecord r;
  r.benchmark_id = need("benchmark_id").get<std::string>();
  r.task = parse_task_type(need("task").get<std::string>());
  r.features = feature_vector_from_json(need("features"));
  r.flags = parse_canonical_text(need("flags").get<std::string>());
  if (j.contains("flag_index") && j.at("flag_index").get<std::size_t>() != canonical_index(r.flags))
    throw Error(ErrorCode::DatasetError, "flag_index disagrees with flags");
  if (r.task == TaskType::CoverError)
    r.verdict = parse_verdict(need("verdict").get<std::string>());
  else
    r.coverage_score = need("coverage_score").get<double>();
  r.elapsed_seconds = need("elapsed_seconds").get<double>();
  r.time_limit_seconds = need("time_limit_seconds").get<double>();
  r.label = need("class").get<int>();
  if (r.label < 0 || r.label > kWorstClass)
    throw Error(ErrorCode::DatasetError, "class out of range");
  if (j.contains("note")) r.note = j.at("note").get<std::string>();
  r.outcome().validate();
  return r;
}

}  // namespace detail

/// Parses a dataset. A completely empty stream is an empty dataset;
/// otherwise the header must match this schema version and feature order.
/// Errors carry the 1-based line number.
inline Dataset read_dataset(std::istream& in) {
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::DatasetError, where + "malformed JSON (" + e.what() + ")");
    }
    if (!header_seen) {
      if (!j.is_object() || j.value("format", "") != kDatasetFormat)
        throw Error(ErrorCode::DatasetError, where + "missing dataset header");
      if (!j.contains("schema_version") || j["schema_version"] != kDatasetSchemaVersion)
        throw Error(ErrorCode::SchemaMismatch,
                    where + "schema_version " + (j.contains("schema_version") ? j["schema_version"].dump() : "?") +
                        " is not " + std::to_string(kDatasetSchemaVersion));
      if (j["feature_order"] != nlohmann::json(dataset_header()["feature_order"]))
        throw Error(ErrorCode::SchemaMismatch, where + "feature_order differs from this build's");
      header_seen = true;
      continue;
    }
    try {
      if (!j.is_object()) throw Error(ErrorCode::DatasetError, "record is not an object");
      out.push_back(detail::record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::DatasetError, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::DatasetError, where + e.what());
    }
  }
  return out;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DatasetError, "cannot open " + path);
  return read_dataset(in);
}

/// Indices of records whose stored class disagrees with classify() of
/// their stored outcome.
inline std::vector<std::size_t> audit_dataset(const Dataset& records) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      if (classify(records[i].outcome()) != records[i].label) bad.push_back(i);
    } catch (const Error&) {
      bad.push_back(i);
    }
  }
  return bad;
}

}  // namespace flagsel
