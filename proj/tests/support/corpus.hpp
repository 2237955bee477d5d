#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "flagsel/campaign/benchmark.hpp"
#include "flagsel/features.hpp"

namespace corpus {

inline std::filesystem::path dir() { return std::filesystem::path(FLAGSEL_TEST_DATA) / "corpus"; }

// "p/q" or a plain number.
inline double reference_value(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  const auto slash = s.find('/');
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

/// file name -> hand-counted feature array.
inline std::map<std::string, std::array<double, flagsel::kFeatureCount>> reference() {
  const auto j = nlohmann::json::parse(flagsel::read_text_file(dir() / "reference.json"));
  std::map<std::string, std::array<double, flagsel::kFeatureCount>> out;
  for (const auto& [file, fields] : j.items()) {
    if (file.starts_with("_")) continue;
    std::array<double, flagsel::kFeatureCount> v{};
    for (const auto& [name, value] : fields.items()) {
      std::size_t k = 0;
      while (k < flagsel::kFeatureCount && flagsel::kFeatureNames[k] != name) ++k;
      if (k == flagsel::kFeatureCount) throw std::runtime_error("unknown feature " + name + " in " + file);
      v[k] = reference_value(value);
    }
    out[file] = v;
  }
  return out;
}

}  // namespace corpus
