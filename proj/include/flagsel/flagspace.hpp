#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flagsel/error.hpp"

namespace flagsel {

enum class Strategy : std::uint8_t { Incremental, KInduction };
enum class Solver : std::uint8_t { Boolector, Z3 };
enum class Encoding : std::uint8_t { FloatBV, FixedBV };
enum class Unwind : std::uint8_t { Bounded10, Unlimited };

/// Fuzzer setting: off, or on for one of three fixed budgets.
enum class FuzzLevel : std::uint8_t { Off, Short, Medium, Long };

inline constexpr std::size_t kFlagSpaceSize = 384;

// Per-field cardinalities in canonical (lexicographic) order.
inline constexpr std::array<std::size_t, 7> kFieldRadix = {2, 2, 2, 3, 2, 2, 4};

inline constexpr std::array<std::uint32_t, 3> kKSteps = {1, 2, 3};
inline constexpr std::array<std::uint32_t, 2> kContextBounds = {2, 4};
inline constexpr std::uint32_t kUnwindBound = 10;

/// Fuzzer budgets in seconds: 10%, 33.3% and 75% of the 250 s left when a
/// 300 s limit reserves 50 s.
inline constexpr std::array<std::uint32_t, 4> kFuzzSeconds = {0, 25, 83, 188};
inline constexpr std::array<double, 4> kFuzzFractions = {0.0, 0.10, 0.333, 0.75};
inline constexpr double kDefaultTimeLimit = 300.0;
inline constexpr double kReservedSeconds = 50.0;

struct FlagConfiguration {
  Strategy strategy = Strategy::Incremental;
  Solver solver = Solver::Boolector;
  Encoding encoding = Encoding::FloatBV;
  std::uint8_t k_step_index = 0;         // into kKSteps
  std::uint8_t context_bound_index = 0;  // into kContextBounds
  Unwind unwind = Unwind::Bounded10;
  FuzzLevel fuzz = FuzzLevel::Off;

  std::uint32_t k_step() const { return kKSteps[k_step_index]; }
  std::uint32_t context_bound() const { return kContextBounds[context_bound_index]; }
  bool fuzz_enabled() const { return fuzz != FuzzLevel::Off; }
  std::uint32_t fuzz_seconds() const { return kFuzzSeconds[static_cast<std::size_t>(fuzz)]; }

  friend bool operator==(const FlagConfiguration&, const FlagConfiguration&) = default;
};

inline std::array<std::size_t, 7> field_digits(const FlagConfiguration& c) {
  return {static_cast<std::size_t>(c.strategy), static_cast<std::size_t>(c.solver),
          static_cast<std::size_t>(c.encoding), c.k_step_index,
          c.context_bound_index,                 static_cast<std::size_t>(c.unwind),
          static_cast<std::size_t>(c.fuzz)};
}

/// Position of `c` in the lexicographic enumeration, in [0, 383].
inline std::size_t canonical_index(const FlagConfiguration& c) {
  const auto digits = field_digits(c);
  std::size_t index = 0;
  for (std::size_t f = 0; f < digits.size(); ++f) index = index * kFieldRadix[f] + digits[f];
  return index;
}

inline FlagConfiguration configuration_at(std::size_t index) {
  if (index >= kFlagSpaceSize)
    throw Error(ErrorCode::InvalidArgument,
                "configuration index " + std::to_string(index) + " outside [0, 383]");
  std::array<std::size_t, 7> digits{};
  for (std::size_t f = digits.size(); f-- > 0;) {
    digits[f] = index % kFieldRadix[f];
    index /= kFieldRadix[f];
  }
  FlagConfiguration c;
  c.strategy = static_cast<Strategy>(digits[0]);
  c.solver = static_cast<Solver>(digits[1]);
  c.encoding = static_cast<Encoding>(digits[2]);
  c.k_step_index = static_cast<std::uint8_t>(digits[3]);
  c.context_bound_index = static_cast<std::uint8_t>(digits[4]);
  c.unwind = static_cast<Unwind>(digits[5]);
  c.fuzz = static_cast<FuzzLevel>(digits[6]);
  return c;
}

/// All 384 configurations in canonical index order.
inline std::vector<FlagConfiguration> enumerate_flags() {
  std::vector<FlagConfiguration> out;
  out.reserve(kFlagSpaceSize);
  for (std::size_t i = 0; i < kFlagSpaceSize; ++i) out.push_back(configuration_at(i));
  return out;
}

// ---- field spellings ------------------------------------------------------

inline std::string_view to_string(Strategy s) {
  return s == Strategy::Incremental ? "incremental" : "k-induction";
}
inline std::string_view to_string(Solver s) { return s == Solver::Boolector ? "boolector" : "z3"; }
inline std::string_view to_string(Encoding e) {
  return e == Encoding::FloatBV ? "floatbv" : "fixedbv";
}
inline std::string_view to_string(Unwind u) { return u == Unwind::Bounded10 ? "10" : "unlimited"; }
inline std::string to_string(FuzzLevel f) {
  return f == FuzzLevel::Off ? std::string("off")
                             : std::to_string(kFuzzSeconds[static_cast<std::size_t>(f)]);
}

inline constexpr std::array<std::string_view, 7> kFlagFieldNames = {
    "strategy", "solver", "encoding", "k_step", "context_bound", "unwind", "fuzz"};

/// Canonical value spelling of each field, in field order.
inline std::array<std::string, 7> field_values(const FlagConfiguration& c) {
  return {std::string(to_string(c.strategy)), std::string(to_string(c.solver)),
          std::string(to_string(c.encoding)), std::to_string(c.k_step()),
          std::to_string(c.context_bound()), std::string(to_string(c.unwind)),
          to_string(c.fuzz)};
}

/// `strategy=...;solver=...;encoding=...;kstep=...;ctx=...;unwind=...;fuzz=...`
inline std::string to_canonical_text(const FlagConfiguration& c) {
  static constexpr std::array<std::string_view, 7> keys = {"strategy", "solver", "encoding",
                                                           "kstep",    "ctx",    "unwind", "fuzz"};
  const auto values = field_values(c);
  std::string out;
  for (std::size_t f = 0; f < keys.size(); ++f) {
    if (f) out += ';';
    out += keys[f];
    out += '=';
    out += values[f];
  }
  return out;
}

inline FlagConfiguration parse_canonical_text(std::string_view text) {
  static constexpr std::array<std::string_view, 7> keys = {"strategy", "solver", "encoding",
                                                           "kstep",    "ctx",    "unwind", "fuzz"};
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::InvalidArgument,
                 "bad flag configuration '" + std::string(text) + "': " + why);
  };
  std::array<std::string_view, 7> values{};
  std::string_view rest = text;
  for (std::size_t f = 0; f < keys.size(); ++f) {
    const auto semi = rest.find(';');
    std::string_view part = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos || part.substr(0, eq) != keys[f])
      throw fail("expected key '" + std::string(keys[f]) + "'");
    values[f] = part.substr(eq + 1);
    if (semi == std::string_view::npos && f + 1 < keys.size()) throw fail("too few fields");
  }
  if (!rest.empty()) throw fail("trailing text");

  // Match each field spelling against the enumeration's spellings.
  std::array<std::size_t, 7> digits{};
  for (std::size_t f = 0; f < keys.size(); ++f) {
    bool found = false;
    for (std::size_t d = 0; d < kFieldRadix[f] && !found; ++d) {
      std::array<std::size_t, 7> probe{};
      probe[f] = d;
      std::size_t index = 0;
      for (std::size_t g = 0; g < probe.size(); ++g) index = index * kFieldRadix[g] + probe[g];
      if (field_values(configuration_at(index))[f] == values[f]) {
        digits[f] = d;
        found = true;
      }
    }
    if (!found) throw fail("unknown value '" + std::string(values[f]) + "' for " + std::string(keys[f]));
  }
  std::size_t index = 0;
  for (std::size_t f = 0; f < digits.size(); ++f) index = index * kFieldRadix[f] + digits[f];
  return configuration_at(index);
}

/// Fuzzer budget for `level` under a different per-run time limit, using
/// the same fractions of (limit - 50 s). Rounds half away from zero, so a
/// 300 s limit reproduces 25/83/188.
inline std::uint32_t scaled_fuzz_seconds(FuzzLevel level, double time_limit_seconds) {
  const double usable = std::max(0.0, time_limit_seconds - kReservedSeconds);
  return static_cast<std::uint32_t>(
      std::lround(kFuzzFractions[static_cast<std::size_t>(level)] * usable));
}

// ---- backend argument mapping --------------------------------------------

/// How one configuration field becomes command-line tokens. `args` is the
/// template for every value; `cases` overrides it for specific canonical
/// values. In a template, "{}" is replaced by the value's spelling, which
/// is the canonical spelling unless `spellings` renames it.
struct FieldTemplate {
  std::vector<std::string> args;
  std::vector<std::pair<std::string, std::vector<std::string>>> cases;
  std::vector<std::pair<std::string, std::string>> spellings;
};

struct BackendArgMap {
  std::array<std::optional<FieldTemplate>, 7> fields;
  /// When set, fuzz times are rescaled to this per-run limit.
  std::optional<double> fuzz_time_limit;

  /// `--strategy incr|kinduction --solver ... --unwind 10|-1 --fuzz off` or
  /// `--fuzz on --fuzz-time <s>`.
  static BackendArgMap defaults() {
    BackendArgMap m;
    m.fields[0] = FieldTemplate{{"--strategy", "{}"}, {},
                                {{"incremental", "incr"}, {"k-induction", "kinduction"}}};
    m.fields[1] = FieldTemplate{{"--solver", "{}"}, {}, {}};
    m.fields[2] = FieldTemplate{{"--encoding", "{}"}, {}, {}};
    m.fields[3] = FieldTemplate{{"--k-step", "{}"}, {}, {}};
    m.fields[4] = FieldTemplate{{"--context-bound", "{}"}, {}, {}};
    m.fields[5] = FieldTemplate{{"--unwind", "{}"}, {}, {{"unlimited", "-1"}}};
    m.fields[6] = FieldTemplate{{"--fuzz", "on", "--fuzz-time", "{}"},
                                {{"off", {"--fuzz", "off"}}}, {}};
    return m;
  }
};

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(ErrorCode::InvalidArgument, where + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Loads a mapping from JSON of the form
/// `{"strategy": {"args": [...], "cases": {...}, "spellings": {...}}, ...}`
/// with optional top-level `"fuzz_time_limit_seconds"`. Fields left out
/// are reported by to_backend_args, not here.
inline BackendArgMap backend_arg_map_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "argument map must be a JSON object");
  BackendArgMap m;
  for (std::size_t f = 0; f < kFlagFieldNames.size(); ++f) {
    const std::string name(kFlagFieldNames[f]);
    if (!j.contains(name)) continue;
    const auto& entry = j.at(name);
    if (!entry.is_object() || !entry.contains("args"))
      throw Error(ErrorCode::InvalidArgument, "argument map field '" + name + "' needs \"args\"");
    FieldTemplate t;
    t.args = detail::string_list(entry.at("args"), name + ".args");
    if (entry.contains("cases")) {
      for (const auto& [value, tokens] : entry.at("cases").items())
        t.cases.emplace_back(value, detail::string_list(tokens, name + ".cases." + value));
    }
    if (entry.contains("spellings")) {
      for (const auto& [value, spelled] : entry.at("spellings").items()) {
        if (!spelled.is_string())
          throw Error(ErrorCode::InvalidArgument, name + ".spellings." + value + " must be a string");
        t.spellings.emplace_back(value, spelled.get<std::string>());
      }
    }
    m.fields[f] = std::move(t);
  }
  if (j.contains("fuzz_time_limit_seconds")) {
    const auto& v = j.at("fuzz_time_limit_seconds");
    if (!v.is_number() || v.get<double>() <= kReservedSeconds)
      throw Error(ErrorCode::InvalidArgument, "fuzz_time_limit_seconds must exceed 50");
    m.fuzz_time_limit = v.get<double>();
  }
  return m;
}

/// Deterministic command-line tokens for `config`. Throws MappingIncomplete
/// if any field has no template.
inline std::vector<std::string> to_backend_args(const FlagConfiguration& config,
                                                const BackendArgMap& mapping = BackendArgMap::defaults()) {
  auto values = field_values(config);
  if (mapping.fuzz_time_limit && config.fuzz_enabled())
    values[6] = std::to_string(scaled_fuzz_seconds(config.fuzz, *mapping.fuzz_time_limit));
  const auto canonical = field_values(config);

  std::vector<std::string> out;
  for (std::size_t f = 0; f < kFlagFieldNames.size(); ++f) {
    if (!mapping.fields[f])
      throw Error(ErrorCode::MappingIncomplete,
                  "no argument template for field '" + std::string(kFlagFieldNames[f]) + "'");
    const FieldTemplate& t = *mapping.fields[f];

    std::string spelled = values[f];
    for (const auto& [from, to] : t.spellings)
      if (from == canonical[f]) spelled = to;

    const std::vector<std::string>* tmpl = &t.args;
    for (const auto& [value, tokens] : t.cases)
      if (value == canonical[f]) tmpl = &tokens;

    for (std::string token : *tmpl) {
      for (auto at = token.find("{}"); at != std::string::npos; at = token.find("{}", at + spelled.size()))
        token.replace(at, 2, spelled);
      out.push_back(std::move(token));
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const FlagConfiguration& c) {
  nlohmann::ordered_json j;
  j["strategy"] = to_string(c.strategy);
  j["solver"] = to_string(c.solver);
  j["encoding"] = to_string(c.encoding);
  j["k_step"] = c.k_step();
  j["context_bound"] = c.context_bound();
  j["unwind"] = c.unwind == Unwind::Bounded10 ? nlohmann::ordered_json(kUnwindBound)
                                              : nlohmann::ordered_json("unlimited");
  j["fuzz"] = c.fuzz_enabled() ? nlohmann::ordered_json(c.fuzz_seconds())
                               : nlohmann::ordered_json("off");
  return j;
}

}  // namespace flagsel
