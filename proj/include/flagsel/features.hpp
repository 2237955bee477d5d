#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flagsel/error.hpp"
#include "flagsel/lexer.hpp"

namespace flagsel {

inline constexpr std::size_t kFeatureCount = 21;

/// Serialization order of the structural features. Model inputs, dataset
/// rows and the JSON form all use exactly this order.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "for_count",        "for_max_depth",      "for_depth_avg",
    "while_count",      "while_infinite_count", "while_max_depth",
    "while_depth_avg",  "while_infinite_with_nondet_count",
    "do_count",         "do_max_depth",       "do_depth_avg",
    "do_infinite_count",
    "if_count",         "if_max_depth",       "if_depth_avg",
    "nested_if_count",  "else_count",         "else_depth_avg",
    "nondet_call_count", "nondet_call_depth_avg", "has_nondet_in_loop"};

struct FeatureVector {
  std::uint32_t for_count = 0;
  std::uint32_t for_max_depth = 0;
  double for_depth_avg = 0;

  std::uint32_t while_count = 0;
  std::uint32_t while_infinite_count = 0;
  std::uint32_t while_max_depth = 0;
  double while_depth_avg = 0;
  std::uint32_t while_infinite_with_nondet_count = 0;

  std::uint32_t do_count = 0;
  std::uint32_t do_max_depth = 0;
  double do_depth_avg = 0;
  std::uint32_t do_infinite_count = 0;

  std::uint32_t if_count = 0;
  std::uint32_t if_max_depth = 0;
  double if_depth_avg = 0;
  std::uint32_t nested_if_count = 0;
  std::uint32_t else_count = 0;
  double else_depth_avg = 0;

  std::uint32_t nondet_call_count = 0;
  double nondet_call_depth_avg = 0;
  std::uint32_t has_nondet_in_loop = 0;

  std::array<double, kFeatureCount> to_array() const {
    return {static_cast<double>(for_count),
            static_cast<double>(for_max_depth),
            for_depth_avg,
            static_cast<double>(while_count),
            static_cast<double>(while_infinite_count),
            static_cast<double>(while_max_depth),
            while_depth_avg,
            static_cast<double>(while_infinite_with_nondet_count),
            static_cast<double>(do_count),
            static_cast<double>(do_max_depth),
            do_depth_avg,
            static_cast<double>(do_infinite_count),
            static_cast<double>(if_count),
            static_cast<double>(if_max_depth),
            if_depth_avg,
            static_cast<double>(nested_if_count),
            static_cast<double>(else_count),
            else_depth_avg,
            static_cast<double>(nondet_call_count),
            nondet_call_depth_avg,
            static_cast<double>(has_nondet_in_loop)};
  }

  /// Inverse of to_array. Count slots must hold non-negative integers.
  static FeatureVector from_array(const std::array<double, kFeatureCount>& v) {
    auto count = [&](std::size_t i) -> std::uint32_t {
      if (!(v[i] >= 0) || v[i] != static_cast<double>(static_cast<std::uint32_t>(v[i])))
        throw Error(ErrorCode::InvalidArgument,
                    std::string(kFeatureNames[i]) + " must be a non-negative integer");
      return static_cast<std::uint32_t>(v[i]);
    };
    auto average = [&](std::size_t i) -> double {
      if (!(v[i] >= 0))
        throw Error(ErrorCode::InvalidArgument,
                    std::string(kFeatureNames[i]) + " must be non-negative");
      return v[i];
    };
    FeatureVector f;
    f.for_count = count(0);
    f.for_max_depth = count(1);
    f.for_depth_avg = average(2);
    f.while_count = count(3);
    f.while_infinite_count = count(4);
    f.while_max_depth = count(5);
    f.while_depth_avg = average(6);
    f.while_infinite_with_nondet_count = count(7);
    f.do_count = count(8);
    f.do_max_depth = count(9);
    f.do_depth_avg = average(10);
    f.do_infinite_count = count(11);
    f.if_count = count(12);
    f.if_max_depth = count(13);
    f.if_depth_avg = average(14);
    f.nested_if_count = count(15);
    f.else_count = count(16);
    f.else_depth_avg = average(17);
    f.nondet_call_count = count(18);
    f.nondet_call_depth_avg = average(19);
    f.has_nondet_in_loop = count(20);
    if (f.has_nondet_in_loop > 1)
      throw Error(ErrorCode::InvalidArgument, "has_nondet_in_loop must be 0 or 1");
    return f;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline bool is_average_feature(std::size_t index) {
  return index == 2 || index == 6 || index == 10 || index == 14 || index == 17 || index == 19;
}

/// JSON object with the 21 keys in serialization order. Counts are
/// integers, averages are numbers.
inline nlohmann::ordered_json to_json(const FeatureVector& f) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  const auto values = f.to_array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const std::string key(kFeatureNames[i]);
    if (is_average_feature(i))
      j[key] = values[i];
    else
      j[key] = static_cast<std::uint64_t>(values[i]);
  }
  return j;
}

inline FeatureVector feature_vector_from_json(const nlohmann::ordered_json& j) {
  std::array<double, kFeatureCount> values{};
  if (j.is_array()) {
    if (j.size() != kFeatureCount)
      throw Error(ErrorCode::InvalidArgument, "feature array must have 21 entries");
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (!j[i].is_number()) throw Error(ErrorCode::InvalidArgument, "feature entries must be numbers");
      values[i] = j[i].get<double>();
    }
  } else if (j.is_object()) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const std::string key(kFeatureNames[i]);
      if (!j.contains(key) || !j[key].is_number())
        throw Error(ErrorCode::InvalidArgument, "feature object lacks numeric key " + key);
      values[i] = j[key].get<double>();
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "features must be an array or object");
  }
  return FeatureVector::from_array(values);
}

struct ExtractOptions {
  std::vector<std::string> nondet_prefixes{"__VERIFIER_nondet"};
};

namespace detail {

enum class Construct { For, While, Do, If, Else };

struct DepthStats {
  std::uint32_t count = 0;
  std::uint32_t max_depth = 0;
  std::uint64_t depth_sum = 0;

  void add(std::uint32_t depth) {
    ++count;
    max_depth = std::max(max_depth, depth);
    depth_sum += depth;
  }
  double average() const { return count == 0 ? 0.0 : static_cast<double>(depth_sum) / count; }
};

// `1`, `0x10`, `7u`, ... but not `0`, `1.0` or `1e3`.
inline bool is_nonzero_integer_constant(std::string_view lexeme) {
  while (!lexeme.empty() && (lexeme.back() == 'u' || lexeme.back() == 'U' ||
                             lexeme.back() == 'l' || lexeme.back() == 'L'))
    lexeme.remove_suffix(1);
  if (lexeme.empty()) return false;
  int base = 10;
  if (lexeme.size() > 2 && lexeme[0] == '0' && (lexeme[1] == 'x' || lexeme[1] == 'X')) {
    base = 16;
    lexeme.remove_prefix(2);
  } else if (lexeme.size() > 2 && lexeme[0] == '0' && (lexeme[1] == 'b' || lexeme[1] == 'B')) {
    base = 2;
    lexeme.remove_prefix(2);
  } else if (lexeme.size() > 1 && lexeme[0] == '0') {
    base = 8;
  }
  bool nonzero = false;
  for (char c : lexeme) {
    int digit = -1;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    if (digit < 0 || digit >= base) return false;
    nonzero = nonzero || digit != 0;
  }
  return nonzero;
}

// Syntactic "runs forever" test on the tokens of a loop condition.
inline bool is_infinite_condition(const Token* begin, const Token* end, bool empty_means_infinite) {
  const auto n = end - begin;
  if (n == 0) return empty_means_infinite;
  if (n != 1) return false;
  if (begin->kind == TokenKind::Identifier) return begin->lexeme == "true";
  return begin->kind == TokenKind::Number && is_nonzero_integer_constant(begin->lexeme);
}

// Recursive walk over the token stream. A counted construct's body is the
// following statement: a braced block, another construct, or tokens up to
// the next top-level `;`.
class StructureWalker {
 public:
  StructureWalker(const TokenStream& tokens, const ExtractOptions& options)
      : toks_(tokens), options_(options) {}

  FeatureVector run() {
    scan_sequence(false);
    FeatureVector f;
    f.for_count = for_.count;
    f.for_max_depth = for_.max_depth;
    f.for_depth_avg = for_.average();
    f.while_count = while_.count;
    f.while_infinite_count = while_infinite_;
    f.while_max_depth = while_.max_depth;
    f.while_depth_avg = while_.average();
    f.while_infinite_with_nondet_count = while_infinite_nondet_;
    f.do_count = do_.count;
    f.do_max_depth = do_.max_depth;
    f.do_depth_avg = do_.average();
    f.do_infinite_count = do_infinite_;
    f.if_count = if_.count;
    f.if_max_depth = if_.max_depth;
    f.if_depth_avg = if_.average();
    f.nested_if_count = nested_if_;
    f.else_count = else_.count;
    f.else_depth_avg = else_.average();
    f.nondet_call_count = nondet_.count;
    f.nondet_call_depth_avg = nondet_.average();
    f.has_nondet_in_loop = nondet_in_loop_ ? 1 : 0;
    return f;
  }

 private:
  struct Frame {
    Construct kind;
    bool infinite = false;
    bool saw_nondet = false;
  };

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& cur() const { return toks_[pos_]; }
  bool cur_is_punct(std::string_view p) const { return !at_end() && cur().is_punct(p); }
  bool cur_is_keyword(std::string_view k) const { return !at_end() && cur().is_keyword(k); }

  bool cur_starts_construct() const {
    return cur_is_keyword("for") || cur_is_keyword("while") || cur_is_keyword("do") ||
           cur_is_keyword("if");
  }

  std::uint32_t next_depth() const { return static_cast<std::uint32_t>(open_.size()) + 1; }

  // Consumes one token, recording it if it starts a nondet call.
  void consume_plain() {
    const Token& t = cur();
    if (t.kind == TokenKind::Identifier && pos_ + 1 < toks_.size() &&
        toks_[pos_ + 1].is_punct("(") && matches_nondet(t.lexeme)) {
      record_nondet_call();
    }
    ++pos_;
  }

  bool matches_nondet(std::string_view name) const {
    for (const auto& prefix : options_.nondet_prefixes)
      if (!prefix.empty() && name.starts_with(prefix)) return true;
    return false;
  }

  void record_nondet_call() {
    // At file scope outside every construct the name can only be a
    // prototype or a definition, never a call.
    if (open_.empty() && brace_depth_ == 0) return;
    nondet_.add(static_cast<std::uint32_t>(open_.size()));
    for (auto& frame : open_) {
      if (frame.kind == Construct::For || frame.kind == Construct::While ||
          frame.kind == Construct::Do)
        nondet_in_loop_ = true;
      frame.saw_nondet = true;
    }
  }

  // Sequence of items up to the matching `}` (consumed) or end of input.
  void scan_sequence(bool until_close) {
    while (!at_end()) {
      if (cur_is_punct("}")) {
        ++pos_;
        if (until_close) {
          --brace_depth_;
          return;
        }
        continue;
      }
      if (cur_is_punct("{")) {
        ++pos_;
        ++brace_depth_;
        scan_sequence(true);
        continue;
      }
      if (cur_starts_construct()) {
        parse_construct();
        continue;
      }
      consume_plain();
    }
  }

  void parse_statement() {
    if (at_end()) return;
    if (cur_is_punct("{")) {
      ++pos_;
      ++brace_depth_;
      scan_sequence(true);
      return;
    }
    if (cur_starts_construct()) {
      parse_construct();
      return;
    }
    if (cur_is_punct(";")) {
      ++pos_;
      return;
    }
    if (cur_is_keyword("switch")) {
      ++pos_;
      scan_header();
      parse_statement();
      return;
    }
    if (cur_is_keyword("case") || cur_is_keyword("default")) {
      while (!at_end() && !cur_is_punct(":") && !cur_is_punct("{") && !cur_is_punct("}"))
        consume_plain();
      if (cur_is_punct(":")) ++pos_;
      parse_statement();
      return;
    }
    if (cur().kind == TokenKind::Identifier && pos_ + 1 < toks_.size() &&
        toks_[pos_ + 1].is_punct(":")) {
      pos_ += 2;
      parse_statement();
      return;
    }
    parse_simple_statement();
  }

  // Expression or declaration statement. Stops after `;`, or before a `}`
  // or construct keyword that cannot belong to it.
  void parse_simple_statement() {
    int parens = 0;
    while (!at_end()) {
      const Token& t = cur();
      if (t.is_punct("{")) {
        ++pos_;
        ++brace_depth_;
        scan_sequence(true);
        continue;
      }
      if (t.is_punct("}")) return;
      if (parens == 0 && cur_starts_construct()) return;
      if (t.is_punct("(")) ++parens;
      else if (t.is_punct(")")) parens = std::max(0, parens - 1);
      else if (t.is_punct(";") && parens == 0) {
        ++pos_;
        return;
      }
      consume_plain();
    }
  }

  // Parenthesized header after a construct keyword. Returns the index
  // range of the tokens strictly inside the parentheses.
  std::pair<std::size_t, std::size_t> scan_header() {
    if (!cur_is_punct("(")) return {pos_, pos_};
    ++pos_;
    const std::size_t begin = pos_;
    int parens = 1;
    while (!at_end()) {
      const Token& t = cur();
      if (t.is_punct("{") || t.is_punct("}")) break;
      if (t.is_punct("(")) ++parens;
      if (t.is_punct(")") && --parens == 0) {
        const std::size_t end = pos_;
        ++pos_;
        return {begin, end};
      }
      consume_plain();
    }
    return {begin, pos_};
  }

  void parse_construct() {
    const std::string& kw = cur().lexeme;
    const std::uint32_t depth = next_depth();
    ++pos_;

    if (kw == "for") {
      for_.add(depth);
      open_.push_back({Construct::For});
      scan_header();
      parse_statement();
      open_.pop_back();
      return;
    }

    if (kw == "while") {
      while_.add(depth);
      open_.push_back({Construct::While});
      const auto [b, e] = scan_header();
      const bool infinite = is_infinite_condition(toks_.data() + b, toks_.data() + e, false);
      open_.back().infinite = infinite;
      if (infinite) ++while_infinite_;
      parse_statement();
      if (open_.back().infinite && open_.back().saw_nondet) ++while_infinite_nondet_;
      open_.pop_back();
      return;
    }

    if (kw == "do") {
      do_.add(depth);
      open_.push_back({Construct::Do});
      parse_statement();
      if (cur_is_keyword("while")) {
        ++pos_;
        const auto [b, e] = scan_header();
        if (is_infinite_condition(toks_.data() + b, toks_.data() + e, false)) ++do_infinite_;
        if (cur_is_punct(";")) ++pos_;
      }
      open_.pop_back();
      return;
    }

    // if [else]
    if_.add(depth);
    if (if_nesting_ >= 1) ++nested_if_;
    open_.push_back({Construct::If});
    ++if_nesting_;
    scan_header();
    parse_statement();
    --if_nesting_;
    open_.pop_back();

    if (cur_is_keyword("else")) {
      ++pos_;
      else_.add(depth);
      open_.push_back({Construct::Else});
      ++if_nesting_;
      parse_statement();
      --if_nesting_;
      open_.pop_back();
    }
  }

  const TokenStream& toks_;
  const ExtractOptions& options_;
  std::size_t pos_ = 0;
  std::int64_t brace_depth_ = 0;
  std::vector<Frame> open_;
  int if_nesting_ = 0;

  DepthStats for_, while_, do_, if_, else_, nondet_;
  std::uint32_t while_infinite_ = 0;
  std::uint32_t while_infinite_nondet_ = 0;
  std::uint32_t do_infinite_ = 0;
  std::uint32_t nested_if_ = 0;
  bool nondet_in_loop_ = false;
};

}  // namespace detail

inline FeatureVector extract_features(const TokenStream& tokens, const ExtractOptions& options = {}) {
  return detail::StructureWalker(tokens, options).run();
}

/// Structural profile of one C translation unit.
///
/// Depth of a construct is its 1-based nesting level counting every
/// enclosing for/while/do/if/else. `nested_if_count` counts ifs that sit
/// inside another if or else branch. A nondet call is an identifier with
/// one of `options.nondet_prefixes` followed by `(`; its depth is the
/// number of enclosing constructs (0 outside all of them). Calls in a
/// construct's header belong to that construct.
inline FeatureVector extract_features(std::string_view source, const ExtractOptions& options = {}) {
  return extract_features(tokenize(source), options);
}

}  // namespace flagsel
