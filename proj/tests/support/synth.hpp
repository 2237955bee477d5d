#pragma once

// Random C programs from a small grammar of nested for/while/do/if/else,
// nondet calls and plain statements. Used by property tests and the
// end-to-end selection check.

#include <algorithm>
#include <cstdint>
#include <string>

#include "flagsel/detail/random.hpp"
#include "flagsel/lexer.hpp"

namespace synth {

struct Options {
  int max_depth = 4;
  int max_statements = 4;
  double construct_probability = 0.55;
  double nondet_probability = 0.3;
};

class Generator {
 public:
  Generator(std::uint64_t seed, Options opt) : rng_(seed), opt_(opt) {}

  std::string body() { return block_items(0); }

 private:
  bool chance(double p) { return rng_.uniform() < p; }
  int pick(int n) { return static_cast<int>(rng_.below(static_cast<std::uint64_t>(n))); }

  std::string indent(int depth) const { return std::string(2 * (depth + 1), ' '); }

  std::string condition() {
    switch (pick(6)) {
      case 0: return "1";
      case 1: return "true";
      case 2: return "__VERIFIER_nondet_int()";
      case 3: return "x < " + std::to_string(pick(100));
      case 4: return "0";
      default: return "y != x";
    }
  }

  std::string simple(int depth) {
    if (chance(opt_.nondet_probability)) return indent(depth) + "x = __VERIFIER_nondet_int();\n";
    switch (pick(3)) {
      case 0: return indent(depth) + "x = x + 1;\n";
      case 1: return indent(depth) + "y = f(x, \"for while\");\n";
      default: return indent(depth) + "if_count = x;\n";
    }
  }

  // Braced block, or occasionally a single statement.
  std::string construct_body(int depth) {
    if (chance(0.2)) return "\n" + statement(depth + 1);
    return " {\n" + block_items(depth + 1) + indent(depth) + "}\n";
  }

  std::string statement(int depth) {
    if (depth >= opt_.max_depth || !chance(opt_.construct_probability)) return simple(depth);
    const std::string in = indent(depth);
    switch (pick(5)) {
      case 0: {
        const std::string cond = chance(0.3) ? "" : "i < " + std::to_string(1 + pick(20));
        return in + "for (i = 0; " + cond + "; i++)" + construct_body(depth);
      }
      case 1: return in + "while (" + condition() + ")" + construct_body(depth);
      case 2: return in + "do {\n" + block_items(depth + 1) + in + "} while (" + condition() + ");\n";
      default: {
        std::string s = in + "if (" + condition() + ")" + construct_body(depth);
        if (chance(0.4)) {
          if (chance(0.3)) s += in + "else " + statement(depth).substr(in.size());
          else s += in + "else" + construct_body(depth);
        }
        return s;
      }
    }
  }

  std::string block_items(int depth) {
    std::string out;
    const int n = 1 + pick(opt_.max_statements);
    for (int i = 0; i < n; ++i) out += statement(depth);
    return out;
  }

  flagsel::detail::SplitMix rng_;
  Options opt_;
};

inline std::string wrap_function(const std::string& body) {
  return "int __VERIFIER_nondet_int(void);\nint f(int, const char*);\nint x, y, i, if_count;\n"
         "void run(void) {\n" + body + "}\n";
}

inline std::string program(std::uint64_t seed, Options opt = {}) {
  return wrap_function(Generator(seed, opt).body());
}

/// Many generated functions in one file, at least `min_lines` long.
inline std::string large_program(std::size_t min_lines, std::uint64_t seed) {
  std::string out = "int __VERIFIER_nondet_int(void);\nint f(int, const char*);\nint x, y, i, if_count;\n";
  std::size_t lines = 3;
  for (std::uint64_t k = 0; lines < min_lines; ++k) {
    const std::string fn = "void run" + std::to_string(k) + "(void) {\n" + Generator(seed + k, {}).body() + "}\n";
    lines += static_cast<std::size_t>(std::count(fn.begin(), fn.end(), '\n'));
    out += fn;
  }
  return out;
}

/// Same tokens, re-emitted with comments and whitespace of every kind
/// between them.
inline std::string reformat(const std::string& source, std::uint64_t seed) {
  flagsel::detail::SplitMix rng(seed);
  std::string out;
  for (const auto& t : flagsel::tokenize(source)) {
    out += t.lexeme;
    switch (rng.below(6)) {
      case 0: out += " "; break;
      case 1: out += "\n\t"; break;
      case 2: out += " /* while (1) { for */ "; break;
      case 3: out += " // if (x) {\n"; break;
      case 4: out += "\n\n   "; break;
      default: out += "/**/"; break;
    }
  }
  return out;
}

}  // namespace synth
