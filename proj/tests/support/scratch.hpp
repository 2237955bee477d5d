#pragma once

// Per-process scratch directory, so test binaries run side by side
// (ctest -j) never share files.

#include <filesystem>
#include <string>

#include <unistd.h>

namespace support {

inline std::filesystem::path scratch_dir() {
  static const std::filesystem::path dir = [] {
    const auto d = std::filesystem::temp_directory_path() / ("flagsel_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

}  // namespace support
