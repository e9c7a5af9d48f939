#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "centra/error.hpp"

namespace centra::testutil {

// Unique per-test scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("centra_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

#ifdef CENTRA_GOLDEN_DIR
inline std::string golden(const std::string& name) {
  return slurp(std::filesystem::path(CENTRA_GOLDEN_DIR) / (name + ".golden"));
}
#endif

// nullopt when fn() returned normally, the error code when it raised.
template <typename F>
std::optional<ErrorCode> error_code_of(F&& fn) {
  try {
    fn();
    return std::nullopt;
  } catch (const Error& e) {
    return e.code();
  }
}

}  // namespace centra::testutil
