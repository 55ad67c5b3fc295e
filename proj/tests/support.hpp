#pragma once

#include <filesystem>
#include <string>

#include "refactorkit/common.hpp"

namespace rktest {

inline std::filesystem::path fixtures() { return REFACTORKIT_FIXTURES; }

inline std::string fixture_text(const std::string& rel) { return refactorkit::read_file(fixtures() / rel); }

inline refactorkit::Json fixture_json(const std::string& rel) {
  return refactorkit::Json::parse(fixture_text(rel));
}

/// Temporary directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "refactorkit-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw refactorkit::IoFailure("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rktest
