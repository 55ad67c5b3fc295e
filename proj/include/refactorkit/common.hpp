#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace refactorkit {

using Json = nlohmann::ordered_json;

struct SchemaError : std::runtime_error {
  SchemaError(std::string location, std::string reason);

  std::string location;
  std::string reason;
};

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// "sha256:<64 hex>"
std::string sha256_digest(std::string_view data);

/// Sorted repo-relative paths of regular files under root, '/'-separated.
std::vector<std::string> list_files(const std::filesystem::path& root);

struct FileEntry {
  std::string path;  // repo-relative, '/'-separated
  std::string content;
};

/// Digest over sorted (relpath \0 size \0 content) records.
std::string files_digest(std::vector<FileEntry> files);
std::string tree_digest(const std::filesystem::path& root);

/// Regular-file members of a ustar/GNU tar archive. Throws IoFailure.
std::vector<FileEntry> read_tar(const std::filesystem::path& archive);
void write_tar(const std::filesystem::path& archive, const std::vector<FileEntry>& files);

std::vector<std::string> split_lines(std::string_view text);
std::size_t word_count(std::string_view text);
std::string basename_of(std::string_view path);

/// Python repr of a list of strings, e.g. ['a', 'b'].
std::string py_list_repr(const std::vector<std::string>& items);

/// Fails with SchemaError naming the first key not in `allowed`.
void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                         const std::string& location);

}  // namespace refactorkit
