#include "refactorkit/common.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <utility>

namespace refactorkit {

namespace fs = std::filesystem;

SchemaError::SchemaError(std::string loc, std::string why)
    : std::runtime_error(loc + ": " + why), location(std::move(loc)), reason(std::move(why)) {}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoFailure("short write to " + path.string());
}

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view data) { EVP_DigestUpdate(ctx_, data.data(), data.size()); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out = "sha256:";
    for (unsigned i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 0xF];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_digest(std::string_view data) {
  Sha256 h;
  h.update(data);
  return h.hex();
}

std::vector<std::string> list_files(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::is_directory(root)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) out.push_back(fs::relative(entry.path(), root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string files_digest(std::vector<FileEntry> files) {
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  Sha256 h;
  for (const auto& f : files) {
    h.update(f.path);
    h.update(std::string_view("\0", 1));
    h.update(std::to_string(f.content.size()));
    h.update(std::string_view("\0", 1));
    h.update(f.content);
  }
  return h.hex();
}

std::string tree_digest(const fs::path& root) {
  std::vector<FileEntry> files;
  for (auto& rel : list_files(root)) {
    std::string content = read_file(root / rel);
    files.push_back({std::move(rel), std::move(content)});
  }
  return files_digest(std::move(files));
}

namespace {

std::uint64_t tar_octal(std::string_view field) {
  std::uint64_t v = 0;
  for (const char c : field) {
    if (c == '\0' || c == ' ') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw IoFailure("corrupt tar header field");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string tar_string(std::string_view field) { return std::string(field.substr(0, field.find('\0'))); }

}  // namespace

std::vector<FileEntry> read_tar(const fs::path& archive) {
  const std::string data = read_file(archive);
  std::vector<FileEntry> out;
  std::string long_name;
  std::size_t pos = 0;
  while (pos + 512 <= data.size()) {
    const std::string_view header(data.data() + pos, 512);
    if (header.find_first_not_of('\0') == std::string_view::npos) break;
    const std::uint64_t size = tar_octal(header.substr(124, 12));
    const char type = header[156];
    std::string name = tar_string(header.substr(0, 100));
    const std::string prefix = tar_string(header.substr(345, 155));
    if (header.substr(257, 5) == "ustar" && !prefix.empty()) name = prefix + "/" + name;
    pos += 512;
    if (pos + size > data.size()) throw IoFailure("truncated tar archive " + archive.string());
    std::string body = data.substr(pos, size);
    pos += (size + 511) / 512 * 512;
    if (type == 'L') {
      long_name = tar_string(body);
      continue;
    }
    if (!long_name.empty()) name = std::exchange(long_name, {});
    if (type != '0' && type != '\0') continue;
    while (name.starts_with("./")) name.erase(0, 2);
    const fs::path member(name);
    if (name.empty() || name.front() == '/' || std::find(member.begin(), member.end(), "..") != member.end()) {
      throw IoFailure("unsafe tar member name '" + name + "'");
    }
    out.push_back({std::move(name), std::move(body)});
  }
  return out;
}

void write_tar(const fs::path& archive, const std::vector<FileEntry>& files) {
  std::string data;
  for (const auto& f : files) {
    if (f.path.size() > 100) throw IoFailure("tar member name too long: " + f.path);
    std::string header(512, '\0');
    header.replace(0, f.path.size(), f.path);
    auto octal = [&](std::size_t off, std::size_t width, std::uint64_t v) {
      std::string digits(width - 1, '0');
      for (std::size_t i = width - 1; i-- > 0; v >>= 3) digits[i] = static_cast<char>('0' + (v & 7));
      header.replace(off, width - 1, digits);
    };
    octal(100, 8, 0644);
    octal(108, 8, 0);
    octal(116, 8, 0);
    octal(124, 12, f.content.size());
    octal(136, 12, 0);
    header[156] = '0';
    header.replace(257, 6, std::string("ustar\0", 6));
    header.replace(263, 2, "00");
    header.replace(148, 8, "        ");
    unsigned sum = 0;
    for (const char c : header) sum += static_cast<unsigned char>(c);
    octal(148, 7, sum);
    header[155] = ' ';
    data += header;
    data += f.content;
    data.append((512 - f.content.size() % 512) % 512, '\0');
  }
  data.append(1024, '\0');
  write_file(archive, data);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(pos));
      break;
    }
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::size_t word_count(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

std::string basename_of(std::string_view path) {
  const auto slash = path.find_last_of('/');
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

std::string py_list_repr(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    // Python picks double quotes only when the text has a single quote and no double quote.
    const bool dq = items[i].find('\'') != std::string::npos && items[i].find('"') == std::string::npos;
    const char q = dq ? '"' : '\'';
    out += q;
    for (const char c : items[i]) {
      if (c == '\\') out += "\\\\";
      else if (c == '\n') out += "\\n";
      else if (c == '\t') out += "\\t";
      else if (c == q) (out += '\\') += c;
      else out += c;
    }
    out += q;
  }
  return out + "]";
}

void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed,
                         const std::string& location) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(location, "unknown field '" + key + "'");
    }
  }
}

}  // namespace refactorkit
