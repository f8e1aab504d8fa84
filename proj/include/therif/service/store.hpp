#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace therif::service {

// Append-only JSON-lines file. Each append is written with a single write()
// and fsync'd. On open a torn trailing record (no final newline or not valid
// JSON) is cut off; a bad record before the tail raises ParseError.
// A read-only log skips the torn tail without touching the file.
class JsonlLog {
 public:
  JsonlLog() = default;
  explicit JsonlLog(std::filesystem::path path, bool read_only = false);
  ~JsonlLog();
  JsonlLog(const JsonlLog&) = delete;
  JsonlLog& operator=(const JsonlLog&) = delete;
  JsonlLog(JsonlLog&& other) noexcept;
  JsonlLog& operator=(JsonlLog&& other) noexcept;

  // Records that survived recovery, in file order.
  const std::vector<nlohmann::json>& records() const { return records_; }
  // Bytes dropped from a torn tail at open time.
  std::uintmax_t recovered_bytes() const { return recovered_bytes_; }
  const std::filesystem::path& path() const { return path_; }

  void append(const nlohmann::json& record);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::vector<nlohmann::json> records_;
  std::uintmax_t recovered_bytes_ = 0;
};

// Parses complete lines only; reports the byte length of the valid prefix.
std::vector<nlohmann::json> read_jsonl(const std::string& text, std::size_t* valid_bytes = nullptr);

// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace therif::service
