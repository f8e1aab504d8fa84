#include "therif/service/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "therif/core/error.hpp"

namespace therif::service {

namespace {

[[noreturn]] void fail(const std::string& what, const std::filesystem::path& path) {
  throw Error(what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("write", path);
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

std::vector<nlohmann::json> read_jsonl(const std::string& text, std::size_t* valid_bytes) {
  std::vector<nlohmann::json> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    ++line_no;
    const auto line = std::string_view(text).substr(pos, nl - pos);
    if (!line.empty()) {
      try {
        out.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error&) {
        // only the final line may be damaged
        if (nl + 1 < text.size()) throw ParseError("corrupt record on line " + std::to_string(line_no));
        break;
      }
    }
    pos = nl + 1;
  }
  if (valid_bytes) *valid_bytes = pos;
  return out;
}

JsonlLog::JsonlLog(std::filesystem::path path, bool read_only) : path_(std::move(path)) {
  if (!read_only && path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::string text;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::size_t valid = 0;
  records_ = read_jsonl(text, &valid);
  recovered_bytes_ = text.size() - valid;
  if (read_only) return;
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) fail("open", path_);
  if (valid < text.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(valid)) != 0) fail("truncate", path_);
    ::fsync(fd_);
  }
}

JsonlLog::~JsonlLog() {
  if (fd_ >= 0) ::close(fd_);
}

JsonlLog::JsonlLog(JsonlLog&& other) noexcept { *this = std::move(other); }

JsonlLog& JsonlLog::operator=(JsonlLog&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    records_ = std::move(other.records_);
    recovered_bytes_ = other.recovered_bytes_;
    other.fd_ = -1;
  }
  return *this;
}

void JsonlLog::append(const nlohmann::json& record) {
  if (fd_ < 0) throw Error("log is not open");
  write_all(fd_, record.dump() + "\n", path_);
  if (::fsync(fd_) != 0) fail("fsync", path_);
  records_.push_back(record);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) fail("open", tmp);
  write_all(fd, text, tmp);
  ::fsync(fd);
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

}  // namespace therif::service
