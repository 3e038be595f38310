#include "sbmlab/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>

#include "sbmlab/errors.hpp"

namespace fs = std::filesystem;

namespace sbmlab::io {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) {
      throw ResourceError("io: cannot create directory " + parent.string() +
                          ": " + ec.message());
    }
  }
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  AtomicFileWriter w(path);
  w.append(content);
  w.finalize();
}

AtomicFileWriter::AtomicFileWriter(const std::string& path)
    : path_(path), tmp_path_(path + ".tmp") {
  ensure_parent(path_);
  out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
  if (!out_) {
    throw ResourceError("io: cannot open " + tmp_path_ + " for writing");
  }
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!finalized_) {
    out_.close();
    std::error_code ec;
    fs::remove(tmp_path_, ec);  // best effort; nothing to report from a dtor
  }
}

void AtomicFileWriter::append(const std::string& chunk) {
  out_.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  if (!out_) {
    throw ResourceError("io: write failed for " + tmp_path_);
  }
}

void AtomicFileWriter::finalize() {
  out_.flush();
  out_.close();
  if (out_.fail()) {
    throw ResourceError("io: flush failed for " + tmp_path_);
  }
  std::error_code ec;
  fs::rename(tmp_path_, path_, ec);
  if (ec) {
    throw ResourceError("io: cannot rename " + tmp_path_ + " to " + path_ +
                        ": " + ec.message());
  }
  finalized_ = true;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : file_(path), n_cols_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) {
    throw ResourceError("io: CSV row width mismatch");
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  file_.append(line);
}

void CsvWriter::finalize() { file_.finalize(); }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> read_key_value_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot read " + path);
  }
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": empty key");
    }
    if (!out.emplace(key, val).second) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::string timestamp_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace sbmlab::io
