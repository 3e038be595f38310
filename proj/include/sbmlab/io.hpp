#pragma once

// Artifact plumbing shared by the command-line front end: full-precision
// number formatting, atomic file writes (temp + rename), a streaming CSV
// writer, and the plain key=value configuration format.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace sbmlab::io {

// Shortest exact decimal is not used on purpose: the output contract is 17
// significant digits so every reader round-trips to the identical double.
std::string format_full(double v);

// Writes content to path atomically: temp file in the same directory, then
// rename.  Creates missing parent directories.  Failures raise ResourceError.
void write_file_atomic(const std::string& path, const std::string& content);

// Incremental variant for large artifacts: append chunks, then finalize()
// performs the rename.  Abandoning the object without finalize() leaves no
// visible file (the temp is removed in the destructor).
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(const std::string& path);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  void append(const std::string& chunk);
  void finalize();

 private:
  std::string path_;
  std::string tmp_path_;
  std::ofstream out_;
  bool finalized_ = false;
};

// CSV rows over an AtomicFileWriter: header first, '.' decimal point, no
// quoting (the schema never contains commas or newlines in cells).
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  void finalize();

 private:
  AtomicFileWriter file_;
  std::size_t n_cols_;
};

// Plain key=value configuration text: one pair per line, '#' starts a
// comment, blank lines ignored, whitespace around key and value trimmed.
// Duplicate keys and lines without '=' raise ConfigError.
std::map<std::string, std::string> read_key_value_file(const std::string& path);

// ISO-8601 UTC wall-clock timestamp (the only nondeterministic artifact
// field; kept out of everything except the manifest).
std::string timestamp_utc_now();

}  // namespace sbmlab::io
