#pragma once

#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqasynth/triplet.hpp"

namespace vqasynth::records {

// Stable public id of a record: "<image id>:<slot>".
std::string triplet_id(const Record& r);

// One JSON object, no trailing newline. Keys always appear in the same order;
// meta.duration_ms is not written and meta.image_id mirrors the record's.
std::string to_json_line(const Record& r);

// Throws DatasetFormatError carrying `line_number`.
Record from_json_line(std::string_view line, std::size_t line_number = 1);

// JSONL, one record per line, written atomically.
void write_dataset(const std::filesystem::path& path, std::span<const Record> records);
std::vector<Record> read_dataset(const std::filesystem::path& path);

// Appends lines to an open journal; used for resumable runs.
class JournalWriter {
 public:
  explicit JournalWriter(const std::filesystem::path& path);
  ~JournalWriter();
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;

  void append(const Record& r);

 private:
  std::FILE* file_ = nullptr;
};

// Reads a journal, dropping a torn final line.
std::vector<Record> read_journal(const std::filesystem::path& path);

}  // namespace vqasynth::records
