#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "json.hpp"

namespace simlink::broker {

// Append-only JSON Lines file, flushed after every event.
class JournalWriter {
 public:
  explicit JournalWriter(const std::filesystem::path& path);

  void append(const nlohmann::json& event);

 private:
  std::ofstream out_;
};

// Reads every complete line. An unterminated last line (a write cut short
// by a crash) is ignored; a malformed complete line throws
// std::runtime_error. A missing file reads as empty.
std::vector<nlohmann::json> read_journal(const std::filesystem::path& path);

}  // namespace simlink::broker
