#include "simlink/broker/journal.hpp"

#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace simlink::broker {

JournalWriter::JournalWriter(const std::filesystem::path& path)
    : out_(path, std::ios::app | std::ios::binary) {
  if (!out_) throw std::runtime_error(fmt::format("cannot open state log {}", path.string()));
}

void JournalWriter::append(const nlohmann::json& event) {
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("state log write failed");
}

std::vector<nlohmann::json> read_journal(const std::filesystem::path& path) {
  std::vector<nlohmann::json> events;
  std::ifstream in(path, std::ios::binary);
  if (!in) return events;
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto text = buffer.str();

  std::size_t start = 0;
  std::size_t line_no = 1;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) break;
    const auto line = std::string_view(text).substr(start, end - start);
    if (!line.empty()) {
      auto parsed = nlohmann::json::parse(line, nullptr, false);
      if (parsed.is_discarded()) {
        throw std::runtime_error(
            fmt::format("{}:{}: malformed state log line", path.string(), line_no));
      }
      events.push_back(std::move(parsed));
    }
    start = end + 1;
    ++line_no;
  }
  return events;
}

}  // namespace simlink::broker
