#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "simlink/apdu/bytes.hpp"

namespace simlink::vsim {

enum class ProactiveKind : std::uint8_t {
  SendShortMessage = 0x13,
  ProvideLocalInfo = 0x26,
};

std::string_view to_string(ProactiveKind kind) noexcept;
std::optional<ProactiveKind> proactive_kind_from_string(std::string_view name);

// Name for a command-details type octet: SEND_SHORT_MESSAGE, ...
std::string proactive_type_name(std::uint8_t type);

class PayloadTooLong : public std::length_error {
 public:
  explicit PayloadTooLong(std::size_t size);
};

struct ProactiveCommand {
  std::uint8_t number = 0;
  ProactiveKind kind = ProactiveKind::SendShortMessage;
  Bytes encoded;  // D0 len 81 03 .. 82 02 .. [payload TLV]

  bool operator==(const ProactiveCommand&) const = default;
};

// Command details as carried by a proactive command or a terminal response.
struct CommandDetails {
  std::uint8_t number = 0;
  std::uint8_t type = 0;
  std::uint8_t qualifier = 0;

  bool operator==(const CommandDetails&) const = default;
};

inline constexpr std::size_t kMaxProactivePayload = 240;

// Builds the BER-TLV of a proactive command. A SEND SHORT MESSAGE payload
// becomes an SMS TPDU TLV (tag 8B); other payloads are appended verbatim.
Bytes build_proactive_command(std::uint8_t number, ProactiveKind kind,
                              ByteView payload);

// Extracts command details from a D0 template.
std::optional<CommandDetails> parse_proactive_command(ByteView raw);

// Extracts command details from TERMINAL RESPONSE data (simple TLVs).
std::optional<CommandDetails> parse_terminal_response(ByteView raw);

// Builds a minimal successful TERMINAL RESPONSE for `details`.
Bytes build_terminal_response(const CommandDetails& details);

// Pending proactive commands. Commands added with enqueue() are pending at
// once; scheduled ones are released after the trigger-th STATUS poll.
class ProactiveQueue {
 public:
  static constexpr unsigned kDefaultTrigger = 3;

  explicit ProactiveQueue(unsigned trigger_after_status = kDefaultTrigger)
      : trigger_(trigger_after_status) {}

  // Throws PayloadTooLong for payloads over 240 octets.
  void enqueue(ProactiveKind kind, ByteView payload);
  void schedule(ProactiveKind kind, ByteView payload);

  void on_status_poll();

  // Drops pending, scheduled and unacknowledged commands and zeroes the
  // STATUS counter. Command numbering continues.
  void clear();

  bool empty() const noexcept { return pending_.empty(); }
  std::size_t size() const noexcept { return pending_.size(); }
  const ProactiveCommand* head() const noexcept {
    return pending_.empty() ? nullptr : &pending_.front();
  }
  const std::optional<ProactiveCommand>& awaiting_ack() const noexcept {
    return awaiting_ack_;
  }
  unsigned status_polls() const noexcept { return status_polls_; }
  unsigned trigger() const noexcept { return trigger_; }

  // Moves the head out of the queue; it stays unacknowledged until the
  // matching terminal response.
  std::optional<ProactiveCommand> fetch();

  bool acknowledge(std::uint8_t number);

 private:
  struct Scheduled {
    ProactiveKind kind;
    Bytes payload;
  };

  std::uint8_t next_number();

  unsigned trigger_;
  unsigned status_polls_ = 0;
  std::uint8_t last_number_ = 0;
  std::deque<ProactiveCommand> pending_;
  std::deque<Scheduled> scheduled_;
  std::optional<ProactiveCommand> awaiting_ack_;
};

// Value-style wrapper around ProactiveQueue::enqueue.
ProactiveQueue enqueue_proactive(ProactiveQueue queue, ProactiveKind kind,
                                 ByteView payload);

}  // namespace simlink::vsim
