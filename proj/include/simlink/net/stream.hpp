#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "simlink/apdu/bytes.hpp"

namespace simlink::net {

class TransportError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reliable, ordered, bidirectional byte stream.
class ByteStream {
 public:
  virtual ~ByteStream() = default;

  // Throws TransportError if the peer is gone.
  virtual void write_all(ByteView bytes) = 0;

  // Returns the number of octets read, 0 on orderly end of stream, or
  // nullopt when nothing arrived within `timeout`.
  virtual std::optional<std::size_t> read_some(std::span<std::uint8_t> buffer,
                                               std::chrono::milliseconds timeout) = 0;

  // Ends the write side; the peer reads end of stream.
  virtual void shutdown() = 0;
};

using StreamPair = std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>>;

// Two connected in-process endpoints.
StreamPair make_loopback_pair();

// Reads one '\n'-terminated line (without the terminator). Returns nullopt
// on end of stream before any octet of a new line; throws TransportError on
// timeout or when a line exceeds `max_line`.
class LineReader {
 public:
  explicit LineReader(ByteStream& stream, std::size_t max_line = 1 << 20)
      : stream_(stream), max_line_(max_line) {}

  std::optional<std::string> next(std::chrono::milliseconds timeout);

  // Like next() but a timeout also returns nullopt; eof() tells them apart.
  std::optional<std::string> poll(std::chrono::milliseconds timeout);
  bool eof() const noexcept { return eof_; }

 private:
  ByteStream& stream_;
  std::size_t max_line_;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace simlink::net
