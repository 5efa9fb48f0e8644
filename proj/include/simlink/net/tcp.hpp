#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "simlink/net/stream.hpp"

namespace simlink::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  // "host:port"; throws std::invalid_argument.
  static Endpoint parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const Endpoint&) const = default;
};

class TcpStream final : public ByteStream {
 public:
  explicit TcpStream(int fd);
  ~TcpStream() override;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  static std::unique_ptr<TcpStream> connect(const Endpoint& endpoint,
                                            std::chrono::milliseconds timeout);

  void write_all(ByteView bytes) override;
  std::optional<std::size_t> read_some(std::span<std::uint8_t> buffer,
                                       std::chrono::milliseconds timeout) override;
  void shutdown() override;

 private:
  int fd_;
};

class TcpListener {
 public:
  // Port 0 picks an ephemeral port; see local_endpoint().
  explicit TcpListener(const Endpoint& bind_to);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // nullptr on timeout or after close().
  std::unique_ptr<TcpStream> accept(std::chrono::milliseconds timeout);

  Endpoint local_endpoint() const { return local_; }

  void close();

 private:
  int fd_;
  Endpoint local_;
};

}  // namespace simlink::net
