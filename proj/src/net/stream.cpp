#include "simlink/net/stream.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>

namespace simlink::net {

namespace {

// One direction of the in-process pipe.
struct Channel {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class LoopbackStream final : public ByteStream {
 public:
  LoopbackStream(std::shared_ptr<Channel> in, std::shared_ptr<Channel> out)
      : in_(std::move(in)), out_(std::move(out)) {}

  ~LoopbackStream() override {
    shutdown();
    // Wake a reader blocked on our inbound side as well.
    std::lock_guard lock(in_->mutex);
    in_->closed = true;
    in_->ready.notify_all();
  }

  void write_all(ByteView bytes) override {
    std::lock_guard lock(out_->mutex);
    if (out_->closed) throw TransportError("loopback peer closed");
    out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
    out_->ready.notify_all();
  }

  std::optional<std::size_t> read_some(std::span<std::uint8_t> buffer,
                                       std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_->mutex);
    if (!in_->ready.wait_for(lock, timeout,
                             [&] { return !in_->bytes.empty() || in_->closed; })) {
      return std::nullopt;
    }
    const auto n = std::min(buffer.size(), in_->bytes.size());
    std::copy_n(in_->bytes.begin(), n, buffer.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void shutdown() override {
    std::lock_guard lock(out_->mutex);
    out_->closed = true;
    out_->ready.notify_all();
  }

 private:
  std::shared_ptr<Channel> in_;
  std::shared_ptr<Channel> out_;
};

}  // namespace

StreamPair make_loopback_pair() {
  auto a_to_b = std::make_shared<Channel>();
  auto b_to_a = std::make_shared<Channel>();
  return {std::make_unique<LoopbackStream>(b_to_a, a_to_b),
          std::make_unique<LoopbackStream>(a_to_b, b_to_a)};
}

std::optional<std::string> LineReader::next(std::chrono::milliseconds timeout) {
  auto line = poll(timeout);
  if (!line && !eof_) throw TransportError("timed out waiting for a line");
  return line;
}

std::optional<std::string> LineReader::poll(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (eof_) return std::nullopt;
    if (buffer_.size() > max_line_) throw TransportError("line too long");
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;
    std::uint8_t chunk[4096];
    auto n = stream_.read_some(
        chunk, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) +
                   std::chrono::milliseconds(1));
    if (!n) continue;
    if (*n == 0) {
      eof_ = true;
      if (buffer_.empty()) return std::nullopt;
      throw TransportError("stream ended mid-line");
    }
    buffer_.append(reinterpret_cast<const char*>(chunk), *n);
  }
}

}  // namespace simlink::net
