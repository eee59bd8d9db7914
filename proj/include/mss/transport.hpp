#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

// Line transports shared by in-process queues and local TCP sockets. Both
// carry the same encoded protocol lines.
namespace mss {

/// Thread-safe FIFO of lines.
class LineQueue {
 public:
  void push(std::string line);
  std::optional<std::string> try_pop();
  std::optional<std::string> pop_wait(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool closed_ = false;
};

/// Node side of a connection to the station.
class NodeLink {
 public:
  virtual ~NodeLink() = default;
  virtual bool send_line(const std::string& line) = 0;
  virtual std::optional<std::string> poll_line() = 0;
  virtual bool connected() const = 0;
  virtual bool reconnect() = 0;
};

/// Station side: a single serialized inbox plus routed/broadcast output.
class StationLink {
 public:
  virtual ~StationLink() = default;
  virtual std::optional<std::string> next_line(std::chrono::milliseconds timeout) = 0;
  virtual std::optional<std::string> try_next_line() = 0;
  virtual void send_to(int drone_id, const std::string& line) = 0;
  virtual void broadcast(const std::string& line) = 0;
};

class QueueNodeLink : public NodeLink {
 public:
  QueueNodeLink(std::shared_ptr<LineQueue> to_station, std::shared_ptr<LineQueue> from_station);
  bool send_line(const std::string& line) override;
  std::optional<std::string> poll_line() override;
  bool connected() const override { return connected_; }
  bool reconnect() override;

  /// Simulates a dropped link; `allow_reconnect` controls whether reconnect() succeeds.
  void drop(bool allow_reconnect);

 private:
  std::shared_ptr<LineQueue> to_station_;
  std::shared_ptr<LineQueue> from_station_;
  std::atomic<bool> connected_{true};
  std::atomic<bool> allow_reconnect_{true};
};

class InProcessHub : public StationLink {
 public:
  InProcessHub();
  std::unique_ptr<QueueNodeLink> connect(int drone_id);

  std::optional<std::string> next_line(std::chrono::milliseconds timeout) override;
  std::optional<std::string> try_next_line() override;
  void send_to(int drone_id, const std::string& line) override;
  void broadcast(const std::string& line) override;

 private:
  std::shared_ptr<LineQueue> inbox_;
  std::mutex mu_;
  std::map<int, std::shared_ptr<LineQueue>> outboxes_;
};

/// Listens on 127.0.0.1. Connections are routed by the first drone_id seen on them.
class TcpStation : public StationLink {
 public:
  explicit TcpStation(std::uint16_t port = 0);
  ~TcpStation() override;
  TcpStation(const TcpStation&) = delete;
  TcpStation& operator=(const TcpStation&) = delete;

  std::uint16_t port() const { return port_; }

  std::optional<std::string> next_line(std::chrono::milliseconds timeout) override;
  std::optional<std::string> try_next_line() override;
  void send_to(int drone_id, const std::string& line) override;
  void broadcast(const std::string& line) override;

 private:
  struct Connection {
    int fd = -1;
    std::mutex write_mu;
  };
  void accept_loop();
  void read_loop(std::shared_ptr<Connection> conn);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  LineQueue inbox_;
  std::mutex mu_;
  std::vector<std::shared_ptr<Connection>> conns_;
  std::map<int, std::shared_ptr<Connection>> routes_;
  std::thread acceptor_;
  std::vector<std::thread> threads_;  // readers, appended by the acceptor only
};

class TcpNodeLink : public NodeLink {
 public:
  TcpNodeLink(std::string host, std::uint16_t port);
  ~TcpNodeLink() override;
  TcpNodeLink(const TcpNodeLink&) = delete;
  TcpNodeLink& operator=(const TcpNodeLink&) = delete;

  bool send_line(const std::string& line) override;
  std::optional<std::string> poll_line() override;
  bool connected() const override { return fd_ >= 0; }
  bool reconnect() override;

 private:
  void close_fd();
  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace mss
