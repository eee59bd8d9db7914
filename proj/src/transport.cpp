#include "mss/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "json.hpp"

namespace mss {

void LineQueue::push(std::string line) {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    lines_.push_back(std::move(line));
  }
  cv_.notify_one();
}

std::optional<std::string> LineQueue::try_pop() {
  std::lock_guard lock(mu_);
  if (lines_.empty()) return std::nullopt;
  std::string s = std::move(lines_.front());
  lines_.pop_front();
  return s;
}

std::optional<std::string> LineQueue::pop_wait(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return !lines_.empty() || closed_; });
  if (lines_.empty()) return std::nullopt;
  std::string s = std::move(lines_.front());
  lines_.pop_front();
  return s;
}

void LineQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool LineQueue::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::size_t LineQueue::size() const {
  std::lock_guard lock(mu_);
  return lines_.size();
}

QueueNodeLink::QueueNodeLink(std::shared_ptr<LineQueue> to_station,
                             std::shared_ptr<LineQueue> from_station)
    : to_station_(std::move(to_station)), from_station_(std::move(from_station)) {}

bool QueueNodeLink::send_line(const std::string& line) {
  if (!connected_) return false;
  to_station_->push(line);
  return true;
}

std::optional<std::string> QueueNodeLink::poll_line() {
  if (!connected_) return std::nullopt;
  return from_station_->try_pop();
}

bool QueueNodeLink::reconnect() {
  if (allow_reconnect_) connected_ = true;
  return connected_;
}

void QueueNodeLink::drop(bool allow_reconnect) {
  connected_ = false;
  allow_reconnect_ = allow_reconnect;
}

InProcessHub::InProcessHub() : inbox_(std::make_shared<LineQueue>()) {}

std::unique_ptr<QueueNodeLink> InProcessHub::connect(int drone_id) {
  auto out = std::make_shared<LineQueue>();
  {
    std::lock_guard lock(mu_);
    outboxes_[drone_id] = out;
  }
  return std::make_unique<QueueNodeLink>(inbox_, out);
}

std::optional<std::string> InProcessHub::next_line(std::chrono::milliseconds timeout) {
  return inbox_->pop_wait(timeout);
}

std::optional<std::string> InProcessHub::try_next_line() { return inbox_->try_pop(); }

void InProcessHub::send_to(int drone_id, const std::string& line) {
  std::lock_guard lock(mu_);
  auto it = outboxes_.find(drone_id);
  if (it != outboxes_.end()) it->second->push(line);
}

void InProcessHub::broadcast(const std::string& line) {
  std::lock_guard lock(mu_);
  for (auto& [id, q] : outboxes_) q->push(line);
}

namespace {

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<int> peek_drone_id(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_object() && j.contains("drone_id") && j["drone_id"].is_number_integer()) {
    return j["drone_id"].get<int>();
  }
  return std::nullopt;
}

}  // namespace

TcpStation::TcpStation(std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error(std::string("cannot listen on port: ") + std::strerror(errno));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpStation::~TcpStation() {
  stop_ = true;
  acceptor_.join();
  for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& t : threads_) t.join();
  for (auto& c : conns_) ::close(c->fd);
  ::close(listen_fd_);
  inbox_.close();
}

void TcpStation::accept_loop() {
  while (!stop_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Connection>();
    conn->fd = fd;
    std::lock_guard lock(mu_);
    conns_.push_back(conn);
    threads_.emplace_back([this, conn] { read_loop(conn); });
  }
}

void TcpStation::read_loop(std::shared_ptr<Connection> conn) {
  std::string buffer;
  char chunk[4096];
  bool routed = false;
  while (!stop_) {
    pollfd pfd{conn->fd, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    const ssize_t n = ::recv(conn->fd, chunk, sizeof(chunk), 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!routed) {
        if (auto id = peek_drone_id(line)) {
          std::lock_guard lock(mu_);
          routes_[*id] = conn;
          routed = true;
        }
      }
      inbox_.push(std::move(line));
    }
  }
}

std::optional<std::string> TcpStation::next_line(std::chrono::milliseconds timeout) {
  return inbox_.pop_wait(timeout);
}

std::optional<std::string> TcpStation::try_next_line() { return inbox_.try_pop(); }

void TcpStation::send_to(int drone_id, const std::string& line) {
  std::shared_ptr<Connection> conn;
  {
    std::lock_guard lock(mu_);
    auto it = routes_.find(drone_id);
    if (it == routes_.end()) return;
    conn = it->second;
  }
  std::lock_guard wl(conn->write_mu);
  if (!write_all(conn->fd, line + "\n")) spdlog::debug("send to drone {} failed", drone_id);
}

void TcpStation::broadcast(const std::string& line) {
  std::vector<std::shared_ptr<Connection>> targets;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, c] : routes_) targets.push_back(c);
  }
  for (auto& c : targets) {
    std::lock_guard wl(c->write_mu);
    write_all(c->fd, line + "\n");
  }
}

TcpNodeLink::TcpNodeLink(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {
  reconnect();
}

TcpNodeLink::~TcpNodeLink() { close_fd(); }

void TcpNodeLink::close_fd() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

bool TcpNodeLink::reconnect() {
  close_fd();
  buffer_.clear();
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1 ||
      ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    return false;
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
  return true;
}

bool TcpNodeLink::send_line(const std::string& line) {
  if (fd_ < 0) return false;
  if (!write_all(fd_, line + "\n")) {
    close_fd();
    return false;
  }
  return true;
}

std::optional<std::string> TcpNodeLink::poll_line() {
  if (fd_ < 0) return std::nullopt;
  auto pos = buffer_.find('\n');
  if (pos == std::string::npos) {
    char chunk[8192];
    while (true) {
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), MSG_DONTWAIT);
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
        continue;
      }
      if (n == 0) {
        close_fd();
        return std::nullopt;
      }
      break;  // EAGAIN or error
    }
    pos = buffer_.find('\n');
    if (pos == std::string::npos) return std::nullopt;
  }
  std::string line = buffer_.substr(0, pos);
  buffer_.erase(0, pos + 1);
  return line;
}

}  // namespace mss
