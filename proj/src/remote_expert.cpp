#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "advgen/expert.hpp"
#include "advgen/json_canonical.hpp"

namespace advgen {

namespace {

struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) {
      ::close(fd);
    }
  }
};

[[noreturn]] void transport_error(const std::string& what) {
  throw std::runtime_error("remote expert: " + what);
}

int connect_with_timeout(const std::string& address, double timeout_s) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    transport_error("address must be host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    transport_error("cannot resolve " + address);
  }
  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    transport_error("socket() failed");
  }
  timeval tv;
  tv.tv_sec = static_cast<long>(timeout_s);
  tv.tv_usec = static_cast<long>((timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    ::close(fd);
    transport_error("connect to " + address + " failed: " + std::strerror(errno));
  }
  return fd;
}

void send_all(int fd, const std::string& data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, 0);
    if (n <= 0) {
      transport_error("send failed");
    }
    sent += static_cast<size_t>(n);
  }
}

std::string read_line(int fd) {
  std::string line;
  char c = 0;
  while (true) {
    const ssize_t n = ::recv(fd, &c, 1, 0);
    if (n <= 0) {
      transport_error("reply timed out or connection closed");
    }
    if (c == '\n') {
      return line;
    }
    line.push_back(c);
    if (line.size() > 1u << 20u) {
      transport_error("reply exceeds 1 MiB");
    }
  }
}

}  // namespace

Guidance RemoteExpert::infer(const Scene& scene, const std::vector<ShortlistCandidate>& shortlist,
                             const KnowledgeBase& kb) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const ShortlistCandidate& c : shortlist) {
    candidates.push_back({{"id", c.vehicle_id},
                          {"risk_total", c.risk.total},
                          {"relevance", c.risk.relevance},
                          {"uncertainty", c.risk.uncertainty},
                          {"collision_prob", c.risk.collision_prob},
                          {"consequence", c.risk.consequence},
                          {"dist_risk", c.dist_risk}});
  }
  const nlohmann::json request = {{"scene_digest", scene_digest(scene)},
                                  {"shortlist", std::move(candidates)},
                                  {"kb_version", kb.version}};

  Fd sock{connect_with_timeout(address_, timeout_)};
  send_all(sock.fd, request.dump() + "\n");
  const std::string reply = read_line(sock.fd);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::parse_error& e) {
    transport_error(std::string("malformed reply: ") + e.what());
  }
  std::string error;
  const auto g = guidance_from_json(parsed, &error);
  if (!g) {
    transport_error("reply rejected: " + error);
  }
  return *g;
}

}  // namespace advgen
