// SPDX-License-Identifier: Apache-2.0
#include "trustrl/tool_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include <json.hpp>

#include "trustrl/tools.hpp"

namespace trustrl {

namespace {

std::string read_line(int fd) {
  std::string line;
  char c;
  while (true) {
    ssize_t n = ::recv(fd, &c, 1, 0);
    if (n <= 0) break;
    if (c == '\n') break;
    line.push_back(c);
    if (line.size() > 1 << 20) break;  // runaway request
  }
  return line;
}

void write_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return;
    off += static_cast<size_t>(n);
  }
}

// "tcp:host:port" -> (host, port)
std::pair<std::string, uint16_t> split_endpoint(const std::string& endpoint) {
  if (endpoint.rfind("tcp:", 0) != 0) throw error("not a tcp endpoint: " + endpoint);
  std::string rest = endpoint.substr(4);
  size_t colon = rest.rfind(':');
  if (colon == std::string::npos) throw error("malformed tcp endpoint: " + endpoint);
  int port = std::stoi(rest.substr(colon + 1));
  if (port <= 0 || port > 65535) throw error("malformed tcp endpoint: " + endpoint);
  return {rest.substr(0, colon), static_cast<uint16_t>(port)};
}

}  // namespace

ToolServer::ToolServer(std::vector<ExpertiseProfile> profiles, std::string host, uint16_t port)
    : profiles_(std::move(profiles)), host_(std::move(host)), port_(port) {}

ToolServer::~ToolServer() { stop(); }

std::string ToolServer::endpoint() const {
  return "tcp:" + host_ + ":" + std::to_string(port_);
}

void ToolServer::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw error("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw error("bad host address: " + host_);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw error("cannot bind " + host_ + ":" + std::to_string(port_));
  }
  if (port_ == 0) {
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }
  running_.store(true);
  thread_ = std::thread(&ToolServer::serve_loop, this);
}

void ToolServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (thread_.joinable()) thread_.join();
}

void ToolServer::serve_loop() {
  while (running_.load()) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_.load()) break;
      continue;
    }
    std::string request = read_line(fd);
    std::string response = handle_request(request);
    write_all(fd, response + "\n");
    ::close(fd);
    requests_.fetch_add(1);
  }
}

std::string ToolServer::handle_request(const std::string& line) {
  nlohmann::json reply;
  auto fail = [&reply](const std::string& msg) {
    reply["content"] = "ERROR: " + msg;
    return reply.dump();
  };

  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("request is not a JSON object");
  if (!j.contains("name") || !j["name"].is_string()) return fail("missing \"name\"");
  const std::string name = j["name"].get<std::string>();

  const ExpertiseProfile* profile = nullptr;
  for (const auto& p : profiles_)
    if (p.tool_name == name) profile = &p;
  if (profile == nullptr) return fail("unknown tool: " + name);

  std::map<std::string, std::string> args;
  if (j.contains("arguments")) {
    if (!j["arguments"].is_object()) return fail("\"arguments\" must be an object");
    for (const auto& [k, v] : j["arguments"].items()) {
      if (!v.is_string()) return fail("argument \"" + k + "\" must be a string");
      args[k] = v.get<std::string>();
    }
  }
  for (const char* field : {"__seed", "__query_id", "__query_type", "__options", "__ground_truth"})
    if (!args.count(field)) return fail(std::string("missing hidden argument \"") + field + "\"");

  QuerySample query;
  query.id = args["__query_id"];
  query.query_type = args["__query_type"];
  query.ground_truth = args["__ground_truth"];
  if (args.count("question")) query.question = args["question"];
  auto opts = nlohmann::json::parse(args["__options"], nullptr, false);
  if (opts.is_discarded() || !opts.is_array()) return fail("bad \"__options\"");
  for (const auto& o : opts) {
    if (!o.is_string()) return fail("bad \"__options\"");
    query.options.push_back(o.get<std::string>());
  }
  if (query.options.size() < 2) return fail("bad \"__options\"");

  uint64_t seed = 0;
  try {
    seed = std::stoull(args["__seed"]);
  } catch (const std::exception&) {
    return fail("bad \"__seed\"");
  }

  try {
    Rng rng(seed);
    ToolResponse r = simulate_tool(*profile, query, rng);
    reply["content"] = r.content;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return reply.dump();
}

std::string remote_request_line(const std::string& endpoint, const std::string& line,
                                int timeout_ms) {
  auto [host, port] = split_endpoint(endpoint);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw error("socket() failed");

  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw error("bad host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw error("cannot connect to " + endpoint);
  }
  write_all(fd, line + "\n");
  std::string response = read_line(fd);
  ::close(fd);
  if (response.empty()) throw error("empty response from " + endpoint);
  return response;
}

ToolResponse remote_tool_call(const std::string& endpoint, const ToolCall& call,
                              const DispatchContext& ctx) {
  nlohmann::json j;
  j["name"] = call.tool_name;
  nlohmann::json args = nlohmann::json::object();
  for (const auto& [k, v] : call.arguments) args[k] = v;
  args["__seed"] = std::to_string(ctx.call_seed);
  args["__query_id"] = ctx.query->id;
  args["__query_type"] = ctx.query->query_type;
  args["__options"] = nlohmann::json(ctx.query->options).dump();
  args["__ground_truth"] = ctx.query->ground_truth;
  if (!ctx.image_path.empty()) args["__image_path"] = ctx.image_path;
  j["arguments"] = std::move(args);

  std::string response = remote_request_line(endpoint, j.dump());
  auto r = nlohmann::json::parse(response, nullptr, false);
  if (r.is_discarded() || !r.is_object() || !r.contains("content") || !r["content"].is_string())
    throw error("malformed response from " + endpoint);
  return {call.tool_name, r["content"].get<std::string>()};
}

}  // namespace trustrl
