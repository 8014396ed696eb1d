#include "blockpred/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "blockpred/errors.hpp"
#include "httplib.h"

namespace blockpred {
namespace {

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::string run_subprocess(const std::vector<std::string>& argv, std::string_view input,
                           std::chrono::milliseconds timeout) {
  if (argv.empty()) throw BackendError("empty backend command");
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw BackendError("pipe: " + std::string(std::strerror(errno)));
  Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
  if (::pipe(out_pipe) != 0) throw BackendError("pipe: " + std::string(std::strerror(errno)));
  Fd out_r(out_pipe[0]), out_w(out_pipe[1]);

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(in_r.fd, STDIN_FILENO);
    ::dup2(out_w.fd, STDOUT_FILENO);
    ::close(in_r.fd);
    ::close(in_w.fd);
    ::close(out_r.fd);
    ::close(out_w.fd);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  in_r.reset();
  out_w.reset();
  ::fcntl(in_w.fd, F_SETFL, O_NONBLOCK);
  ::signal(SIGPIPE, SIG_IGN);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string output;
  std::size_t written = 0;
  if (input.empty()) in_w.reset();
  bool timed_out = false;
  char buf[65536];
  while (out_r.fd >= 0) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {out_r.fd, POLLIN, 0};
    if (in_w.fd >= 0) fds[nfds++] = {in_w.fd, POLLOUT, 0};
    const int rc = ::poll(fds, nfds, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const auto n = ::write(in_w.fd, input.data() + written, input.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (n < 0 && errno != EAGAIN) written = input.size();
      if (written >= input.size()) in_w.reset();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const auto n = ::read(out_r.fd, buf, sizeof(buf));
      if (n > 0) {
        output.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        out_r.reset();
      }
    }
  }
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    throw BackendError("backend '" + argv[0] + "' timed out after " +
                       std::to_string(timeout.count()) + " ms");
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw BackendError("backend '" + argv[0] + "' failed with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  return output;
}

HttpEndpoint parse_http_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.substr(0, scheme_end) != "http") {
    throw ConfigError("backend URL must start with http://, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpEndpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  return ep;
}

namespace {

httplib::Client make_client(const HttpEndpoint& ep, std::chrono::milliseconds timeout) {
  httplib::Client cli(ep.origin);
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  return cli;
}

std::string check_response(const httplib::Result& res, const std::string& what) {
  if (!res) throw BackendError(what + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(what + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace

std::string http_post(const HttpEndpoint& endpoint, const std::string& path, const std::string& body,
                      const std::string& content_type, std::chrono::milliseconds timeout) {
  auto cli = make_client(endpoint, timeout);
  const auto full = endpoint.base_path + path;
  return check_response(cli.Post(full, body, content_type), "POST " + endpoint.origin + full);
}

std::string http_get(const HttpEndpoint& endpoint, const std::string& path,
                     std::chrono::milliseconds timeout) {
  auto cli = make_client(endpoint, timeout);
  const auto full = endpoint.base_path + path;
  return check_response(cli.Get(full), "GET " + endpoint.origin + full);
}

}  // namespace blockpred
