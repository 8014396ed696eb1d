#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace blockpred {

/// Runs argv[0] (PATH lookup) with `input` on stdin and returns its stdout.
/// The child is killed when `timeout` elapses. Non-zero exit status, spawn
/// failure and timeouts raise BackendError.
std::string run_subprocess(const std::vector<std::string>& argv, std::string_view input,
                           std::chrono::milliseconds timeout);

/// Splits a command line on whitespace. No quoting rules.
std::vector<std::string> split_command(const std::string& command);

/// Scheme+authority and path prefix of an http:// URL, e.g.
/// "http://127.0.0.1:8080/api" -> {"http://127.0.0.1:8080", "/api"}.
struct HttpEndpoint {
  std::string origin;
  std::string base_path;
};
HttpEndpoint parse_http_url(const std::string& url);

/// POST/GET helpers over cpp-httplib; non-2xx and transport failures raise
/// BackendError.
std::string http_post(const HttpEndpoint& endpoint, const std::string& path, const std::string& body,
                      const std::string& content_type, std::chrono::milliseconds timeout);
std::string http_get(const HttpEndpoint& endpoint, const std::string& path,
                     std::chrono::milliseconds timeout);

}  // namespace blockpred
