// Copyright 2026 The lanepilot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lanepilot/llm_planner.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

namespace lanepilot::planner
{

namespace
{

std::pair<time_t, time_t> split_seconds(double seconds)
{
  const double whole = std::floor(seconds);
  return {static_cast<time_t>(whole), static_cast<time_t>((seconds - whole) * 1e6)};
}

}  // namespace

RawResponse request_prediction(const PlannerEndpoint & endpoint, const nlohmann::json & body)
{
  validate(endpoint);
  httplib::Client client(endpoint.base_url);
  if (!client.is_valid()) {
    throw PlannerError(PlannerErrorKind::Transport, "invalid base URL '" + endpoint.base_url + "'");
  }
  const auto [sec, usec] = split_seconds(endpoint.timeout_s);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char * token = std::getenv(endpoint.api_key_env.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const std::string payload = body.dump();

  int retries = 0;
  int last_status = 0;
  std::string last_error;
  PlannerErrorKind last_kind = PlannerErrorKind::Transport;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    if (attempt > 0) {
      ++retries;
      const double wait = endpoint.backoff_initial_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    const auto sent = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(endpoint.path, headers, payload, "application/json");
    if (!res) {
      const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - sent).count();
      const httplib::Error err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && waited >= 0.9 * endpoint.timeout_s);
      last_kind = timed_out ? PlannerErrorKind::Timeout : PlannerErrorKind::Transport;
      last_error = httplib::to_string(err);
      last_status = 0;
      continue;
    }
    last_status = res->status;
    if (res->status >= 200 && res->status < 300) {
      RawResponse out;
      out.body = res->body;
      out.status = res->status;
      out.retries = retries;
      out.latency_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return out;
    }
    if (res->status < 500) {
      throw PlannerError(PlannerErrorKind::HttpStatus,
                         "status " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                         res->status, retries);
    }
    last_kind = PlannerErrorKind::HttpStatus;
    last_error = "status " + std::to_string(res->status);
  }
  if (endpoint.retries == 0) {
    throw PlannerError(last_kind, last_error, last_status, retries);
  }
  throw PlannerError(PlannerErrorKind::RetriesExhausted,
                     std::to_string(retries) + " retries, last " +
                       std::string(to_string(last_kind)) + " (" + last_error + ")",
                     last_status, retries);
}

RawResponse request_prediction(const PlannerEndpoint & endpoint, const PromptBundle & bundle)
{
  return request_prediction(endpoint, build_request_body(endpoint, bundle));
}

}  // namespace lanepilot::planner
