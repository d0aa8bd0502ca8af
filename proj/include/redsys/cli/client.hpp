#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

#include "redsys/cli/script.hpp"
#include "redsys/core/document.hpp"
#include "redsys/sdk/link.hpp"

namespace redsys::cli {

struct ClientOptions {
  std::string client_id = "cli";
  std::string doc_id;
  // Receives "> json" for every sent record and "< json" for every received
  // one, in the order the command loop handled them.
  std::function<void(const std::string&)> transcript;
  std::chrono::milliseconds reply_timeout{5000};
  std::uint32_t event_timeout_ms = 1000;
};

struct ClientResult {
  enum Status { kOk = 0, kExpectationFailed = 1, kError = 2 };

  Status status = kOk;
  std::string message;
  Document document;  // the client's view when the run ended
};

// Runs `script` as an editor over `link`. Joins before the first command,
// creating the document when the script starts with `open`. Every edit is
// acknowledged before the next command runs.
ClientResult run_client(const Script& script, sdk::MessageLink& link, const ClientOptions& options);

ClientResult run_client(const Script& script, std::string_view address, const ClientOptions& options);

// A broker transcript line: "ed1 -> {...}" for a record from client ed1,
// "ed1 <- {...}" for one sent to it.
std::string transcript_line(const std::string& client_id, bool inbound, const std::string& line);

}  // namespace redsys::cli
