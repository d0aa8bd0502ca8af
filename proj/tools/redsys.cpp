#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "redsys/broker/broker.hpp"
#include "redsys/cli/client.hpp"
#include "redsys/cli/dump.hpp"
#include "redsys/cli/script.hpp"
#include "redsys/error.hpp"
#include "redsys/net/server.hpp"
#include "redsys/sdk/service.hpp"
#include "redsys/services/services.hpp"

namespace {

using namespace redsys;

sigset_t stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGUSR1);
  return set;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kValidation, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BrokerArgs {
  std::string listen;
  std::string ws;
  std::string log_dir;
  std::size_t history_limit = 0;
  unsigned event_timeout = 1000;
  std::string transcript;
};

int run_broker(const BrokerArgs& args) {
  std::ofstream transcript;
  std::mutex transcript_mu;
  broker::BrokerOptions options;
  options.event_timeout = std::chrono::milliseconds(args.event_timeout);
  if (args.history_limit) options.history_limit = args.history_limit;
  if (!args.log_dir.empty()) options.log_dir = args.log_dir;
  if (!args.transcript.empty()) {
    transcript.open(args.transcript);
    if (!transcript) throw Error(Errc::kValidation, "cannot write " + args.transcript);
    options.transcript = [&](const std::string& client, bool inbound, const std::string& line) {
      std::lock_guard lock(transcript_mu);
      transcript << cli::transcript_line(client, inbound, line) << '\n' << std::flush;
    };
  }
  broker::Broker broker(std::move(options));
  net::Server server(broker);
  std::cout << "listening tcp " << server.listen(args.listen, false) << std::endl;
  if (!args.ws.empty()) std::cout << "listening ws " << server.listen(args.ws, true) << std::endl;

  const sigset_t set = stop_signals();
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return 0;
}

struct ServiceArgs {
  std::string kind;
  std::string connect;
  std::string doc;
  std::string id;
  std::string dict;
  unsigned latency = 0;
  bool keep_stale = false;
};

std::unique_ptr<sdk::ServiceHandler> make_service(const ServiceArgs& args) {
  if (args.kind == "highlighter") return std::make_unique<services::Highlighter>();
  if (args.kind == "hider") return std::make_unique<services::Hider>();
  if (args.kind == "transclusion") return std::make_unique<services::Transclusion>();
  if (args.kind == "autocomplete") return std::make_unique<services::Autocomplete>();
  services::Spotter::Options options;
  if (!args.dict.empty()) options.dictionary = services::Dictionary::load(args.dict);
  options.latency = std::chrono::milliseconds(args.latency);
  options.keep_stale = args.keep_stale;
  return std::make_unique<services::Spotter>(std::move(options));
}

int run_service(const ServiceArgs& args) {
  auto handler = make_service(args);
  sdk::ServiceRunner runner(args.connect, args.doc, args.id.empty() ? args.kind : args.id, *handler);
  std::thread watcher([&] {
    const sigset_t set = stop_signals();
    int sig = 0;
    sigwait(&set, &sig);
    runner.stop();
  });
  runner.wait();
  kill(getpid(), SIGUSR1);
  watcher.join();
  if (const auto& failure = runner.session().failure()) {
    std::cerr << "redsys: " << *failure << '\n';
    return 2;
  }
  return 0;
}

struct ClientArgs {
  std::string connect;
  std::string doc;
  std::string id = "cli";
  std::string script;
  std::string transcript;
};

int run_client(const ClientArgs& args) {
  const cli::Script script = cli::parse_script(read_text(args.script));
  std::ofstream transcript;
  cli::ClientOptions options;
  options.client_id = args.id;
  options.doc_id = args.doc;
  if (!args.transcript.empty()) {
    transcript.open(args.transcript);
    if (!transcript) throw Error(Errc::kValidation, "cannot write " + args.transcript);
    options.transcript = [&](const std::string& line) { transcript << line << '\n'; };
  }
  const auto result = cli::run_client(script, args.connect, options);
  if (result.status != cli::ClientResult::kOk) std::cerr << "redsys: " << result.message << '\n';
  return result.status;
}

}  // namespace

int main(int argc, char** argv) {
  const sigset_t set = stop_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  CLI::App app{"Document synchronization broker, services and scripted clients"};
  app.require_subcommand(1);

  BrokerArgs broker_args;
  auto* broker = app.add_subcommand("broker", "Run the broker");
  broker->add_option("--listen", broker_args.listen, "TCP address, host:port")->required();
  broker->add_option("--ws", broker_args.ws, "WebSocket address, host:port");
  broker->add_option("--log", broker_args.log_dir, "Directory for revision logs");
  broker->add_option("--history-limit", broker_args.history_limit, "Revisions kept for rebasing");
  broker->add_option("--event-timeout", broker_args.event_timeout, "Sync event timeout in ms");
  broker->add_option("--transcript", broker_args.transcript, "Write every wire record to this file");

  ServiceArgs service_args;
  auto* service = app.add_subcommand("service", "Run one service");
  service->add_option("kind", service_args.kind, "Service")
      ->required()
      ->check(CLI::IsMember({"highlighter", "spotter", "hider", "transclusion", "autocomplete"}));
  service->add_option("--connect", service_args.connect, "Broker address")->envname("REDSYS_ADDR")->required();
  service->add_option("--doc", service_args.doc, "Document id")->required();
  service->add_option("--id", service_args.id, "Client id, defaults to the service kind");
  service->add_option("--dict", service_args.dict, "Spotter dictionary: surface<TAB>cd<TAB>name lines");
  service->add_option("--latency", service_args.latency, "Spotter latency in ms");
  service->add_flag("--keep-stale", service_args.keep_stale, "Spotter submits even after its span was edited");

  ClientArgs client_args;
  auto* client = app.add_subcommand("client", "Run an edit script as an editor");
  client->add_option("--connect", client_args.connect, "Broker address")->envname("REDSYS_ADDR")->required();
  client->add_option("--doc", client_args.doc, "Document id")->required();
  client->add_option("--script", client_args.script, "Script file")->required();
  client->add_option("--id", client_args.id, "Client id");
  client->add_option("--transcript", client_args.transcript, "Write every wire record to this file");

  std::string dump_connect;
  std::string dump_doc;
  bool dump_attrs = false;
  auto* dump = app.add_subcommand("dump", "Print a document");
  dump->add_option("--connect", dump_connect, "Broker address")->envname("REDSYS_ADDR")->required();
  dump->add_option("--doc", dump_doc, "Document id")->required();
  dump->add_flag("--attrs", dump_attrs, "Mark attributed spans as [key=value]text[/]");

  std::string replay_dir;
  std::string replay_doc;
  auto* replay = app.add_subcommand("replay", "Fold a revision log and print the text");
  replay->add_option("--log", replay_dir, "Log directory")->required();
  replay->add_option("--doc", replay_doc, "Document id")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*broker) return run_broker(broker_args);
    if (*service) return run_service(service_args);
    if (*client) return run_client(client_args);
    if (*dump) {
      const Document doc = cli::fetch_document(dump_connect, dump_doc);
      std::cout << (dump_attrs ? cli::annotated_text(doc) : doc.utf8());
      return 0;
    }
    if (*replay) {
      std::cout << broker::replay_log(broker::log_path(replay_dir, replay_doc)).utf8();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "redsys: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "redsys: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
