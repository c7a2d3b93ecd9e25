#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dske/agent.hpp"
#include "dske/bench.hpp"
#include "dske/bounds.hpp"
#include "dske/error.hpp"
#include "dske/hub.hpp"
#include "dske/net.hpp"
#include "dske/psrd.hpp"
#include "dske/simnet.hpp"

namespace {

// Blocks until SIGINT or SIGTERM.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

int run_hub(const std::string& config_path) {
  block_signals();
  dske::HubServer hub(dske::parse_hub_config(dske::KvConfig::load(config_path)));
  hub.start();
  std::fprintf(stderr, "hub listening on port %u\n", hub.port());
  wait_for_signal();
  hub.stop();
  return 0;
}

int run_agent(const std::string& config_path) {
  block_signals();
  dske::ClientAgent agent(dske::parse_client_config(dske::KvConfig::load(config_path)));
  agent.start();
  if (auto port = agent.api_port()) std::fprintf(stderr, "key api on port %u\n", *port);
  wait_for_signal();
  agent.stop();
  return 0;
}

int run_request(const std::string& api, const std::string& peer, std::uint64_t bits, std::uint64_t key_id,
                std::uint64_t timeout_ms) {
  using nlohmann::json;
  auto sock = dske::connect_tcp(dske::parse_endpoint(api), std::chrono::milliseconds(2000));
  json req;
  if (key_id != 0) {
    req = {{"op", "get_key_by_id"}, {"origin", peer}, {"key_id", key_id}, {"bits", bits}, {"timeout_ms", timeout_ms}};
  } else {
    req = {{"op", "get_key"}, {"peer", peer}, {"bits", bits}};
  }
  const std::string line = req.dump() + "\n";
  sock.send_all(std::span(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()));
  auto reply = dske::read_line(sock);
  if (!reply) {
    std::fprintf(stderr, "agent closed the connection\n");
    return 1;
  }
  std::cout << *reply << "\n";
  return json::parse(*reply).value("ok", false) ? 0 : 1;
}

int run_gen_psrd(const std::string& hub, const std::string& client, std::uint64_t len, std::optional<std::uint64_t> seed,
                 unsigned bits, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const auto field = dske::field_from_bits(bits);
  auto src = seed ? dske::EntropySource::seeded(*seed) : dske::EntropySource::system();
  const fs::path client_dir = fs::path(out_dir) / client;
  const fs::path hub_dir = fs::path(out_dir) / hub;
  fs::create_directories(client_dir);
  fs::create_directories(hub_dir);
  for (auto d : {dske::Direction::client_to_hub, dske::Direction::hub_to_client}) {
    auto pair = dske::generate_table_pair(len, field, *src, client, hub, d);
    const auto name = dske::table_file_name(client, hub, d);
    dske::save_table_file(client_dir / name, pair.client_copy);
    dske::save_table_file(hub_dir / name, pair.hub_copy);
    std::printf("%s\n%s\n", (client_dir / name).c_str(), (hub_dir / name).c_str());
  }
  return 0;
}

int run_simulate(const std::string& path) {
  const auto s = dske::load_scenario(path);
  const auto report = dske::run_scenario(s.params, s.adversary, s.trials, s.seed, s.method);
  std::cout << dske::format_report(report);
  return 0;
}

int run_bench(const std::string& grid, std::uint64_t secret_bits, std::size_t repeats, const std::string& csv,
              const std::string& interpolation) {
  const auto method =
      interpolation == "lagrange" ? dske::Interpolation::lagrange : dske::Interpolation::coefficients;
  const auto report = dske::run_bench(dske::parse_grid(grid), secret_bits, repeats, method);
  std::cout << dske::format_bench(report);
  if (!csv.empty()) {
    std::ofstream out(csv);
    out << dske::to_csv(report);
    if (!out) throw dske::Error(dske::Errc::io_error, "cannot write " + csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed symmetric key establishment: hubs, agents and analysis tools"};
  app.require_subcommand(1);

  std::string config;
  auto* hub = app.add_subcommand("hub", "Run a security hub daemon");
  hub->add_option("--config", config, "Hub configuration file")->required()->check(CLI::ExistingFile);

  auto* agent = app.add_subcommand("agent", "Run a client key agent");
  agent->add_option("--config", config, "Agent configuration file")->required()->check(CLI::ExistingFile);

  std::string api = "127.0.0.1:7100";
  std::string peer;
  std::uint64_t bits = 256;
  std::uint64_t key_id = 0;
  std::uint64_t timeout_ms = 5000;
  auto* request = app.add_subcommand("request", "Ask the local agent for a key");
  request->add_option("--peer", peer, "Peer client (the origin when --key-id is given)")->required();
  request->add_option("--bits", bits, "Key size in bits")->required();
  request->add_option("--api", api, "Agent key API endpoint")->capture_default_str();
  request->add_option("--key-id", key_id, "Fetch a key agreed by the peer instead of creating one");
  request->add_option("--timeout-ms", timeout_ms, "Wait limit for --key-id")->capture_default_str();

  std::string hub_id;
  std::string client_id;
  std::uint64_t len = 0;
  std::optional<std::uint64_t> seed;
  unsigned field = 128;
  std::string out_dir = ".";
  auto* gen = app.add_subcommand("gen-psrd", "Generate both table directions for one client and hub");
  gen->add_option("--hub", hub_id, "Hub identity")->required();
  gen->add_option("--client", client_id, "Client identity")->required();
  gen->add_option("--len", len, "Elements per table")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Deterministic seed (omit for system entropy)");
  gen->add_option("--field-bits", field, "Element width: 8 or 128")->capture_default_str();
  gen->add_option("--out", out_dir, "Output root; writes <out>/<client>/ and <out>/<hub>/")->capture_default_str();

  std::string scenario;
  auto* sim = app.add_subcommand("simulate", "Run an in-process adversarial scenario");
  sim->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  std::uint64_t n = 0, k = 0, m = 1, msg_blocks = 0, compromised = 0;
  unsigned field_bits = 128;
  bool machine = false;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the security and robustness bounds");
  bounds->add_option("--n", n, "Number of hubs")->required();
  bounds->add_option("--k", k, "Threshold")->required();
  bounds->add_option("--m", m, "Secret length in field elements")->capture_default_str();
  bounds->add_option("--field-bits", field_bits, "Field size in bits")->capture_default_str();
  bounds->add_option("--msg-blocks", msg_blocks, "Message length s in tag-field blocks")->capture_default_str();
  bounds->add_option("--compromised", compromised, "Compromised hubs for the robustness check")->capture_default_str();
  bounds->add_flag("--machine", machine, "Only print key=value lines");

  std::string grid = "k=2,4,8,16";
  std::uint64_t secret_bits = 1 << 20;
  std::size_t repeats = 5;
  std::string csv;
  std::string interpolation = "coefficients";
  auto* bench = app.add_subcommand("bench", "Time share generation and reconstruction");
  bench->add_option("--grid", grid, "'n:k,n:k,...' or 'k=2,4,...' for (k,k) and (k+2,k)")->capture_default_str();
  bench->add_option("--secret-bits", secret_bits, "Secret size in bits")->capture_default_str();
  bench->add_option("--repeats", repeats, "Repetitions per grid point (median reported)")->capture_default_str();
  bench->add_option("--csv", csv, "Write rows to this CSV file");
  bench->add_option("--interpolation", interpolation, "coefficients or lagrange")
      ->check(CLI::IsMember({"coefficients", "lagrange"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*hub) return run_hub(config);
    if (*agent) return run_agent(config);
    if (*request) return run_request(api, peer, bits, key_id, timeout_ms);
    if (*gen) return run_gen_psrd(hub_id, client_id, len, seed, field, out_dir);
    if (*sim) return run_simulate(scenario);
    if (*bounds) {
      const auto r = dske::compute_bounds(n, k, m, field_bits, msg_blocks, compromised);
      if (!machine) std::cout << dske::format_table(r) << "\n";
      std::cout << dske::format_machine(r);
      return 0;
    }
    if (*bench) return run_bench(grid, secret_bits, repeats, csv, interpolation);
  } catch (const dske::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
