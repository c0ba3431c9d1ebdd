#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "anonagg/bench.hpp"
#include "anonagg/client.hpp"
#include "anonagg/experiment.hpp"
#include "anonagg/server.hpp"
#include "anonagg/sim.hpp"
#include "json.hpp"

using namespace anonagg;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

uint16_t default_base_port() {
  if (const char* env = std::getenv("ANONAGG_BASE_PORT")) {
    unsigned long v = std::stoul(env);
    if (v == 0 || v > 65535) {
      throw std::invalid_argument("ANONAGG_BASE_PORT out of range");
    }
    return static_cast<uint16_t>(v);
  }
  return 29500;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<Endpoint> parse_endpoints(const std::string& csv) {
  std::vector<Endpoint> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(Endpoint::parse(item));
  }
  return out;
}

// ---------------------------------------------------------------- leakage

int cmd_leakage(double p, double q, double pi_a, const std::string& out_path) {
  auto params = PrivacyParams::create(p, q);
  auto report = leakage(params, pi_a);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "P(A|Yes),%0.6f\nP(notA|Yes),%0.6f\nepsilon,%0.6f\npi_A,%g\n",
                report.p_a_given_yes, report.p_not_a_given_yes, report.epsilon,
                report.pi_a);
  std::cout << buf;
  if (!out_path.empty()) write_text(out_path, buf);
  return kExitOk;
}

// ------------------------------------------------------------------ synth

int cmd_synth(uint32_t stations, uint64_t total, uint64_t max_per,
              uint64_t min_per, double skew, uint64_t seed,
              const std::string& scenario, const std::string& out_path) {
  Rng rng(seed);
  auto ds = synth_dataset(stations, total, max_per, min_per, rng, scenario,
                          skew);
  std::string csv = dataset_to_csv(ds);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    write_text(out_path, csv);
    std::cout << "wrote " << ds.stations.size() << " stations, "
              << ds.total_vehicles << " vehicles to " << out_path << "\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------- accuracy

int cmd_accuracy(const std::string& dataset_path, uint32_t stations,
                 uint64_t total, uint64_t max_per, uint64_t min_per,
                 double skew, double p, double q, unsigned trials,
                 uint64_t seed, const std::string& scenario,
                 const std::string& out_prefix) {
  StationDataset ds;
  if (!dataset_path.empty()) {
    ds = ingest_csv(dataset_path);
    ds.scenario_label = scenario;
  } else {
    Rng rng(derive_seed(seed, 0xda7a));
    ds = synth_dataset(stations, total, max_per, min_per, rng, scenario, skew);
  }
  auto params = PrivacyParams::create(p, q);
  auto result = run_accuracy_experiment(ds, params, trials, seed);

  std::cout << summary_csv({result});
  if (!out_prefix.empty()) {
    write_text(out_prefix + "_stations.csv", result_to_csv(result));
    write_text(out_prefix + "_summary.csv", summary_csv({result}));
  }
  return kExitOk;
}

// ------------------------------------------------------------------ bench

int cmd_bench(const std::string& rows_csv, uint16_t message_bytes,
              unsigned parties, uint64_t writes, uint64_t seed,
              const std::string& out_path) {
  std::vector<uint32_t> rows_list;
  std::stringstream ss(rows_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    rows_list.push_back(static_cast<uint32_t>(std::stoul(item)));
  }
  auto report = run_throughput_bench(rows_list, message_bytes, parties, writes,
                                     seed);
  std::string csv = report.to_csv();
  std::cout << csv;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max_row_cost_deviation,%.3f\nmax_doubling_deviation,%.3f\n",
                report.max_row_cost_deviation(),
                report.max_doubling_deviation());
  std::cout << buf;
  if (!out_path.empty()) write_text(out_path, csv + buf);
  return kExitOk;
}

// ------------------------------------------------------------------ serve

std::atomic<bool> g_stop_requested{false};

void handle_stop_signal(int) { g_stop_requested.store(true); }

int cmd_serve(uint8_t server_id, const std::string& peers_csv,
              const std::string& listen, uint32_t rows, uint16_t message_bytes,
              uint32_t epoch_ms, uint64_t seed, const std::string& audit,
              uint32_t peer_timeout_ms) {
  ServerConfig cfg;
  cfg.server_id = server_id;
  cfg.roster = parse_endpoints(peers_csv);
  if (!listen.empty()) cfg.listen_override = Endpoint::parse(listen);
  cfg.geometry = TableGeometry::create(rows, message_bytes);
  cfg.epoch_ms = epoch_ms;
  cfg.seed = seed;
  cfg.peer_timeout_ms = peer_timeout_ms;
  if (audit == "eager") {
    cfg.audit_mode = AuditMode::kEager;
  } else if (audit == "lazy") {
    cfg.audit_mode = AuditMode::kLazy;
  } else {
    throw std::invalid_argument("--audit must be eager or lazy");
  }

  struct sigaction sa{};
  sa.sa_handler = handle_stop_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);

  Server server(cfg);
  server.start();
  std::cout << "server " << int(server_id) << " listening on "
            << cfg.listen_endpoint().str() << " rows=" << rows
            << " message_bytes=" << message_bytes << std::endl;
  while (!g_stop_requested.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return kExitOk;
}

// ----------------------------------------------------------------- client

QueryAnnounce query_from_json(const json& j) {
  QueryAnnounce q;
  q.query_id = j.value("query_id", 0ull);
  q.rows = j.at("rows").get<uint32_t>();
  q.message_bytes = j.at("message_bytes").get<uint16_t>();
  q.p = j.at("p").get<double>();
  q.q = j.at("q").get<double>();
  q.epoch_ms = j.value("epoch_ms", 0u);
  if (j.contains("labels")) {
    for (const auto& label : j.at("labels")) {
      q.attribute_labels.push_back(label.get<std::string>());
    }
  } else if (j.contains("attributes")) {
    for (unsigned i = 0; i < j.at("attributes").get<unsigned>(); ++i) {
      q.attribute_labels.push_back("attr-" + std::to_string(i));
    }
  }
  std::string sig_hex = j.value("analyst_signature", std::string("00"));
  for (size_t i = 0; i + 1 < sig_hex.size(); i += 2) {
    q.analyst_signature.push_back(
        static_cast<uint8_t>(std::stoul(sig_hex.substr(i, 2), nullptr, 16)));
  }
  return q;
}

int cmd_client(const std::string& query_path, const std::string& servers_csv,
               int station, const std::string& truth_csv, bool dummy,
               const std::string& owner_label, uint64_t seed, bool announce,
               int64_t fetch_epoch) {
  std::ifstream in(query_path);
  if (!in) throw std::invalid_argument("cannot open query file " + query_path);
  json j = json::parse(in);
  QueryAnnounce query = query_from_json(j);
  validate_query(query);

  std::vector<Endpoint> servers;
  if (!servers_csv.empty()) {
    servers = parse_endpoints(servers_csv);
  } else if (j.contains("servers")) {
    for (const auto& s : j.at("servers")) {
      servers.push_back(Endpoint::parse(s.get<std::string>()));
    }
  }
  if (servers.size() < 2) {
    throw std::invalid_argument("need at least 2 server endpoints");
  }

  if (fetch_epoch >= 0) {
    WriteTable table =
        fetch_result(servers[0], static_cast<uint64_t>(fetch_epoch));
    auto rows = table.nonzero_rows();
    std::cout << "epoch " << fetch_epoch << ": " << rows.size()
              << " nonzero rows\n";
    for (auto& [row, bytes] : rows) {
      std::cout << row << ",";
      for (uint8_t b : bytes) {
        char hex[3];
        std::snprintf(hex, sizeof(hex), "%02x", b);
        std::cout << hex;
      }
      std::cout << "\n";
    }
    return kExitOk;
  }

  if (announce) {
    for (const auto& ep : servers) {
      auto conn = Conn::dial(ep);
      Frame f;
      f.type = MsgType::kQueryAnnounce;
      f.payload = encode_query(query);
      conn->send_frame(f);
      auto reply = conn->recv_frame();
      if (!reply || reply->type != MsgType::kResult) {
        throw NetError("query announce rejected by " + ep.str());
      }
    }
  }

  ParticipationParams params;
  params.geometry =
      TableGeometry::create(query.rows, query.message_bytes);
  params.privacy = PrivacyParams::create(query.p, query.q);
  params.attributes = query.attribute_labels.size();
  params.parties = static_cast<unsigned>(servers.size());

  Rng rng(seed);
  Submission submission;
  if (dummy) {
    submission = prepare_dummy(params, rng);
  } else {
    BitVector truth(params.attributes);
    if (station >= 0) {
      if (static_cast<size_t>(station) >= params.attributes) {
        throw std::invalid_argument("--station out of range");
      }
      truth.set(static_cast<size_t>(station), true);
    } else if (!truth_csv.empty()) {
      size_t i = 0;
      for (char c : truth_csv) {
        if (c == ',') continue;
        if (c != '0' && c != '1') {
          throw std::invalid_argument("--truth must be bits");
        }
        if (i >= params.attributes) {
          throw std::invalid_argument("--truth longer than attribute count");
        }
        truth.set(i++, c == '1');
      }
      if (i != params.attributes) {
        throw std::invalid_argument("--truth shorter than attribute count");
      }
    } else {
      throw std::invalid_argument(
          "one of --station, --truth or --dummy is required");
    }
    submission = prepare_submission(params, truth, rng);
  }

  OwnerId owner = owner_from_label(owner_label);
  uint64_t epoch = client_submit_with_retry(servers, owner, submission);
  std::cout << "accepted into epoch " << epoch
            << (submission.dummy ? " (dummy write)" : "") << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- ingest

int cmd_ingest(const std::string& in_path, const std::string& out_path) {
  auto ds = ingest_csv(in_path);
  std::cout << "rows," << ds.stations.size() << "\ntotal_vehicles,"
            << ds.total_vehicles << "\n";
  if (!out_path.empty()) write_csv(ds, out_path);
  return kExitOk;
}

// -------------------------------------------------------------------- e2e

struct ChildProc {
  pid_t pid = -1;
};

ChildProc spawn_server(const std::string& self, uint8_t id,
                       const std::string& peers, uint32_t rows,
                       uint16_t message_bytes, uint64_t seed,
                       const std::string& audit) {
  ChildProc child;
  child.pid = fork();
  if (child.pid < 0) throw std::runtime_error("fork failed");
  if (child.pid == 0) {
    std::string id_s = std::to_string(id);
    std::string rows_s = std::to_string(rows);
    std::string mb_s = std::to_string(message_bytes);
    std::string seed_s = std::to_string(derive_seed(seed ^ 0x5e7276657273ull, id));
    execl(self.c_str(), self.c_str(), "serve", "--server-id", id_s.c_str(),
          "--peers", peers.c_str(), "--rows", rows_s.c_str(),
          "--message-bytes", mb_s.c_str(), "--seed", seed_s.c_str(),
          "--audit", audit.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  return child;
}

void stop_children(std::vector<ChildProc>& children) {
  for (auto& c : children) {
    if (c.pid > 0) kill(c.pid, SIGTERM);
  }
  for (auto& c : children) {
    if (c.pid <= 0) continue;
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (waitpid(c.pid, &status, WNOHANG) == c.pid) {
        c.pid = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    if (c.pid > 0) {
      kill(c.pid, SIGKILL);
      waitpid(c.pid, nullptr, 0);
    }
  }
}

int cmd_e2e(const std::string& backend, unsigned clients, unsigned dummies,
            uint32_t rows, uint16_t message_bytes, unsigned attributes,
            unsigned parties, double p, double q, uint64_t seed,
            uint16_t base_port, const std::string& audit,
            const std::string& out_path) {
  SimSpec spec;
  spec.params.geometry = TableGeometry::create(rows, message_bytes);
  spec.params.privacy = PrivacyParams::create(p, q);
  spec.params.attributes = attributes;
  spec.params.parties = parties;
  spec.clients = clients;
  spec.dummies = dummies;
  spec.seed = seed;
  spec.audit_mode = audit == "lazy" ? AuditMode::kLazy : AuditMode::kEager;
  if ((attributes + 7) / 8 > message_bytes) {
    throw std::invalid_argument(
        "message_bytes cannot carry one bit per attribute");
  }

  auto truths = make_one_hot_truths(clients, attributes, seed);
  auto t0 = std::chrono::steady_clock::now();
  SimOutcome sim = run_inprocess(spec, truths);
  auto t1 = std::chrono::steady_clock::now();

  bool sim_consistent = true;
  for (const auto& table : sim.tables) {
    sim_consistent = sim_consistent && table.data == sim.tables[0].data;
  }
  auto sim_multiset = write_multiset(sim.tables[0]);
  std::cout << "in-process: " << sim.submissions.size() << " submissions, "
            << sim_multiset.size() << " nonzero rows, "
            << (sim_consistent ? "tables identical" : "TABLES DIFFER") << ", "
            << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
                   .count()
            << " ms\n";
  if (!sim_consistent) return kExitRuntime;

  if (backend == "inprocess") {
    if (!out_path.empty()) {
      std::string csv = "row,bytes_hex\n";
      for (auto& [row, bytes] : sim.tables[0].nonzero_rows()) {
        char line[64];
        std::snprintf(line, sizeof(line), "%u,", row);
        csv += line;
        for (uint8_t b : bytes) {
          char hex[3];
          std::snprintf(hex, sizeof(hex), "%02x", b);
          csv += hex;
        }
        csv += "\n";
      }
      write_text(out_path, csv);
    }
    return kExitOk;
  }

  // Live backend: spawn one serve process per party and replay the same
  // submissions over localhost.
  char self_path[4096];
  ssize_t n = readlink("/proc/self/exe", self_path, sizeof(self_path) - 1);
  if (n <= 0) throw std::runtime_error("cannot resolve /proc/self/exe");
  self_path[n] = '\0';

  std::string peers;
  std::vector<Endpoint> roster;
  for (unsigned s = 0; s < parties; ++s) {
    Endpoint ep{"127.0.0.1", static_cast<uint16_t>(base_port + s)};
    roster.push_back(ep);
    if (!peers.empty()) peers += ",";
    peers += ep.str();
  }

  std::vector<ChildProc> children;
  for (unsigned s = 0; s < parties; ++s) {
    children.push_back(spawn_server(self_path, static_cast<uint8_t>(s), peers,
                                    rows, message_bytes, seed, audit));
  }

  int rc = kExitRuntime;
  try {
    // Submissions, over a small thread pool, in the prepared order.
    auto t2 = std::chrono::steady_clock::now();
    std::atomic<size_t> next{0};
    std::atomic<int> failed{0};
    unsigned pool = std::min(8u, std::max(1u, clients));
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < pool; ++w) {
      workers.emplace_back([&] {
        while (true) {
          size_t i = next.fetch_add(1);
          if (i >= sim.submissions.size()) return;
          try {
            client_submit(roster, sim.owners[i], sim.submissions[i], 0,
                          std::chrono::milliseconds(15000));
          } catch (const std::exception& e) {
            std::cerr << "submit " << i << " failed: " << e.what() << "\n";
            failed.fetch_add(1);
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failed.load() != 0) throw std::runtime_error("submissions failed");

    for (const auto& ep : roster) {
      auto conn = Conn::dial(ep, std::chrono::milliseconds(15000));
      Frame f;
      f.type = MsgType::kEpochClose;
      f.epoch_id = 0;
      conn->send_frame(f);
      auto reply = conn->recv_frame();
      if (!reply || reply->type != MsgType::kResult) {
        throw std::runtime_error("close rejected by " + ep.str());
      }
    }

    std::vector<WriteTable> live;
    for (const auto& ep : roster) {
      live.push_back(fetch_result(ep, 0, std::chrono::milliseconds(20000)));
    }
    auto t3 = std::chrono::steady_clock::now();

    bool identical = true;
    for (const auto& table : live) {
      identical = identical && table.data == live[0].data;
    }
    bool multiset_equal = write_multiset(live[0]) == sim_multiset;
    bool byte_equal = live[0].data == sim.tables[0].data;

    std::cout << "live: " << live[0].nonzero_rows().size()
              << " nonzero rows, "
              << std::chrono::duration_cast<std::chrono::milliseconds>(t3 - t2)
                     .count()
              << " ms\n";
    std::cout << "servers_output_match," << (identical ? "yes" : "NO") << "\n";
    std::cout << "multiset_equals_inprocess," << (multiset_equal ? "yes" : "NO")
              << "\n";
    std::cout << "tables_byte_equal," << (byte_equal ? "yes" : "NO") << "\n";
    rc = identical && multiset_equal && byte_equal ? kExitOk : kExitRuntime;

    if (!out_path.empty()) {
      std::string csv = "row,bytes_hex\n";
      for (auto& [row, bytes] : live[0].nonzero_rows()) {
        char line[64];
        std::snprintf(line, sizeof(line), "%u,", row);
        csv += line;
        for (uint8_t b : bytes) {
          char hex[3];
          std::snprintf(hex, sizeof(hex), "%02x", b);
          csv += hex;
        }
        csv += "\n";
      }
      write_text(out_path, csv);
    }
  } catch (...) {
    stop_children(children);
    throw;
  }
  stop_children(children);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "anonagg: locally privatized, anonymously aggregated population "
      "counts over XOR-shared write tables"};
  app.require_subcommand(1);

  // leakage
  double p = 0.995, q = 0.999, pi_a = 0.005;
  uint64_t seed = 1;
  std::string out_path;
  auto* leak = app.add_subcommand(
      "leakage", "closed-form posterior and epsilon for given coin biases");
  leak->add_option("p", p, "first coin heads bias")->required();
  leak->add_option("q", q, "second coin heads bias")->required();
  leak->add_option("pi_a", pi_a, "population fraction with the attribute")
      ->required();
  leak->add_option("--seed", seed, "unused, accepted for uniformity");
  leak->add_option("--out", out_path, "also write the report as CSV");

  // synth
  uint32_t stations = 1157;
  uint64_t total = 222704, max_per = 860, min_per = 1;
  double skew = 0.35;
  std::string scenario = "rush-hour";
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--stations", stations);
  synth->add_option("--total", total);
  synth->add_option("--max", max_per);
  synth->add_option("--min", min_per);
  synth->add_option("--skew", skew, "power-law exponent");
  synth->add_option("--scenario", scenario);
  synth->add_option("--seed", seed);
  synth->add_option("--out", out_path);

  // accuracy
  std::string dataset_path;
  unsigned trials = 1;
  auto* acc = app.add_subcommand(
      "accuracy", "per-station estimation error on a dataset");
  acc->add_option("--dataset", dataset_path, "station CSV; synthesized if absent");
  acc->add_option("--stations", stations);
  acc->add_option("--total", total);
  acc->add_option("--max", max_per);
  acc->add_option("--min", min_per);
  acc->add_option("--skew", skew);
  acc->add_option("--p", p);
  acc->add_option("--q", q);
  acc->add_option("--trials", trials);
  acc->add_option("--scenario", scenario);
  acc->add_option("--seed", seed);
  acc->add_option("--out", out_path, "prefix for _stations.csv and _summary.csv");

  // bench
  std::string rows_csv = "256,512,1024,2048";
  uint16_t message_bytes = 160;
  unsigned parties = 8;
  uint64_t writes = 0;
  auto* bench = app.add_subcommand(
      "bench", "server-side write throughput across table sizes");
  bench->add_option("--rows-list", rows_csv);
  bench->add_option("--message-bytes", message_bytes);
  bench->add_option("--parties", parties);
  bench->add_option("--writes", writes, "0 = auto-scale per point");
  bench->add_option("--seed", seed);
  bench->add_option("--out", out_path);

  // serve
  uint8_t server_id = 0;
  std::string peers_csv, listen, audit = "eager";
  uint32_t rows = 512, epoch_ms = 0, peer_timeout_ms = 5000;
  auto* serve = app.add_subcommand("serve", "run one aggregation server");
  serve->add_option("--server-id", server_id)->required();
  serve->add_option("--peers", peers_csv, "all server endpoints in id order")
      ->required();
  serve->add_option("--listen", listen, "override the roster listen endpoint");
  serve->add_option("--rows", rows);
  serve->add_option("--message-bytes", message_bytes);
  serve->add_option("--epoch-ms", epoch_ms,
                    "timer-close period; 0 closes only on EPOCH_CLOSE");
  serve->add_option("--seed", seed);
  serve->add_option("--audit", audit, "eager or lazy");
  serve->add_option("--peer-timeout-ms", peer_timeout_ms);

  // client
  std::string query_path, servers_csv, truth_csv, owner_label = "client";
  int station = -1;
  int64_t fetch_epoch = -1;
  bool dummy = false, announce = false;
  auto* client = app.add_subcommand("client", "submit one anonymous write");
  client->add_option("--query", query_path, "query JSON file")->required();
  client->add_option("--servers", servers_csv, "override server endpoints");
  client->add_option("--station", station, "truthful station index (one-hot)");
  client->add_option("--truth", truth_csv, "explicit truth bits, e.g. 0,1,0");
  client->add_flag("--dummy", dummy, "zero-message cover write");
  client->add_option("--owner", owner_label, "owner identity label");
  client->add_flag("--announce", announce, "announce the query first");
  client->add_option("--fetch", fetch_epoch,
                     "fetch and decode the finalized table for an epoch");
  client->add_option("--seed", seed);
  client->add_option("--out", out_path, "unused, accepted for uniformity");

  // ingest
  std::string in_path;
  auto* ingest = app.add_subcommand("ingest", "validate station CSV");
  ingest->add_option("--in", in_path)->required();
  ingest->add_option("--seed", seed, "unused, accepted for uniformity");
  ingest->add_option("--out", out_path, "re-emit normalized CSV");

  // e2e
  std::string backend = "both";
  unsigned clients = 100, dummies = 0, attributes = 16;
  uint16_t base_port = 0;
  auto* e2e = app.add_subcommand(
      "e2e", "run an epoch end to end and compare backends");
  e2e->add_option("--backend", backend, "inprocess, live or both");
  e2e->add_option("--clients", clients);
  e2e->add_option("--dummies", dummies);
  e2e->add_option("--rows", rows);
  e2e->add_option("--message-bytes", message_bytes);
  e2e->add_option("--attributes", attributes);
  e2e->add_option("--servers", parties)->check(CLI::Range(2u, 16u));
  e2e->add_option("--p", p);
  e2e->add_option("--q", q);
  e2e->add_option("--audit", audit);
  e2e->add_option("--base-port", base_port);
  e2e->add_option("--seed", seed);
  e2e->add_option("--out", out_path, "decoded table CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*leak) return cmd_leakage(p, q, pi_a, out_path);
    if (*synth) {
      return cmd_synth(stations, total, max_per, min_per, skew, seed, scenario,
                       out_path);
    }
    if (*acc) {
      return cmd_accuracy(dataset_path, stations, total, max_per, min_per,
                          skew, p, q, trials, seed, scenario, out_path);
    }
    if (*bench) {
      return cmd_bench(rows_csv, message_bytes, parties, writes, seed,
                       out_path);
    }
    if (*serve) {
      return cmd_serve(server_id, peers_csv, listen, rows, message_bytes,
                       epoch_ms, seed, audit, peer_timeout_ms);
    }
    if (*client) {
      return cmd_client(query_path, servers_csv, station, truth_csv, dummy,
                        owner_label, seed, announce, fetch_epoch);
    }
    if (*ingest) return cmd_ingest(in_path, out_path);
    if (*e2e) {
      uint16_t port = base_port ? base_port : default_base_port();
      if (backend != "inprocess" && backend != "live" && backend != "both") {
        throw std::invalid_argument("--backend must be inprocess, live or both");
      }
      std::string mode = backend == "both" ? "live" : backend;
      return cmd_e2e(mode, clients, dummies, rows, message_bytes, attributes,
                     parties, p, q, seed, port,
                     audit == "lazy" ? "lazy" : "eager", out_path);
    }
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const WireError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
