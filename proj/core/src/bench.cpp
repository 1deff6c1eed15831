#include "dmsync/bench.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dmsync/zipf.hpp"

namespace dmsync {

const char* to_string(Mix m) {
  switch (m) {
    case Mix::WriteIntensive: return "write_intensive";
    case Mix::ReadIntensive: return "read_intensive";
    case Mix::WriteOnly: return "write_only";
  }
  return "?";
}

std::optional<Mix> parse_mix(std::string_view s) {
  for (auto m : {Mix::WriteIntensive, Mix::ReadIntensive, Mix::WriteOnly})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

double write_ratio(Mix m) {
  switch (m) {
    case Mix::WriteIntensive: return 0.5;
    case Mix::ReadIntensive: return 0.05;
    case Mix::WriteOnly: return 1.0;
  }
  return 0;
}

void WorkloadSpec::validate() const {
  if (key_count == 0) throw std::invalid_argument("keys must be >= 1");
  if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in [0, 1)");
  if (prefill < 0.0 || prefill > 1.0) throw std::invalid_argument("prefill must be in [0, 1]");
}

std::uint32_t RunOptions::node_count() const { return nodes != 0 ? nodes : (clients + 3) / 4; }

void RunOptions::validate() const {
  if (clients == 0) throw std::invalid_argument("clients must be >= 1");
  const std::uint32_t n = node_count();
  if (n == 0 || n > clients) throw std::invalid_argument("nodes must be in [1, clients]");
  if (clients % n != 0) throw std::invalid_argument("clients must divide evenly into nodes");
  sync.validate();
}

std::string make_value(ClientId client, std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03x%05llx", client.value & 0xFFFu, static_cast<unsigned long long>(seq & 0xFFFFF));
  return std::string(buf, 8);
}

bool MetricsReport::accounting_closed() const {
  if (committed + invalid + fenced != issued) return false;
  return combined_local + combined_global + executed_solo + executed_executor == updates_committed;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct ClientLog {
  std::vector<std::uint64_t> latencies;
  std::vector<OpRecord> history;
  std::uint64_t pessimistic_top_decile = 0;
};

Task<void> client_loop(ClientContext& ctx, Store& store, const WorkloadSpec& w, std::uint64_t seed, ClientLog& log,
                       std::atomic<std::uint64_t>& clock, bool record) {
  ZipfGenerator zipf(w.key_count, w.theta, seed);
  std::mt19937_64 coin_rng(splitmix(seed));
  std::bernoulli_distribution is_write(write_ratio(w.mix));
  const std::uint64_t top_decile = std::max<std::uint64_t>(1, w.key_count / 10);
  log.latencies.reserve(w.ops_per_client);

  for (std::uint64_t i = 0; i < w.ops_per_client; ++i) {
    const std::uint64_t key = zipf.next();
    const bool write = is_write(coin_rng);
    OpRecord rec;
    rec.client = ctx.id();
    rec.key = key;
    rec.t_inv = clock.fetch_add(1);
    const std::uint64_t start = ctx.now();
    OpResult r;
    if (write) {
      rec.value = make_value(ctx.id(), i);
      r = co_await store.upsert(ctx, key, rec.value);
    } else {
      r = co_await store.search(ctx, key);
      rec.value = r.value;
    }
    log.latencies.push_back(ctx.now() - start);
    rec.t_res = clock.fetch_add(1);
    rec.op = r.kind;
    rec.result = r.status;
    if (r.pessimistic && key < top_decile) ++log.pessimistic_top_decile;
    if (record) log.history.push_back(std::move(rec));
  }
}

std::uint64_t percentile(std::vector<std::uint64_t>& v, double p) {
  if (v.empty()) return 0;
  // Nearest-rank definition.
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

const char* to_string(RunStatus::Outcome o) {
  switch (o) {
    case RunStatus::Outcome::Completed: return "completed";
    case RunStatus::Outcome::DeadlockSuspect: return "deadlock_suspect";
    case RunStatus::Outcome::Stopped: return "stopped";
  }
  return "?";
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

LockConfig scaled_lock(const RunOptions& o) {
  LockConfig lc = o.lock;
  if (!o.scale_watch_window) return lc;
  lc.watch_window_steps *= o.clients;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  lc.watch_window_wall *= std::max<std::uint64_t>(1, o.clients / hw);
  return lc;
}

}  // namespace

RunResult run(const WorkloadSpec& w, const RunOptions& o) {
  w.validate();
  o.validate();

  PoolOptions po;
  po.latency = o.latency;
  MemoryPool pool(po);
  Fabric fabric;
  StoreOptions so;
  so.key_count = w.key_count;
  so.mode = o.mode;
  so.sync = o.sync;
  so.lock = scaled_lock(o);
  so.rewrite_on_retry = o.rewrite_on_retry;
  Store store(pool, fabric, so);
  store.prefill(w.prefill, w.seed);

  std::unique_ptr<Runtime> rt;
  if (o.deterministic) {
    Schedule sched;
    sched.seed = w.seed;
    sched.policy = o.policy;
    rt = std::make_unique<DeterministicScheduler>(sched);
  } else {
    rt = std::make_unique<FreeRunner>();
  }

  const std::uint32_t nodes = o.node_count();
  const std::uint32_t per_node = o.clients / nodes;
  std::vector<ClientLog> logs(o.clients);
  std::atomic<std::uint64_t> clock{0};
  for (std::uint32_t i = 0; i < o.clients; ++i) {
    const auto node = static_cast<NodeIndex>(i / per_node);
    const ClientId id = fabric.register_client(node, static_cast<std::uint16_t>(i % per_node));
    store.attach_client(id, node);
    ClientContext& ctx = rt->add_client(id, node);
    const std::uint64_t seed = splitmix(w.seed * 0x100000001B3ull + id.value);
    ctx.seed(splitmix(seed));
    rt->spawn(id, client_loop(ctx, store, w, seed, logs[i], clock, o.record_history));
  }

  const VerbCounters verbs_before = pool.stats();
  const MessageCounters msgs_before = fabric.messages();
  RunResult out;
  out.status = rt->run();

  MetricsReport& r = out.report;
  r.mode = to_string(o.mode.name);
  r.local_wc = o.mode.local_wc;
  r.clients = o.clients;
  r.nodes = nodes;
  r.mix = to_string(w.mix);
  r.theta = w.theta;
  r.keys = w.key_count;
  r.ops_per_client = w.ops_per_client;
  r.seed = w.seed;
  r.deterministic = o.deterministic;
  r.status = to_string(out.status.outcome);
  r.elapsed = out.status.steps;

  const ClientStats s = store.merged_stats();
  for (std::size_t k = 0; k < kOpKinds; ++k) {
    r.issued += s.issued[k];
    r.committed += s.ok[k];
    r.invalid += s.invalid[k];
    r.fenced += s.fenced[k];
  }
  const auto u = static_cast<std::size_t>(OpKind::Update);
  r.updates = s.issued[u];
  r.updates_committed = s.ok[u];
  r.verbs = pool.stats() - verbs_before;
  r.messages = fabric.messages() - msgs_before;
  r.cas_failures = s.cas_failures;
  r.retry_histogram = s.retry_histogram;
  r.combined_local = s.combined_local;
  r.combined_global = s.combined_global;
  r.executed_solo = s.executed_solo;
  r.executed_executor = s.executed_executor;
  r.pessimistic = s.pessimistic;
  r.wc_rate = ratio(s.combined_local + s.combined_global, r.updates);
  r.pessimistic_wc_rate = ratio(s.combined_global, s.pessimistic);
  r.avg_batch = s.batches == 0 ? 1.0 : ratio(s.batch_members, s.batches);
  r.max_batch = std::max<std::uint64_t>(1, s.batch_max);
  r.pessimistic_ratio = ratio(s.pessimistic, r.updates);
  r.ideal_pessimistic_ratio = ratio(s.optimistic_hot, r.updates);
  r.verbs_per_committed_op = r.committed == 0 ? 0.0 : verbs_per_committed_op(r.verbs, r.committed);
  r.latency_unit = o.deterministic ? "steps" : "ns";

  std::vector<std::uint64_t> lat;
  for (auto& l : logs) {
    lat.insert(lat.end(), l.latencies.begin(), l.latencies.end());
    r.pessimistic_top_decile += l.pessimistic_top_decile;
    if (o.record_history)
      for (auto& h : l.history) out.history.push_back(std::move(h));
  }
  r.latency_p50 = percentile(lat, 0.50);
  r.latency_p99 = percentile(lat, 0.99);
  std::sort(out.history.begin(), out.history.end(),
            [](const OpRecord& a, const OpRecord& b) { return a.t_inv < b.t_inv; });
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "mode", "local_wc", "clients", "nodes", "mix", "theta", "keys", "ops_per_client", "seed", "deterministic",
      "status", "issued", "committed", "invalid", "fenced", "updates", "updates_committed", "verbs", "reads",
      "writes", "cas", "masked_cas", "faa", "bytes_read", "bytes_written", "messages", "msg_link", "msg_handover",
      "msg_wc_notify", "msg_wc_handback", "msg_wc_wave", "msg_control", "cas_failures", "retry_histogram",
      "combined_local", "combined_global", "executed_solo", "executed_executor", "pessimistic", "wc_rate",
      "pessimistic_wc_rate", "avg_batch", "max_batch", "pessimistic_ratio", "ideal_pessimistic_ratio",
      "latency_p50", "latency_p99", "latency_unit", "verbs_per_committed_op", "elapsed"};
  return cols;
}

std::string csv_row(const MetricsReport& r) {
  std::ostringstream os;
  auto f = [](double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", d);
    return std::string(buf);
  };
  std::string hist;
  for (const auto& [k, v] : r.retry_histogram) {
    if (!hist.empty()) hist += ';';
    hist += std::to_string(k) + ":" + std::to_string(v);
  }
  const auto& m = r.messages;
  os << r.mode << ',' << (r.local_wc ? 1 : 0) << ',' << r.clients << ',' << r.nodes << ',' << r.mix << ','
     << f(r.theta) << ',' << r.keys << ',' << r.ops_per_client << ',' << r.seed << ',' << (r.deterministic ? 1 : 0)
     << ',' << r.status << ',' << r.issued << ',' << r.committed << ',' << r.invalid << ',' << r.fenced << ','
     << r.updates << ',' << r.updates_committed << ',' << r.verbs.total() << ',' << r.verbs.reads << ','
     << r.verbs.writes << ',' << r.verbs.cas << ',' << r.verbs.masked_cas << ',' << r.verbs.faa << ','
     << r.verbs.bytes_read << ',' << r.verbs.bytes_written << ',' << m.total() << ',' << m[MessageKind::Link] << ','
     << m[MessageKind::Handover] << ',' << m[MessageKind::WcNotify] << ',' << m[MessageKind::WcHandback] << ','
     << m[MessageKind::WcWave] << ',' << m[MessageKind::Control] << ',' << r.cas_failures << ',' << hist << ','
     << r.combined_local << ',' << r.combined_global << ',' << r.executed_solo << ',' << r.executed_executor << ','
     << r.pessimistic << ',' << f(r.wc_rate) << ',' << f(r.pessimistic_wc_rate) << ',' << f(r.avg_batch) << ','
     << r.max_batch << ',' << f(r.pessimistic_ratio) << ',' << f(r.ideal_pessimistic_ratio) << ','
     << r.latency_p50 << ',' << r.latency_p99 << ',' << r.latency_unit << ',' << f(r.verbs_per_committed_op)
     << ',' << r.elapsed;
  return os.str();
}

void export_csv(const MetricsReport& r, const std::string& path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (fresh) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  }
  out << csv_row(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------

namespace {

Task<void> drill_client(ClientContext& ctx, Store& store) {
  co_await store.update(ctx, 0, make_value(ctx.id(), 0));
}

}  // namespace

DrillResult lockstep_drill(ModeName mode, std::uint32_t n) {
  if (n < 2) throw std::invalid_argument("lockstep drill needs at least 2 clients");
  MemoryPool pool;
  Fabric fabric;
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{mode, false};
  so.lock.watch_window_steps *= n;
  so.arena_chunk_bytes = 4096;
  Store store(pool, fabric, so);
  store.load(0, "initial0");

  Schedule sched;
  sched.policy = Policy::RoundRobin;
  DeterministicScheduler rt(sched);
  const std::uint32_t per_node = 4;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto node = static_cast<NodeIndex>(i / per_node);
    const ClientId id = fabric.register_client(node, static_cast<std::uint16_t>(i % per_node));
    store.attach_client(id, node);
    if (mode == ModeName::Cider) store.ledger(node).set_cell(0, CreditCell{n, 0});
    ClientContext& ctx = rt.add_client(id, node);
    rt.spawn(id, drill_client(ctx, store));
  }
  const VerbCounters before = pool.stats();
  const RunStatus status = rt.run();
  if (status.outcome != RunStatus::Outcome::Completed) throw std::runtime_error("lockstep drill did not complete");

  DrillResult d;
  d.mode = mode;
  d.clients = n;
  const ClientStats s = store.merged_stats();
  d.cas_failures = s.cas_failures;
  d.committed = s.ok[static_cast<std::size_t>(OpKind::Update)];
  d.verbs = pool.stats() - before;
  d.messages = fabric.messages();
  d.combined = s.combined_global + s.combined_local;
  d.wc_rate = ratio(d.combined, s.issued[static_cast<std::size_t>(OpKind::Update)]);
  d.verbs_per_committed_op = d.committed == 0 ? 0.0 : verbs_per_committed_op(d.verbs, d.committed);
  return d;
}

}  // namespace dmsync
