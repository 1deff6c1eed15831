#pragma once

// Workload runner and metrics.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmsync/casync.hpp"
#include "dmsync/history.hpp"
#include "dmsync/kvstore.hpp"
#include "dmsync/mcslock.hpp"
#include "dmsync/mempool.hpp"
#include "dmsync/schedule.hpp"

namespace dmsync {

enum class Mix : std::uint8_t { WriteIntensive, ReadIntensive, WriteOnly };

const char* to_string(Mix m);
std::optional<Mix> parse_mix(std::string_view s);
/// Fraction of operations that are writes (UPDATE, or INSERT when absent).
double write_ratio(Mix m);

struct WorkloadSpec {
  Mix mix = Mix::WriteIntensive;
  double theta = 0.99;
  std::uint64_t key_count = 1'000'000;
  std::uint64_t ops_per_client = 100'000;
  std::uint64_t seed = 1;
  double prefill = 1.0;

  void validate() const;
};

struct RunOptions {
  Mode mode{};
  std::uint32_t clients = 64;
  std::uint32_t nodes = 0;  // 0: four clients per node
  bool deterministic = true;
  Policy policy = Policy::Random;
  SyncParams sync{};
  LockConfig lock{};
  /// Multiply the epoch watch window by the client count (deterministic) or
  /// by clients per hardware thread (free-running); a fixed window counts
  /// other clients' steps and would fire spuriously at high client counts.
  bool scale_watch_window = true;
  bool rewrite_on_retry = false;
  bool record_history = false;
  VerbLatency latency{};

  std::uint32_t node_count() const;
  void validate() const;
};

struct MetricsReport {
  std::string mode;
  bool local_wc = false;
  std::uint32_t clients = 0;
  std::uint32_t nodes = 0;
  std::string mix;
  double theta = 0;
  std::uint64_t keys = 0;
  std::uint64_t ops_per_client = 0;
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::string status;

  std::uint64_t issued = 0;
  std::uint64_t committed = 0;
  std::uint64_t invalid = 0;
  std::uint64_t fenced = 0;
  std::uint64_t updates = 0;  // UPDATE requests issued
  std::uint64_t updates_committed = 0;

  VerbCounters verbs;
  MessageCounters messages;
  std::uint64_t cas_failures = 0;
  std::map<std::uint32_t, std::uint64_t> retry_histogram;

  std::uint64_t combined_local = 0;
  std::uint64_t combined_global = 0;
  std::uint64_t executed_solo = 0;
  std::uint64_t executed_executor = 0;
  std::uint64_t pessimistic = 0;
  std::uint64_t pessimistic_top_decile = 0;

  double wc_rate = 0;
  double pessimistic_wc_rate = 0;
  double avg_batch = 1;
  std::uint64_t max_batch = 1;
  double pessimistic_ratio = 0;
  double ideal_pessimistic_ratio = 0;
  std::uint64_t latency_p50 = 0;
  std::uint64_t latency_p99 = 0;
  std::string latency_unit;  // "steps" or "ns"
  double verbs_per_committed_op = 0;
  std::uint64_t elapsed = 0;  // steps or ns

  /// committed + invalid + fenced == issued, and the update paths add up.
  bool accounting_closed() const;
};

struct RunResult {
  MetricsReport report;
  std::vector<OpRecord> history;
  RunStatus status;
};

RunResult run(const WorkloadSpec& workload, const RunOptions& options);

/// Fixed column order; see README for meanings.
const std::vector<std::string>& csv_columns();
std::string csv_row(const MetricsReport& r);
/// Appends one row, writing the header first if the file is new or empty.
void export_csv(const MetricsReport& r, const std::string& path);

/// Eight printable bytes, unique per (client, sequence).
std::string make_value(ClientId client, std::uint64_t seq);

/// n clients each UPDATE one key once, stepped round-robin so every client
/// reads the same pointer before anyone commits.
struct DrillResult {
  ModeName mode = ModeName::OSync;
  std::uint32_t clients = 0;
  std::uint64_t cas_failures = 0;
  std::uint64_t committed = 0;
  VerbCounters verbs;
  MessageCounters messages;
  std::uint64_t combined = 0;
  double wc_rate = 0;
  double verbs_per_committed_op = 0;
};

/// In cider mode every node's ledger is pre-credited for the key, so the drill
/// exercises the pessimistic path from the first request.
DrillResult lockstep_drill(ModeName mode, std::uint32_t clients);

}  // namespace dmsync
