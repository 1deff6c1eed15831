#pragma once

// Deterministic verification suites: linearizability of small random runs,
// DELETE fencing, write-combining batch accounting, and epoch-based repair of
// a lock whose holder died.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmsync/history.hpp"
#include "dmsync/kvstore.hpp"
#include "dmsync/schedule.hpp"

namespace dmsync {

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint32_t runs = 500;  // linearizability runs per mode
  /// Fault injection: DELETE enqueues without bumping the lock version.
  bool skip_version_bump = false;
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  std::vector<std::string> details;  // one line per failure, witness included
};

/// <= 4 clients, <= 3 keys, <= 12 operations, random schedule.
struct SmallRun {
  Mode mode;
  std::uint64_t seed = 0;
  std::vector<OpRecord> history;
  KvState initial;
  RunStatus status;
  LinearizabilityResult verdict;
};
SmallRun small_run(Mode mode, std::uint64_t seed, bool skip_version_bump = false);

/// Scripted UPDATE/DELETE races on one key.
struct FencingCase {
  std::string name;
  ModeName mode = ModeName::Mcs;
  bool passed = false;
  std::string detail;
  std::vector<OpRecord> history;
};
std::vector<FencingCase> fencing_cases(bool skip_version_bump = false);

/// Counts the verbs and messages one combined batch of exactly k UPDATEs costs
/// from the moment its first member is granted the lock.
struct BatchAccounting {
  std::uint32_t k = 0;
  std::uint16_t batch = 0;  // size reported by the executor
  std::uint64_t kv_writes = 0;
  std::uint64_t pointer_cas = 0;
  std::uint64_t entry_reads = 0;
  std::uint64_t notify = 0;
  std::uint64_t handback = 0;
  std::uint64_t wave = 0;
  std::uint64_t combined = 0;  // members that returned Combined
  bool all_ok = false;
  bool matches() const;
};
BatchAccounting measure_batch(std::uint32_t k);

/// Random-length pessimistic queues under a random schedule. Every batch must
/// commit its queue-last member's value and report one result to all members.
struct LwwCheck {
  bool passed = false;
  std::uint64_t batches = 0;
  std::string detail;
};
LwwCheck check_last_writer_wins(std::uint64_t seed);

/// Kills the lock holder inside its critical section with `waiters` queued.
struct EpochDrill {
  std::uint32_t waiters = 0;
  std::uint64_t window = 0;
  std::uint64_t kill_time = 0;
  std::vector<std::uint32_t> stalls;     // per waiter
  std::vector<std::uint32_t> progress;   // per waiter
  std::vector<std::uint64_t> stall_delay;  // first stall time - kill time
  std::vector<std::uint32_t> completed;  // ops that returned, per waiter
  std::uint64_t repairs_applied = 0;
  bool lock_free_at_end = false;
  RunStatus status;
  bool passed = false;
  std::string detail;
};
EpochDrill epoch_drill(ModeName mode, std::uint32_t waiters);

SuiteResult verify_linearizability(const VerifyOptions& o, std::optional<ModeName> only = std::nullopt);
SuiteResult verify_fencing(const VerifyOptions& o);
SuiteResult verify_gwc(const VerifyOptions& o);
SuiteResult verify_epoch(const VerifyOptions& o);

const std::vector<std::string>& suite_names();
std::optional<SuiteResult> run_suite(const std::string& name, const VerifyOptions& o);

}  // namespace dmsync
