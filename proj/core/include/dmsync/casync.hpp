#pragma once

// Contention-aware synchronization: a per-node credit ledger that routes hot
// pointers to the pessimistic (lock + global WC) path, and the node-local
// write-combining table shared by every mode.

#include <array>
#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "dmsync/fabric.hpp"
#include "dmsync/gwc.hpp"
#include "dmsync/schedule.hpp"
#include "dmsync/task.hpp"

namespace dmsync {

struct SyncParams {
  std::uint32_t aimd_factor = 2;
  std::uint32_t initial_credit = 36;
  std::uint32_t hotness_threshold = 2;
  std::size_t ledger_capacity = std::size_t{1} << 20;

  void validate() const;
};

enum class SyncMode : std::uint8_t { Optimistic, Pessimistic };

/// One pointer's ledger state. The transition functions are pure so the
/// algorithm can be replayed without a ledger.
struct CreditCell {
  std::uint64_t credit = 0;
  std::uint64_t retry_record = 0;

  SyncMode decide();
  void after_pessimistic(std::uint64_t batch_size, const SyncParams& p);
  void after_optimistic(std::uint64_t n_retry, const SyncParams& p);
  friend bool operator==(const CreditCell&, const CreditCell&) = default;
};

/// Per compute node; shared by that node's clients.
class CreditLedger {
 public:
  explicit CreditLedger(SyncParams params = {});

  SyncMode decide_mode(std::uint64_t ptr);
  void after_pessimistic(std::uint64_t ptr, std::uint64_t batch_size);
  void after_optimistic(std::uint64_t ptr, std::uint64_t n_retry);

  CreditCell cell(std::uint64_t ptr) const;
  void set_cell(std::uint64_t ptr, CreditCell c);
  std::size_t size() const;
  const SyncParams& params() const { return params_; }

 private:
  struct Entry {
    CreditCell cell;
    std::list<std::uint64_t>::iterator lru;
  };
  Entry& touch(std::uint64_t ptr);
  void evict();

  SyncParams params_;
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, Entry> map_;
  std::list<std::uint64_t> lru_;  // front = most recent
};

/// Node-local write combining keyed by pointer address. The first arriver
/// becomes the combiner; arrivals while its window is open overwrite the
/// buffer and adopt its result. The window closes when the combiner takes
/// the buffer to write the block; later arrivals wait for the next round.
class LocalWcTable {
 public:
  struct Ticket {
    bool combiner = false;
    bool retry = false;                  // joiners only: the round produced nothing to adopt
    ResultCode result = ResultCode::Ok;  // joiners only
    std::uint64_t generation = 0;
    std::uint32_t joined = 0;  // combiner: joiners folded into its round, set by exit()
  };

  Task<Ticket> enter(ClientContext& ctx, std::uint64_t ptr, const std::string& value);
  /// Closes the window and returns the value to write (the last writer's).
  std::string take(std::uint64_t ptr);
  /// Publishes the combiner's result and resets the slot. Returns the number
  /// of joiners that adopted it. Only a result the combiner produced after
  /// take() is adoptable; with nullopt every joiner retries on its own.
  std::uint32_t exit(std::uint64_t ptr, std::optional<ResultCode> result);

 private:
  enum State : std::uint8_t { Idle, Open, Closed };
  static constexpr std::uint16_t kRetry = 0xFFFF;
  struct Slot {
    std::atomic<std::uint8_t> state{Idle};
    std::atomic<std::uint64_t> generation{0};
    std::atomic<std::uint64_t> published{0};
    // Results by generation, so a slow joiner never adopts a later round's.
    std::array<std::atomic<std::uint16_t>, 64> results{};
    std::uint32_t joiners = 0;
    std::string buffer;
  };
  Slot& slot(std::uint64_t ptr);

  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Slot>> slots_;
};

}  // namespace dmsync
