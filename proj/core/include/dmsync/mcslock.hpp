#pragma once

// Distributed MCS queue lock over the memory pool.
//
// Each lock is a 16-byte lock entry in the pool: word 0 packs the tail client
// (bits 63..4) with a 4-bit version (bits 3..0); word 1 is the epoch. Waiters
// queue through client-local lock nodes and spin only on their own node.

#include <chrono>
#include <cstdint>

#include "dmsync/fabric.hpp"
#include "dmsync/mempool.hpp"
#include "dmsync/observer.hpp"
#include "dmsync/schedule.hpp"
#include "dmsync/task.hpp"

namespace dmsync {

namespace lock_word {
inline constexpr Word kVersionMask = 0xF;
inline constexpr Word kTailMask = ~kVersionMask;

constexpr Word pack(ClientId tail, std::uint8_t version) {
  return (Word{tail.value} << 4) | (Word{version} & kVersionMask);
}
constexpr ClientId tail(Word w) { return ClientId(static_cast<std::uint16_t>(w >> 4)); }
constexpr std::uint8_t version(Word w) { return static_cast<std::uint8_t>(w & kVersionMask); }
constexpr std::uint8_t next_version(std::uint8_t v) { return static_cast<std::uint8_t>((v + 1) & kVersionMask); }
}  // namespace lock_word

// Releases add 1; memory-node repairs add 2^32, so a waiter can tell a
// repaired queue apart from a slow one.
namespace epoch_word {
inline constexpr Word kRelease = 1;
inline constexpr Word kRepair = Word{1} << 32;
constexpr std::uint32_t releases(Word e) { return static_cast<std::uint32_t>(e); }
constexpr std::uint32_t repairs(Word e) { return static_cast<std::uint32_t>(e >> 32); }
}  // namespace epoch_word

struct LockEntry {
  ClientId tail;
  std::uint8_t version = 0;
  Word epoch = 0;
};

class LockTable {
 public:
  LockTable() = default;
  LockTable(MemoryPool& pool, std::size_t count);

  Address entry(LockId lock) const { return base_ + lock.value * 16; }
  Address epoch(LockId lock) const { return base_ + lock.value * 16 + 8; }
  std::size_t size() const { return count_; }
  Address base() const { return base_; }

 private:
  Address base_{};
  std::size_t count_ = 0;
};

struct LockConfig {
  bool bump_epoch_on_release = true;
  /// Epoch watch window; 0 disables watching (waiters block forever).
  std::uint64_t watch_window_steps = 1000;
  std::chrono::nanoseconds watch_window_wall = std::chrono::milliseconds(50);
  /// Fault-injection knob for the verification suites: DELETE enqueues
  /// without bumping the entry version.
  bool skip_delete_version_bump = false;
};

enum class AcquireKind { Owner, Combined, VersionMismatch };

struct AcquireOutcome {
  AcquireKind kind = AcquireKind::Owner;
  std::uint16_t result = 0;  // Combined only
  std::uint8_t version = 0;  // entry version observed at enqueue
};

enum class EpochVerdict { Progress, Stalled };

/// How a queue episode ended for the caller.
struct Grant {
  enum class Kind { Free, Handover, Mismatch };
  Kind kind = Kind::Free;
  ClientId predecessor;
  std::uint32_t locked = locked::kOwner;
  ClientId coordinator;
  std::uint16_t result = 0;
  std::uint16_t batch = 0;
  std::uint8_t version = 0;
};

struct EpochWatch {
  bool active = false;
  Word observed = 0;
  bool repaired_elsewhere = false;
};

class McsLock {
 public:
  McsLock(MemoryPool& pool, Fabric& fabric, const LockTable& table, LockConfig config = {});

  void set_observer(ProtocolObserver* obs) { observer_ = obs; }
  const LockConfig& config() const { return config_; }
  const LockTable& table() const { return table_; }

  /// Enqueue with a single masked CAS that checks the entry version against
  /// `expected_version` and swaps the tail to the caller.
  Task<AcquireOutcome> acquire(ClientContext& ctx, LockId lock, std::uint8_t expected_version);

  /// DELETE acquisition: enqueue and bump the entry version in the same
  /// masked CAS. Rejected (VersionMismatch) when the entry version differs
  /// from the data pointer version the caller observed.
  Task<AcquireOutcome> acquire_delete(ClientContext& ctx, LockId lock, std::uint8_t expected_version);
  /// Variant that learns the version from the entry itself and retries on
  /// interference. Returns the version it replaced.
  Task<AcquireOutcome> acquire_delete(ClientContext& ctx, LockId lock);

  Task<void> release(ClientContext& ctx, LockId lock);
  Task<void> bump_epoch(ClientContext& ctx, LockId lock);

  Task<EpochVerdict> watch_epoch(ClientContext& ctx, LockId lock, EpochWatch& watch);
  /// Reports a stalled lock to the memory node. The node resets the tail and
  /// bumps the epoch only if the epoch still equals `observed_epoch`.
  Task<void> repair(ClientContext& ctx, LockId lock, Word observed_epoch);

  /// Raw queue episode used by the write-combining layer: returns as soon as
  /// the caller owns the lock or its node's Locked field becomes non-zero.
  Task<Grant> enqueue(ClientContext& ctx, LockId lock, std::uint8_t expected_version, bool delete_bump);

  /// Memory-node side of repair(); exposed for tests.
  bool handle_repair(LockId lock, Word observed_epoch);

  LockEntry peek(LockId lock) const;

 private:
  std::uint64_t window_ticks(const ClientContext& ctx) const;
  Task<bool> await_handover(ClientContext& ctx, LockId lock, LockNode& node, EpochWatch& watch);

  MemoryPool& pool_;
  Fabric& fabric_;
  LockTable table_;
  LockConfig config_;
  ProtocolObserver* observer_ = nullptr;
};

}  // namespace dmsync
