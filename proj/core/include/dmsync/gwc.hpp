#pragma once

// Global write combining over the MCS queue.
//
// The first lock holder (coordinator) reads the lock entry to find the queue
// tail (executor) and shuttles the lock to it. The executor performs the one
// real update, hands the result back, and the coordinator sends it down the
// queue with Locked = 0x3. Clients in between never touch the pool.

#include <cstdint>

#include "dmsync/fabric.hpp"
#include "dmsync/mcslock.hpp"
#include "dmsync/observer.hpp"
#include "dmsync/schedule.hpp"
#include "dmsync/task.hpp"

namespace dmsync {

enum class ResultCode : std::uint16_t { Ok = 0, Invalid = 1, Fenced = 2 };

const char* to_string(ResultCode code);

enum class WcDecision : std::uint8_t { ExecutorGo, Combined, VersionMismatch };

struct WcOutcome {
  WcDecision decision = WcDecision::ExecutorGo;
  WcRole role = WcRole::Solo;
  ResultCode result = ResultCode::Ok;
  /// Solo: 1. Coordinator and participants: a lower bound from the wave
  /// position (always >= 2). Executor: exact size, set by batch_final_release.
  std::uint16_t batch = 1;
  ClientId coordinator;
  /// Ownership came from a peer; pointer words read before enqueue may be stale.
  bool handed_over = false;
  std::uint8_t version = 0;
};

class GlobalWc {
 public:
  GlobalWc(McsLock& mcs, Fabric& fabric, MemoryPool& pool) : mcs_(mcs), fabric_(fabric), pool_(pool) {}

  void set_observer(ProtocolObserver* obs) { observer_ = obs; }
  McsLock& lock() { return mcs_; }

  /// Enqueue and play whatever role the queue assigns. With `delete_bump`
  /// the enqueue also bumps the entry version; a DELETE may still end up as
  /// the executor of the updates queued ahead of it.
  Task<WcOutcome> try_lock_and_wc(ClientContext& ctx, LockId lock, std::uint8_t expected_version,
                                  bool delete_bump = false);

  Task<void> executor_handback(ClientContext& ctx, LockId lock, ClientId coordinator, ResultCode result);

  /// Solo owners release at once. Executors first wait for the result wave,
  /// which tells them the batch size. Bumps the epoch once. Returns the size.
  Task<std::uint16_t> batch_final_release(ClientContext& ctx, LockId lock, const WcOutcome& outcome);

 private:
  Task<WcOutcome> coordinate(ClientContext& ctx, LockId lock, LockNode& node, WcOutcome out);
  Task<void> forward_wave(ClientContext& ctx, LockId lock, LockNode& node, ResultCode result, std::uint16_t position);

  McsLock& mcs_;
  Fabric& fabric_;
  MemoryPool& pool_;
  ProtocolObserver* observer_ = nullptr;
};

}  // namespace dmsync
