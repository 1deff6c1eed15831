#pragma once

#include <cstdint>

#include "dmsync/fabric.hpp"

namespace dmsync {

enum class WcRole : std::uint8_t { Coordinator, Executor, Participant, Solo };

const char* to_string(WcRole role);

/// Protocol trace hooks. All callbacks run inside the step that caused the
/// event; default implementations ignore everything.
class ProtocolObserver {
 public:
  virtual ~ProtocolObserver() = default;

  // Lock queue.
  virtual void on_enqueue(LockId, ClientId /*client*/, ClientId /*predecessor*/) {}
  virtual void on_owner(LockId, ClientId) {}
  virtual void on_release(LockId, ClientId) {}
  virtual void on_progress(LockId, ClientId) {}  // epoch moved during a watch window
  virtual void on_stalled(LockId, ClientId) {}
  virtual void on_repair(LockId, ClientId /*reporter*/, bool /*applied*/) {}

  // Global write combining.
  virtual void on_batch_open(LockId, ClientId /*coordinator*/, ClientId /*executor*/) {}
  virtual void on_batch_member(LockId, ClientId, WcRole, std::uint16_t /*position*/) {}
  virtual void on_batch_close(LockId, ClientId /*executor*/, std::uint16_t /*size*/, std::uint16_t /*result*/) {}

  // Data pointer.
  virtual void on_pointer_commit(std::uint64_t /*key*/, std::uint64_t /*old_word*/, std::uint64_t /*new_word*/,
                                 ClientId) {}
};

}  // namespace dmsync
