#pragma once

// Compute-side fabric: client identities, client-local MCS lock nodes that
// peers may write into, and per-kind accounting of cross-node messages.

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dmsync {

class FabricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Globally unique client identity. Zero is the null / empty-next sentinel,
/// and the id must fit the 16-bit Coordinator field of a lock node.
struct ClientId {
  std::uint16_t value = 0;

  constexpr ClientId() = default;
  constexpr explicit ClientId(std::uint16_t v) : value(v) {}
  constexpr bool valid() const { return value != 0; }
  friend constexpr auto operator<=>(ClientId, ClientId) = default;
};

inline constexpr ClientId kNoClient{};

using NodeIndex = std::uint16_t;

struct LockId {
  std::uint64_t value = 0;
  friend constexpr auto operator<=>(LockId, LockId) = default;
};

namespace locked {
inline constexpr std::uint32_t kWaiting = 0;
inline constexpr std::uint32_t kOwner = 1;
inline constexpr std::uint32_t kCombined = 0x3;
}  // namespace locked

/// Client-local per-lock record. Fields are written by the owning client and
/// by peers (through Fabric::write_peer_field), each at field granularity.
struct LockNode {
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint16_t> coordinator{0};
  std::atomic<std::uint16_t> result{0};
  // Receiver's 1-based position in a combined batch; rides with the result wave.
  std::atomic<std::uint16_t> batch{0};
  std::atomic<std::uint32_t> locked{locked::kWaiting};
  // Owner-private: epoch observed when this episode enqueued. Never written by peers.
  std::uint64_t epoch_seen = 0;

  void reset() {
    next.store(0, std::memory_order_relaxed);
    coordinator.store(0, std::memory_order_relaxed);
    result.store(0, std::memory_order_relaxed);
    batch.store(0, std::memory_order_relaxed);
    locked.store(locked::kWaiting, std::memory_order_release);
  }
};

enum class Field : std::uint8_t { Next, Coordinator, Result, Batch, Locked };

enum class MessageKind : std::uint8_t {
  Link,        // successor announces itself in predecessor's Next
  Handover,    // plain MCS ownership transfer (Locked := 1)
  WcNotify,    // coordinator -> executor: Coordinator + Locked := 1
  WcHandback,  // executor -> coordinator: Result + Locked := 1
  WcWave,      // combined result propagated down the queue (Locked := 0x3)
  Control,     // client -> memory node control channel (lock repair)
};
inline constexpr std::size_t kMessageKinds = 6;

const char* to_string(MessageKind kind);

struct FieldWrite {
  Field field = Field::Locked;
  std::uint64_t value = 0;
};

/// One message into a peer's lock node. Locked is always applied last so a
/// poller that observes the new Locked value also observes the other fields.
struct PeerWrite {
  ClientId sender;
  ClientId target;
  LockId lock;
  MessageKind kind = MessageKind::Handover;
  std::array<FieldWrite, 4> fields{};
  std::uint8_t count = 0;

  PeerWrite& set(Field field, std::uint64_t value) {
    if (count == fields.size()) throw FabricError("PeerWrite: too many fields");
    fields[count++] = {field, value};
    return *this;
  }
};

struct MessageCounters {
  std::array<std::uint64_t, kMessageKinds> by_kind{};

  std::uint64_t operator[](MessageKind k) const { return by_kind[static_cast<std::size_t>(k)]; }
  std::uint64_t total() const;
  MessageCounters operator-(const MessageCounters& rhs) const;
};

class Fabric {
 public:
  Fabric() = default;
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  /// Registration is not thread-safe against concurrent protocol traffic;
  /// register every client before starting a run.
  ClientId register_client(NodeIndex node, std::uint16_t thread);
  NodeIndex node_of(ClientId id) const;
  std::size_t client_count() const { return clients_.size(); }
  std::vector<ClientId> clients() const;

  /// The caller's own node for `lock`, created on first use.
  LockNode& lock_node(ClientId owner, LockId lock);
  LockNode* find_lock_node(ClientId owner, LockId lock) const;

  void write_peer_field(const PeerWrite& w);
  std::uint64_t poll_field(ClientId self, LockId lock, Field field);

  /// Counts a message on the memory-node control channel.
  void count_control() { counters_[static_cast<std::size_t>(MessageKind::Control)].fetch_add(1); }

  MessageCounters messages() const;

  using MessageTap = std::function<void(const PeerWrite&)>;
  void set_tap(MessageTap tap) { tap_ = std::move(tap); }

 private:
  struct NodeTable {
    mutable std::mutex mu;
    std::unordered_map<std::uint64_t, std::unique_ptr<LockNode>> nodes;
  };
  struct ClientInfo {
    NodeIndex node;
    std::uint16_t thread;
    std::unique_ptr<NodeTable> table;
  };

  const ClientInfo& info(ClientId id) const;

  std::vector<ClientInfo> clients_;
  std::set<std::pair<NodeIndex, std::uint16_t>> slots_;
  std::array<std::atomic<std::uint64_t>, kMessageKinds> counters_{};
  MessageTap tap_;
};

void apply_field(LockNode& node, Field field, std::uint64_t value);
std::uint64_t load_field(const LockNode& node, Field field);

}  // namespace dmsync

template <>
struct std::hash<dmsync::ClientId> {
  std::size_t operator()(dmsync::ClientId c) const noexcept { return c.value; }
};
