#pragma once

// Pointer-array KV store: slot i holds the data pointer of key i, and each
// slot has one MCS lock entry. SEARCH and INSERT never lock; UPDATE and
// DELETE synchronize according to the store's mode.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmsync/casync.hpp"
#include "dmsync/fabric.hpp"
#include "dmsync/gwc.hpp"
#include "dmsync/mcslock.hpp"
#include "dmsync/mempool.hpp"
#include "dmsync/observer.hpp"
#include "dmsync/schedule.hpp"
#include "dmsync/task.hpp"

namespace dmsync {

/// 60-bit packed block address in bits 63..4, version in bits 3..0.
namespace data_ptr {
inline constexpr Word kVersionMask = 0xF;
inline Word pack(Address block, std::uint8_t version) { return (block.pack() << 4) | (version & kVersionMask); }
constexpr Word pack_raw(std::uint64_t block, std::uint8_t version) { return (block << 4) | (version & kVersionMask); }
constexpr std::uint64_t block(Word w) { return w >> 4; }
constexpr std::uint8_t version(Word w) { return static_cast<std::uint8_t>(w & kVersionMask); }
constexpr bool present(Word w) { return block(w) != 0; }
inline Address address(Word w) { return Address::unpack(block(w)); }
}  // namespace data_ptr

/// Block layout: key (8) | value length (8) | value padded to the capacity.
namespace kv_block {
std::size_t size(std::size_t value_capacity);
std::vector<std::byte> encode(std::uint64_t key, std::string_view value, std::size_t value_capacity);
struct Decoded {
  std::uint64_t key = 0;
  std::string value;
};
Decoded decode(std::span<const std::byte> bytes);
}  // namespace kv_block

enum class ModeName : std::uint8_t { OSync, CasBackoff, Mcs, Cider };

struct Mode {
  ModeName name = ModeName::Cider;
  bool local_wc = false;
  friend bool operator==(const Mode&, const Mode&) = default;
};

const char* to_string(ModeName m);
std::optional<ModeName> parse_mode(std::string_view s);

enum class OpKind : std::uint8_t { Search, Insert, Update, Delete };
inline constexpr std::size_t kOpKinds = 4;
const char* to_string(OpKind k);

enum class OpStatus : std::uint8_t { Ok, Invalid, Fenced };
const char* to_string(OpStatus s);

/// How an UPDATE finished.
enum class UpdatePath : std::uint8_t {
  None,
  Optimistic,      // lock-free CAS path (osync, cider optimistic)
  Locked,          // plain lock owner (cas_backoff, mcs)
  Solo,            // cider pessimistic owner with an empty queue
  Executor,        // cider executor of a combined batch
  GlobalCombined,  // cider coordinator or participant
  LocalCombined,   // adopted a same-node combiner's result
};

struct OpResult {
  OpKind kind = OpKind::Search;  // what actually ran (an upsert may INSERT)
  OpStatus status = OpStatus::Ok;
  std::string value;  // SEARCH only
  std::uint32_t retries = 0;
  UpdatePath path = UpdatePath::None;
  bool pessimistic = false;
  std::uint16_t batch = 0;

  bool ok() const { return status == OpStatus::Ok; }
  /// What a caller sees: a fence is an invalid operation. Fenced is kept
  /// apart only for metrics.
  OpStatus surfaced() const { return status == OpStatus::Fenced ? OpStatus::Invalid : status; }
};

struct StoreOptions {
  std::uint64_t key_count = 1'000'000;
  Mode mode{};
  SyncParams sync{};
  LockConfig lock{};
  std::size_t value_capacity = 8;
  std::uint64_t arena_chunk_bytes = std::uint64_t{1} << 20;
  /// Optimistic retries write a fresh block each attempt instead of reusing one.
  bool rewrite_on_retry = false;
  // Truncated exponential backoff for cas_backoff, in steps and in wall time.
  std::uint64_t backoff_base_steps = 4;
  std::uint64_t backoff_cap_steps = 1024;
  std::chrono::nanoseconds backoff_base_wall = std::chrono::microseconds(1);
  std::chrono::nanoseconds backoff_cap_wall = std::chrono::microseconds(256);
  /// Re-reads of the data pointer while a conflicting DELETE is in flight.
  std::uint32_t confirm_attempts = 64;

  void validate() const;
};

struct ClientStats {
  std::array<std::uint64_t, kOpKinds> issued{}, ok{}, invalid{}, fenced{};
  std::uint64_t pessimistic = 0;         // cider pessimistic decisions
  std::uint64_t optimistic = 0;          // updates that took the CAS path
  std::uint64_t optimistic_hot = 0;      // ... with retries >= hotness threshold
  std::uint64_t cas_failures = 0;        // failed data-pointer CAS verbs
  std::map<std::uint32_t, std::uint64_t> retry_histogram;
  std::uint64_t combined_local = 0;
  std::uint64_t combined_global = 0;
  std::uint64_t executed_solo = 0;       // committed updates executed alone
  std::uint64_t executed_executor = 0;   // committed updates executed for a batch
  std::uint64_t batches = 0;             // closed by this client as executor
  std::uint64_t batch_members = 0;
  std::uint64_t batch_max = 0;

  void merge(const ClientStats& o);
};

class Store {
 public:
  Store(MemoryPool& pool, Fabric& fabric, StoreOptions options);
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Registers a client's arena, stats slot and (once per node) its node-shared state.
  void attach_client(ClientId id, NodeIndex node);

  /// Inserts `fraction` of the keys with node-local (uncounted) writes.
  void prefill(double fraction, std::uint64_t seed = 1);
  void load(std::uint64_t key, std::string_view value);

  Task<OpResult> search(ClientContext& ctx, std::uint64_t key);
  Task<OpResult> insert(ClientContext& ctx, std::uint64_t key, std::string value);
  Task<OpResult> update(ClientContext& ctx, std::uint64_t key, std::string value);
  Task<OpResult> remove(ClientContext& ctx, std::uint64_t key);
  /// UPDATE if the key exists, INSERT otherwise.
  Task<OpResult> upsert(ClientContext& ctx, std::uint64_t key, std::string value);

  void set_observer(ProtocolObserver* obs);

  const StoreOptions& options() const { return options_; }
  Address pointer_address(std::uint64_t key) const { return ptr_base_ + key * 8; }
  Word peek_pointer(std::uint64_t key) const;
  std::optional<std::string> peek_value(std::uint64_t key) const;
  /// Value of the block a pointer word references (node-local read).
  std::optional<std::string> value_at(Word w) const;
  LockEntry peek_lock(std::uint64_t key) const { return mcs_->peek(LockId{key}); }

  ClientStats& stats(ClientId id);
  ClientStats merged_stats() const;
  CreditLedger& ledger(NodeIndex node);
  McsLock& mcs() { return *mcs_; }
  const LockTable& locks() const { return locks_; }

 private:
  struct ClientState {
    NodeIndex node = 0;
    std::vector<KvArena> arenas;
    ClientStats stats;
  };
  struct NodeState {
    std::unique_ptr<CreditLedger> ledger;
    std::unique_ptr<LocalWcTable> wc;
  };

  ClientState& client(ClientId id);
  NodeState& node_state(NodeIndex n);
  Address alloc_block(ClientId id);
  Task<Address> write_block(ClientContext& ctx, std::uint64_t key, const std::string& value);
  void check_key(std::uint64_t key) const;

  Task<OpResult> update_impl(ClientContext& ctx, std::uint64_t key, const std::string& value);
  Task<OpResult> update_body(ClientContext& ctx, std::uint64_t key, const std::string& value);
  Task<OpResult> settle_mismatch_update(ClientContext& ctx, std::uint64_t key, std::uint8_t expected);
  Task<OpResult> update_optimistic(ClientContext& ctx, std::uint64_t key, const std::string& value, Word w);
  Task<OpResult> commit_locked(ClientContext& ctx, std::uint64_t key, const std::string& value, Word w, bool fresh);
  Task<OpResult> commit_delete(ClientContext& ctx, std::uint64_t key, Word w, bool fresh);
  /// After a version mismatch: waits for the conflicting DELETE to publish.
  /// Returns the settled pointer word, or nullopt if it never moved.
  Task<std::optional<Word>> confirm_fenced(ClientContext& ctx, std::uint64_t key, std::uint8_t expected);
  std::uint64_t backoff_ticks(ClientContext& ctx, std::uint32_t attempt) const;
  Task<bool> spin_acquire(ClientContext& ctx, std::uint64_t key, std::uint8_t version, bool delete_bump);
  Task<void> spin_release(ClientContext& ctx, std::uint64_t key, std::uint8_t version);

  void note_commit(std::uint64_t key, Word old_word, Word new_word, ClientId who);
  void record(ClientId id, OpKind kind, OpResult& r);

  MemoryPool& pool_;
  Fabric& fabric_;
  StoreOptions options_;
  Address ptr_base_{};
  LockTable locks_;
  std::unique_ptr<McsLock> mcs_;
  std::unique_ptr<GlobalWc> gwc_;
  std::vector<std::unique_ptr<ClientState>> clients_;  // indexed by ClientId value
  std::vector<std::unique_ptr<NodeState>> nodes_;
  ProtocolObserver* observer_ = nullptr;
  KvArena loader_;
};

/// Total pool verbs per committed operation.
double verbs_per_committed_op(const VerbCounters& verbs, std::uint64_t committed);

}  // namespace dmsync
