#pragma once

// Simulated memory node: byte-addressable regions reached only through
// one-sided verbs (read, write, cas, masked cas, fetch-and-add).

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmsync {

using Word = std::uint64_t;

class PoolError : public std::runtime_error {
 public:
  enum class Kind { Allocation, Fault };
  PoolError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Address {
  std::uint32_t region = 0;  // 0 is never a valid region
  std::uint64_t offset = 0;

  Address operator+(std::uint64_t delta) const { return {region, offset + delta}; }
  friend bool operator==(const Address&, const Address&) = default;
  friend auto operator<=>(const Address&, const Address&) = default;

  // 60-bit packed form used inside data pointers: region in the high 20 bits.
  static constexpr unsigned kOffsetBits = 40;
  static constexpr unsigned kRegionBits = 20;
  std::uint64_t pack() const;
  static Address unpack(std::uint64_t packed);
};

enum class VerbKind : std::uint8_t { Read, Write, Cas, MaskedCas, Faa };

const char* to_string(VerbKind kind);

/// Per-run verb accounting. Totals never decrease while a pool is alive.
struct VerbCounters {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t cas = 0;
  std::uint64_t masked_cas = 0;
  std::uint64_t faa = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;

  std::uint64_t total() const { return reads + writes + cas + masked_cas + faa; }
  VerbCounters operator-(const VerbCounters& rhs) const;
  friend bool operator==(const VerbCounters&, const VerbCounters&) = default;
};

/// What a region holds; lets taps and tests attribute verbs without
/// knowing the layout of every region.
enum class RegionTag : std::uint8_t { Other, Index, Locks, Kv };

struct VerbEvent {
  VerbKind kind;
  Address addr;
  std::size_t length;
  RegionTag tag;
  bool succeeded;  // for cas / masked cas: the swap took effect
};

/// Fixed nanoseconds charged per verb class; zero disables injection.
struct VerbLatency {
  std::chrono::nanoseconds read{0};
  std::chrono::nanoseconds write{0};
  std::chrono::nanoseconds atomic{0};
};

struct PoolOptions {
  std::uint64_t capacity_bytes = std::uint64_t{8} << 30;
  VerbLatency latency{};
};

class MemoryPool {
 public:
  explicit MemoryPool(PoolOptions options = {});
  ~MemoryPool();
  MemoryPool(const MemoryPool&) = delete;
  MemoryPool& operator=(const MemoryPool&) = delete;

  /// Zero-initialized region of at least `size` bytes (rounded up to words).
  Address alloc_region(std::uint64_t size, RegionTag tag = RegionTag::Other);
  std::uint64_t region_size(std::uint32_t region) const;
  RegionTag region_tag(std::uint32_t region) const;

  // One-sided verbs. Every call counts as exactly one verb.
  void read(Address addr, std::span<std::byte> out);
  std::vector<std::byte> read(Address addr, std::size_t len);
  void write(Address addr, std::span<const std::byte> data);
  Word read_word(Address addr);
  void write_word(Address addr, Word value);
  Word cas(Address addr, Word expect, Word swap);
  Word masked_cas(Address addr, Word compare, Word compare_mask, Word swap, Word swap_mask);
  Word faa(Address addr, std::int64_t delta);

  VerbCounters stats() const;
  VerbCounters stats(RegionTag tag) const;

  /// Observer invoked after every verb; meant for tests and tracing.
  using VerbTap = std::function<void(const VerbEvent&)>;
  void set_tap(VerbTap tap);

  // Memory-node-local access: used by node-side handlers (lock repair) and
  // bulk loading. Not counted as verbs.
  Word local_load(Address addr) const;
  void local_store(Address addr, Word value);
  bool local_cas(Address addr, Word& expect, Word swap);
  void local_write(Address addr, std::span<const std::byte> data);

 private:
  struct Region {
    std::unique_ptr<std::atomic<Word>[]> words;
    std::uint64_t size = 0;
    RegionTag tag = RegionTag::Other;
  };

  struct Counters {
    std::atomic<std::uint64_t> reads{0}, writes{0}, cas{0}, masked_cas{0}, faa{0};
    std::atomic<std::uint64_t> bytes_read{0}, bytes_written{0};
    VerbCounters snapshot() const;
  };

  const Region& region_for(Address addr, std::size_t len, bool atomic) const;
  std::atomic<Word>& word_at(Address addr) const;
  void account(VerbKind kind, Address addr, std::size_t len, RegionTag tag, bool ok);
  void charge_latency(VerbKind kind) const;
  void copy_out(const Region& r, std::uint64_t offset, std::span<std::byte> out) const;
  void copy_in(const Region& r, std::uint64_t offset, std::span<const std::byte> data);

  static constexpr std::uint32_t kChunkRegions = 1024;
  static constexpr std::uint32_t kMaxChunks = 128;

  PoolOptions options_;
  mutable std::mutex regions_mu_;
  // Regions are appended under regions_mu_ and never removed, so lookups
  // walk the chunk table without taking the lock.
  std::atomic<Region*> chunks_[kMaxChunks] = {};
  std::atomic<std::uint32_t> region_count_{0};
  std::uint64_t allocated_bytes_ = 0;
  Counters total_;
  Counters by_tag_[4];
  VerbTap tap_;
};

/// Per-client bump arena for out-of-place KV blocks. Never frees.
class KvArena {
 public:
  KvArena() = default;
  KvArena(MemoryPool& pool, std::uint64_t capacity);

  /// Fresh 8-byte-aligned range; never overlaps any earlier allocation.
  Address kv_alloc(std::uint64_t len);
  std::uint64_t used() const { return next_; }
  std::uint64_t capacity() const { return capacity_; }

 private:
  Address base_{};
  std::uint64_t capacity_ = 0;
  std::uint64_t next_ = 0;
};

}  // namespace dmsync
