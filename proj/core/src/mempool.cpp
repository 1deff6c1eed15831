#include "dmsync/mempool.hpp"

#include <algorithm>
#include <cstring>
#include <thread>

namespace dmsync {

namespace {

constexpr std::uint64_t kWord = sizeof(Word);

std::uint64_t round_up_words(std::uint64_t size) { return (size + kWord - 1) / kWord; }

}  // namespace

std::uint64_t Address::pack() const {
  return (std::uint64_t{region} << kOffsetBits) | (offset & ((std::uint64_t{1} << kOffsetBits) - 1));
}

Address Address::unpack(std::uint64_t packed) {
  return {static_cast<std::uint32_t>(packed >> kOffsetBits),
          packed & ((std::uint64_t{1} << kOffsetBits) - 1)};
}

const char* to_string(VerbKind kind) {
  switch (kind) {
    case VerbKind::Read: return "read";
    case VerbKind::Write: return "write";
    case VerbKind::Cas: return "cas";
    case VerbKind::MaskedCas: return "masked_cas";
    case VerbKind::Faa: return "faa";
  }
  return "?";
}

VerbCounters VerbCounters::operator-(const VerbCounters& rhs) const {
  return {reads - rhs.reads,           writes - rhs.writes,
          cas - rhs.cas,               masked_cas - rhs.masked_cas,
          faa - rhs.faa,               bytes_read - rhs.bytes_read,
          bytes_written - rhs.bytes_written};
}

VerbCounters MemoryPool::Counters::snapshot() const {
  return {reads.load(std::memory_order_relaxed),      writes.load(std::memory_order_relaxed),
          cas.load(std::memory_order_relaxed),        masked_cas.load(std::memory_order_relaxed),
          faa.load(std::memory_order_relaxed),        bytes_read.load(std::memory_order_relaxed),
          bytes_written.load(std::memory_order_relaxed)};
}

MemoryPool::MemoryPool(PoolOptions options) : options_(options) {}

MemoryPool::~MemoryPool() {
  for (auto& chunk : chunks_) delete[] chunk.load();
}

Address MemoryPool::alloc_region(std::uint64_t size, RegionTag tag) {
  if (size == 0) throw PoolError(PoolError::Kind::Allocation, "alloc_region: size must be positive");
  if (size >= (std::uint64_t{1} << Address::kOffsetBits))
    throw PoolError(PoolError::Kind::Allocation, "alloc_region: region larger than addressable offset range");
  const std::uint64_t words = round_up_words(size);

  std::lock_guard lock(regions_mu_);
  if (allocated_bytes_ + words * kWord > options_.capacity_bytes)
    throw PoolError(PoolError::Kind::Allocation, "alloc_region: pool capacity exhausted");
  // Region ids start at 1 so a packed address is never zero.
  const std::uint32_t id = region_count_.load(std::memory_order_relaxed) + 1;
  const std::uint32_t chunk = id / kChunkRegions;
  if (chunk >= kMaxChunks) throw PoolError(PoolError::Kind::Allocation, "alloc_region: region table full");
  Region* table = chunks_[chunk].load(std::memory_order_acquire);
  if (table == nullptr) {
    table = new Region[kChunkRegions];
    chunks_[chunk].store(table, std::memory_order_release);
  }
  Region& r = table[id % kChunkRegions];
  r.words = std::make_unique<std::atomic<Word>[]>(words);  // value-initialized to zero
  r.size = words * kWord;
  r.tag = tag;
  allocated_bytes_ += r.size;
  region_count_.store(id, std::memory_order_release);
  return {id, 0};
}

std::uint64_t MemoryPool::region_size(std::uint32_t region) const {
  return region_for({region, 0}, 0, false).size;
}

RegionTag MemoryPool::region_tag(std::uint32_t region) const { return region_for({region, 0}, 0, false).tag; }

const MemoryPool::Region& MemoryPool::region_for(Address addr, std::size_t len, bool atomic) const {
  if (addr.region == 0 || addr.region > region_count_.load(std::memory_order_acquire))
    throw PoolError(PoolError::Kind::Fault, "verb on unknown region " + std::to_string(addr.region));
  const Region& r = chunks_[addr.region / kChunkRegions].load(std::memory_order_acquire)[addr.region % kChunkRegions];
  if (addr.offset > r.size || len > r.size - addr.offset)
    throw PoolError(PoolError::Kind::Fault, "verb out of bounds at region " + std::to_string(addr.region) +
                                                " offset " + std::to_string(addr.offset));
  if (atomic && addr.offset % kWord != 0)
    throw PoolError(PoolError::Kind::Fault, "atomic verb on misaligned address");
  return r;
}

std::atomic<Word>& MemoryPool::word_at(Address addr) const {
  const Region& r = region_for(addr, kWord, true);
  return r.words[addr.offset / kWord];
}

void MemoryPool::account(VerbKind kind, Address addr, std::size_t len, RegionTag tag, bool ok) {
  auto bump = [&](Counters& c) {
    switch (kind) {
      case VerbKind::Read:
        c.reads.fetch_add(1, std::memory_order_relaxed);
        c.bytes_read.fetch_add(len, std::memory_order_relaxed);
        break;
      case VerbKind::Write:
        c.writes.fetch_add(1, std::memory_order_relaxed);
        c.bytes_written.fetch_add(len, std::memory_order_relaxed);
        break;
      case VerbKind::Cas: c.cas.fetch_add(1, std::memory_order_relaxed); break;
      case VerbKind::MaskedCas: c.masked_cas.fetch_add(1, std::memory_order_relaxed); break;
      case VerbKind::Faa: c.faa.fetch_add(1, std::memory_order_relaxed); break;
    }
  };
  bump(total_);
  bump(by_tag_[static_cast<int>(tag)]);
  if (tap_) tap_(VerbEvent{kind, addr, len, tag, ok});
  charge_latency(kind);
}

void MemoryPool::charge_latency(VerbKind kind) const {
  std::chrono::nanoseconds d{0};
  switch (kind) {
    case VerbKind::Read: d = options_.latency.read; break;
    case VerbKind::Write: d = options_.latency.write; break;
    default: d = options_.latency.atomic; break;
  }
  if (d.count() <= 0) return;
  const auto until = std::chrono::steady_clock::now() + d;
  while (std::chrono::steady_clock::now() < until) std::this_thread::yield();
}

void MemoryPool::copy_out(const Region& r, std::uint64_t offset, std::span<std::byte> out) const {
  std::size_t done = 0;
  while (done < out.size()) {
    const std::uint64_t pos = offset + done;
    const std::uint64_t word_index = pos / kWord;
    const std::uint64_t in_word = pos % kWord;
    const std::size_t n = std::min<std::size_t>(kWord - in_word, out.size() - done);
    const Word w = r.words[word_index].load(std::memory_order_acquire);
    std::memcpy(out.data() + done, reinterpret_cast<const std::byte*>(&w) + in_word, n);
    done += n;
  }
}

void MemoryPool::copy_in(const Region& r, std::uint64_t offset, std::span<const std::byte> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const std::uint64_t pos = offset + done;
    const std::uint64_t word_index = pos / kWord;
    const std::uint64_t in_word = pos % kWord;
    const std::size_t n = std::min<std::size_t>(kWord - in_word, data.size() - done);
    auto& slot = r.words[word_index];
    if (n == kWord) {
      Word w;
      std::memcpy(&w, data.data() + done, kWord);
      slot.store(w, std::memory_order_release);
    } else {
      // Partial word: merge so the untouched bytes keep their value.
      Word prior = slot.load(std::memory_order_acquire);
      Word merged;
      do {
        merged = prior;
        std::memcpy(reinterpret_cast<std::byte*>(&merged) + in_word, data.data() + done, n);
      } while (!slot.compare_exchange_weak(prior, merged, std::memory_order_acq_rel));
    }
    done += n;
  }
}

void MemoryPool::read(Address addr, std::span<std::byte> out) {
  const Region& r = region_for(addr, out.size(), false);
  copy_out(r, addr.offset, out);
  account(VerbKind::Read, addr, out.size(), r.tag, true);
}

std::vector<std::byte> MemoryPool::read(Address addr, std::size_t len) {
  std::vector<std::byte> out(len);
  read(addr, std::span<std::byte>(out));
  return out;
}

void MemoryPool::write(Address addr, std::span<const std::byte> data) {
  const Region& r = region_for(addr, data.size(), false);
  copy_in(r, addr.offset, data);
  account(VerbKind::Write, addr, data.size(), r.tag, true);
}

Word MemoryPool::read_word(Address addr) {
  const Region& r = region_for(addr, kWord, true);
  const Word w = r.words[addr.offset / kWord].load(std::memory_order_acquire);
  account(VerbKind::Read, addr, kWord, r.tag, true);
  return w;
}

void MemoryPool::write_word(Address addr, Word value) {
  const Region& r = region_for(addr, kWord, true);
  r.words[addr.offset / kWord].store(value, std::memory_order_release);
  account(VerbKind::Write, addr, kWord, r.tag, true);
}

Word MemoryPool::cas(Address addr, Word expect, Word swap) {
  const Region& r = region_for(addr, kWord, true);
  Word prior = expect;
  const bool ok = r.words[addr.offset / kWord].compare_exchange_strong(prior, swap, std::memory_order_acq_rel);
  account(VerbKind::Cas, addr, kWord, r.tag, ok);
  return prior;
}

Word MemoryPool::masked_cas(Address addr, Word compare, Word compare_mask, Word swap, Word swap_mask) {
  const Region& r = region_for(addr, kWord, true);
  auto& slot = r.words[addr.offset / kWord];
  Word prior = slot.load(std::memory_order_acquire);
  bool ok = false;
  for (;;) {
    if ((prior & compare_mask) != (compare & compare_mask)) break;
    const Word next = (prior & ~swap_mask) | (swap & swap_mask);
    if (slot.compare_exchange_weak(prior, next, std::memory_order_acq_rel)) {
      ok = true;
      break;
    }
  }
  account(VerbKind::MaskedCas, addr, kWord, r.tag, ok);
  return prior;
}

Word MemoryPool::faa(Address addr, std::int64_t delta) {
  const Region& r = region_for(addr, kWord, true);
  const Word prior = r.words[addr.offset / kWord].fetch_add(static_cast<Word>(delta), std::memory_order_acq_rel);
  account(VerbKind::Faa, addr, kWord, r.tag, true);
  return prior;
}

VerbCounters MemoryPool::stats() const { return total_.snapshot(); }

VerbCounters MemoryPool::stats(RegionTag tag) const { return by_tag_[static_cast<int>(tag)].snapshot(); }

void MemoryPool::set_tap(VerbTap tap) { tap_ = std::move(tap); }

Word MemoryPool::local_load(Address addr) const { return word_at(addr).load(std::memory_order_acquire); }

void MemoryPool::local_store(Address addr, Word value) { word_at(addr).store(value, std::memory_order_release); }

bool MemoryPool::local_cas(Address addr, Word& expect, Word swap) {
  return word_at(addr).compare_exchange_strong(expect, swap, std::memory_order_acq_rel);
}

void MemoryPool::local_write(Address addr, std::span<const std::byte> data) {
  const Region& r = region_for(addr, data.size(), false);
  copy_in(r, addr.offset, data);
}

KvArena::KvArena(MemoryPool& pool, std::uint64_t capacity)
    : base_(pool.alloc_region(capacity, RegionTag::Kv)), capacity_(pool.region_size(base_.region)) {}

Address KvArena::kv_alloc(std::uint64_t len) {
  if (len == 0) throw PoolError(PoolError::Kind::Allocation, "kv_alloc: length must be positive");
  const std::uint64_t rounded = round_up_words(len) * kWord;
  if (base_.region == 0 || rounded > capacity_ - next_)
    throw PoolError(PoolError::Kind::Allocation, "kv_alloc: arena exhausted");
  const Address out = base_ + next_;
  next_ += rounded;
  return out;
}

}  // namespace dmsync
