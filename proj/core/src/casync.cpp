#include "dmsync/casync.hpp"

#include <stdexcept>

namespace dmsync {

void SyncParams::validate() const {
  if (aimd_factor < 2) throw std::invalid_argument("aimd_factor must be >= 2");
  if (ledger_capacity == 0) throw std::invalid_argument("ledger_capacity must be > 0");
}

SyncMode CreditCell::decide() {
  if (credit > 0) {
    --credit;
    return SyncMode::Pessimistic;
  }
  return SyncMode::Optimistic;
}

void CreditCell::after_pessimistic(std::uint64_t batch_size, const SyncParams& p) {
  if (batch_size > 1)
    credit += 2;
  else
    credit /= p.aimd_factor;
}

void CreditCell::after_optimistic(std::uint64_t n_retry, const SyncParams& p) {
  if (n_retry >= p.hotness_threshold && retry_record >= p.hotness_threshold) credit += p.initial_credit;
  retry_record = n_retry;
}

// ---------------------------------------------------------------------------

CreditLedger::CreditLedger(SyncParams params) : params_(params) { params_.validate(); }

CreditLedger::Entry& CreditLedger::touch(std::uint64_t ptr) {
  auto it = map_.find(ptr);
  if (it != map_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.lru);
    return it->second;
  }
  lru_.push_front(ptr);
  Entry& e = map_[ptr];
  e.lru = lru_.begin();
  if (map_.size() > params_.ledger_capacity) evict();
  return e;
}

void CreditLedger::evict() {
  // Only cold entries (no credit, low retry record) may go; a bounded scan
  // from the LRU end keeps this O(1) amortized.
  int budget = 64;
  for (auto it = std::prev(lru_.end()); budget-- > 0; --it) {
    auto m = map_.find(*it);
    if (m->second.cell.credit == 0 && m->second.cell.retry_record < params_.hotness_threshold &&
        it != lru_.begin()) {
      map_.erase(m);
      lru_.erase(it);
      return;
    }
    if (it == lru_.begin()) return;
  }
}

SyncMode CreditLedger::decide_mode(std::uint64_t ptr) {
  std::lock_guard lock(mu_);
  auto it = map_.find(ptr);
  if (it == map_.end()) return SyncMode::Optimistic;  // absent == credit 0
  lru_.splice(lru_.begin(), lru_, it->second.lru);
  return it->second.cell.decide();
}

void CreditLedger::after_pessimistic(std::uint64_t ptr, std::uint64_t batch_size) {
  std::lock_guard lock(mu_);
  touch(ptr).cell.after_pessimistic(batch_size, params_);
}

void CreditLedger::after_optimistic(std::uint64_t ptr, std::uint64_t n_retry) {
  std::lock_guard lock(mu_);
  auto it = map_.find(ptr);
  if (it == map_.end() && n_retry < params_.hotness_threshold) return;  // would be evictable at once
  touch(ptr).cell.after_optimistic(n_retry, params_);
}

CreditCell CreditLedger::cell(std::uint64_t ptr) const {
  std::lock_guard lock(mu_);
  auto it = map_.find(ptr);
  return it == map_.end() ? CreditCell{} : it->second.cell;
}

void CreditLedger::set_cell(std::uint64_t ptr, CreditCell c) {
  std::lock_guard lock(mu_);
  touch(ptr).cell = c;
}

std::size_t CreditLedger::size() const {
  std::lock_guard lock(mu_);
  return map_.size();
}

// ---------------------------------------------------------------------------

LocalWcTable::Slot& LocalWcTable::slot(std::uint64_t ptr) {
  auto& p = slots_[ptr];
  if (!p) p = std::make_unique<Slot>();
  return *p;
}

Task<LocalWcTable::Ticket> LocalWcTable::enter(ClientContext& ctx, std::uint64_t ptr, const std::string& value) {
  for (;;) {
    Slot* s = nullptr;
    Ticket t;
    bool joined = false;
    {
      std::lock_guard lock(mu_);
      s = &slot(ptr);
      const auto state = s->state.load(std::memory_order_acquire);
      if (state == Idle) {
        s->buffer = value;
        s->joiners = 0;
        t.combiner = true;
        t.generation = s->generation.fetch_add(1, std::memory_order_acq_rel) + 1;
        s->state.store(Open, std::memory_order_release);
        co_return t;
      }
      if (state == Open) {
        s->buffer = value;
        ++s->joiners;
        t.generation = s->generation.load(std::memory_order_acquire);
        joined = true;
      }
    }
    if (joined) {
      const std::uint64_t gen = t.generation;
      co_await ctx.wait_until([s, gen] { return s->published.load(std::memory_order_acquire) >= gen; });
      const std::uint16_t code = s->results[gen % s->results.size()].load(std::memory_order_acquire);
      t.retry = code == kRetry;
      if (!t.retry) t.result = static_cast<ResultCode>(code);
      co_return t;
    }
    co_await ctx.wait_until([s] { return s->state.load(std::memory_order_acquire) != Closed; });
  }
}

std::string LocalWcTable::take(std::uint64_t ptr) {
  std::lock_guard lock(mu_);
  Slot& s = slot(ptr);
  s.state.store(Closed, std::memory_order_release);
  return s.buffer;
}

std::uint32_t LocalWcTable::exit(std::uint64_t ptr, std::optional<ResultCode> result) {
  std::lock_guard lock(mu_);
  Slot& s = slot(ptr);
  const std::uint64_t gen = s.generation.load(std::memory_order_acquire);
  s.results[gen % s.results.size()].store(result ? static_cast<std::uint16_t>(*result) : kRetry,
                                          std::memory_order_release);
  s.published.store(gen, std::memory_order_release);
  s.state.store(Idle, std::memory_order_release);
  const std::uint32_t n = result ? s.joiners : 0;
  s.joiners = 0;
  s.buffer.clear();
  return n;
}

}  // namespace dmsync
