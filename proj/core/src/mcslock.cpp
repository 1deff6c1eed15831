#include "dmsync/mcslock.hpp"

namespace dmsync {

const char* to_string(WcRole role) {
  switch (role) {
    case WcRole::Coordinator: return "coordinator";
    case WcRole::Executor: return "executor";
    case WcRole::Participant: return "participant";
    case WcRole::Solo: return "solo";
  }
  return "?";
}

LockTable::LockTable(MemoryPool& pool, std::size_t count)
    : base_(pool.alloc_region(count * 16, RegionTag::Locks)), count_(count) {}

McsLock::McsLock(MemoryPool& pool, Fabric& fabric, const LockTable& table, LockConfig config)
    : pool_(pool), fabric_(fabric), table_(table), config_(config) {}

std::uint64_t McsLock::window_ticks(const ClientContext& ctx) const {
  if (config_.watch_window_steps == 0) return 0;
  return ctx.ticks(config_.watch_window_steps, config_.watch_window_wall);
}

LockEntry McsLock::peek(LockId lock) const {
  const Word w = pool_.local_load(table_.entry(lock));
  return {lock_word::tail(w), lock_word::version(w), pool_.local_load(table_.epoch(lock))};
}

Task<Grant> McsLock::enqueue(ClientContext& ctx, LockId lock, std::uint8_t expected_version, bool delete_bump) {
  LockNode& node = fabric_.lock_node(ctx.id(), lock);
  for (;;) {
    node.reset();
    EpochWatch watch;
    if (config_.watch_window_steps > 0) {
      co_await ctx.step("epoch_read");
      watch.observed = pool_.read_word(table_.epoch(lock));
      watch.active = true;
    }
    node.epoch_seen = watch.observed;

    Word swap = lock_word::pack(ctx.id(), expected_version);
    Word swap_mask = lock_word::kTailMask;
    if (delete_bump) {
      if (!config_.skip_delete_version_bump) swap = lock_word::pack(ctx.id(), lock_word::next_version(expected_version));
      swap_mask = ~Word{0};
    }
    co_await ctx.step(delete_bump ? "delete_enqueue" : "enqueue");
    const Word prior = pool_.masked_cas(table_.entry(lock), expected_version, lock_word::kVersionMask, swap, swap_mask);

    Grant grant;
    grant.version = lock_word::version(prior);
    if (grant.version != expected_version) {
      grant.kind = Grant::Kind::Mismatch;
      co_return grant;
    }
    grant.predecessor = lock_word::tail(prior);
    if (observer_) observer_->on_enqueue(lock, ctx.id(), grant.predecessor);

    if (!grant.predecessor.valid()) {
      node.locked.store(locked::kOwner, std::memory_order_release);
      grant.kind = Grant::Kind::Free;
      if (observer_) observer_->on_owner(lock, ctx.id());
      co_return grant;
    }

    co_await ctx.step("link");
    fabric_.write_peer_field(
        PeerWrite{ctx.id(), grant.predecessor, lock, MessageKind::Link}.set(Field::Next, ctx.id().value));

    const bool granted = co_await await_handover(ctx, lock, node, watch);
    if (!granted) continue;  // queue repaired under us: start a fresh episode

    grant.kind = Grant::Kind::Handover;
    grant.locked = node.locked.load(std::memory_order_acquire);
    grant.coordinator = ClientId(node.coordinator.load(std::memory_order_acquire));
    grant.result = node.result.load(std::memory_order_acquire);
    grant.batch = node.batch.load(std::memory_order_acquire);
    if (grant.locked == locked::kOwner && !grant.coordinator.valid() && observer_) observer_->on_owner(lock, ctx.id());
    co_return grant;
  }
}

Task<bool> McsLock::await_handover(ClientContext& ctx, LockId lock, LockNode& node, EpochWatch& watch) {
  const std::uint64_t window = watch.active ? window_ticks(ctx) : 0;
  for (;;) {
    const bool handed =
        co_await ctx.wait_until([&node] { return node.locked.load(std::memory_order_acquire) != 0; }, window);
    if (handed) co_return true;
    const EpochVerdict verdict = co_await watch_epoch(ctx, lock, watch);
    if (verdict == EpochVerdict::Progress) {
      if (observer_) observer_->on_progress(lock, ctx.id());
      continue;
    }
    if (observer_) observer_->on_stalled(lock, ctx.id());
    if (!watch.repaired_elsewhere) co_await repair(ctx, lock, watch.observed);
    co_return false;
  }
}

Task<EpochVerdict> McsLock::watch_epoch(ClientContext& ctx, LockId lock, EpochWatch& watch) {
  co_await ctx.step("epoch_watch");
  const Word epoch = pool_.read_word(table_.epoch(lock));
  if (epoch_word::repairs(epoch) != epoch_word::repairs(watch.observed)) {
    watch.repaired_elsewhere = true;
    co_return EpochVerdict::Stalled;
  }
  if (epoch != watch.observed) {
    watch.observed = epoch;
    co_return EpochVerdict::Progress;
  }
  co_return EpochVerdict::Stalled;
}

Task<void> McsLock::repair(ClientContext& ctx, LockId lock, Word observed_epoch) {
  co_await ctx.step("repair");
  fabric_.count_control();
  const bool applied = handle_repair(lock, observed_epoch);
  if (observer_) observer_->on_repair(lock, ctx.id(), applied);
}

bool McsLock::handle_repair(LockId lock, Word observed_epoch) {
  if (pool_.local_load(table_.epoch(lock)) != observed_epoch) return false;
  Word w = pool_.local_load(table_.entry(lock));
  while (!pool_.local_cas(table_.entry(lock), w, w & lock_word::kVersionMask)) {
  }
  Word e = pool_.local_load(table_.epoch(lock));
  while (!pool_.local_cas(table_.epoch(lock), e, e + epoch_word::kRepair)) {
  }
  return true;
}

Task<AcquireOutcome> McsLock::acquire(ClientContext& ctx, LockId lock, std::uint8_t expected_version) {
  const Grant g = co_await enqueue(ctx, lock, expected_version, false);
  AcquireOutcome out;
  out.version = g.version;
  if (g.kind == Grant::Kind::Mismatch) {
    out.kind = AcquireKind::VersionMismatch;
  } else if (g.locked == locked::kCombined) {
    out.kind = AcquireKind::Combined;
    out.result = g.result;
  } else {
    out.kind = AcquireKind::Owner;
  }
  co_return out;
}

Task<AcquireOutcome> McsLock::acquire_delete(ClientContext& ctx, LockId lock, std::uint8_t expected_version) {
  const Grant g = co_await enqueue(ctx, lock, expected_version, true);
  AcquireOutcome out;
  out.version = g.version;
  out.kind = g.kind == Grant::Kind::Mismatch ? AcquireKind::VersionMismatch : AcquireKind::Owner;
  co_return out;
}

Task<AcquireOutcome> McsLock::acquire_delete(ClientContext& ctx, LockId lock) {
  co_await ctx.step("entry_read");
  std::uint8_t observed = lock_word::version(pool_.read_word(table_.entry(lock)));
  for (;;) {
    const Grant g = co_await enqueue(ctx, lock, observed, true);
    if (g.kind != Grant::Kind::Mismatch) co_return AcquireOutcome{AcquireKind::Owner, 0, observed};
    observed = g.version;
  }
}

Task<void> McsLock::release(ClientContext& ctx, LockId lock) {
  LockNode& node = fabric_.lock_node(ctx.id(), lock);
  node.locked.store(locked::kWaiting, std::memory_order_release);
  if (observer_) observer_->on_release(lock, ctx.id());
  std::uint64_t next = node.next.load(std::memory_order_acquire);
  if (next == 0) {
    co_await ctx.step("release_cas");
    const Word prior = pool_.masked_cas(table_.entry(lock), lock_word::pack(ctx.id(), 0), lock_word::kTailMask, 0,
                                        lock_word::kTailMask);
    const ClientId tail = lock_word::tail(prior);
    if (tail == ctx.id()) co_return;
    if (!tail.valid()) co_return;  // repaired while we held it
    // A successor swapped itself in but has not linked yet.
    const std::uint64_t window = window_ticks(ctx);
    for (;;) {
      const bool linked =
          co_await ctx.wait_until([&node] { return node.next.load(std::memory_order_acquire) != 0; }, window);
      if (linked) break;
      // The tail may belong to an episode that started after a repair.
      co_await ctx.step("epoch_watch");
      if (epoch_word::repairs(pool_.read_word(table_.epoch(lock))) != epoch_word::repairs(node.epoch_seen)) co_return;
    }
    next = node.next.load(std::memory_order_acquire);
  }
  co_await ctx.step("handover");
  fabric_.write_peer_field(PeerWrite{ctx.id(), ClientId(static_cast<std::uint16_t>(next)), lock, MessageKind::Handover}
                               .set(Field::Locked, locked::kOwner));
}

Task<void> McsLock::bump_epoch(ClientContext& ctx, LockId lock) {
  co_await ctx.step("epoch_faa");
  pool_.faa(table_.epoch(lock), static_cast<std::int64_t>(epoch_word::kRelease));
}

}  // namespace dmsync
