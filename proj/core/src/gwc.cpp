#include "dmsync/gwc.hpp"

namespace dmsync {

const char* to_string(ResultCode code) {
  switch (code) {
    case ResultCode::Ok: return "ok";
    case ResultCode::Invalid: return "invalid";
    case ResultCode::Fenced: return "fenced";
  }
  return "?";
}

Task<WcOutcome> GlobalWc::try_lock_and_wc(ClientContext& ctx, LockId lock, std::uint8_t expected_version,
                                          bool delete_bump) {
  const Grant g = co_await mcs_.enqueue(ctx, lock, expected_version, delete_bump);
  WcOutcome out;
  out.version = g.version;
  if (g.kind == Grant::Kind::Mismatch) {
    out.decision = WcDecision::VersionMismatch;
    co_return out;
  }
  LockNode& node = fabric_.lock_node(ctx.id(), lock);
  out.handed_over = g.kind == Grant::Kind::Handover;

  if (g.locked == locked::kCombined) {
    out.decision = WcDecision::Combined;
    out.role = WcRole::Participant;
    out.result = static_cast<ResultCode>(g.result);
    out.batch = g.batch;
    if (observer_) observer_->on_batch_member(lock, ctx.id(), WcRole::Participant, g.batch);
    co_await forward_wave(ctx, lock, node, out.result, g.batch);
    co_return out;
  }

  if (g.coordinator.valid()) {
    out.decision = WcDecision::ExecutorGo;
    out.role = WcRole::Executor;
    out.coordinator = g.coordinator;
    co_return out;
  }

  if (node.next.load(std::memory_order_acquire) == 0) {
    out.role = WcRole::Solo;
    co_return out;
  }
  co_return co_await coordinate(ctx, lock, node, out);
}

Task<WcOutcome> GlobalWc::coordinate(ClientContext& ctx, LockId lock, LockNode& node, WcOutcome out) {
  co_await ctx.step("wc_entry_read");
  const ClientId executor = lock_word::tail(pool_.read_word(mcs_.table().entry(lock)));
  if (observer_) {
    observer_->on_batch_open(lock, ctx.id(), executor);
    observer_->on_batch_member(lock, ctx.id(), WcRole::Coordinator, 1);
  }

  node.locked.store(locked::kWaiting, std::memory_order_release);
  co_await ctx.step("wc_notify");
  fabric_.write_peer_field(PeerWrite{ctx.id(), executor, lock, MessageKind::WcNotify}
                               .set(Field::Coordinator, ctx.id().value)
                               .set(Field::Locked, locked::kOwner));

  co_await ctx.wait_until([&node] { return node.locked.load(std::memory_order_acquire) != 0; });
  out.decision = WcDecision::Combined;
  out.role = WcRole::Coordinator;
  out.result = static_cast<ResultCode>(node.result.load(std::memory_order_acquire));
  out.batch = 2;
  co_await forward_wave(ctx, lock, node, out.result, 1);
  co_return out;
}

Task<void> GlobalWc::forward_wave(ClientContext& ctx, LockId lock, LockNode& node, ResultCode result,
                                  std::uint16_t position) {
  // The executor sits behind us, so a successor always links eventually.
  co_await ctx.wait_until([&node] { return node.next.load(std::memory_order_acquire) != 0; });
  const auto next = ClientId(static_cast<std::uint16_t>(node.next.load(std::memory_order_acquire)));
  co_await ctx.step("wc_wave");
  fabric_.write_peer_field(PeerWrite{ctx.id(), next, lock, MessageKind::WcWave}
                               .set(Field::Result, static_cast<std::uint16_t>(result))
                               .set(Field::Batch, position + 1u)
                               .set(Field::Locked, locked::kCombined));
}

Task<void> GlobalWc::executor_handback(ClientContext& ctx, LockId lock, ClientId coordinator, ResultCode result) {
  LockNode& node = fabric_.lock_node(ctx.id(), lock);
  // Cleared first so the wave that follows the handback is unambiguous.
  node.locked.store(locked::kWaiting, std::memory_order_release);
  co_await ctx.step("wc_handback");
  fabric_.write_peer_field(PeerWrite{ctx.id(), coordinator, lock, MessageKind::WcHandback}
                               .set(Field::Result, static_cast<std::uint16_t>(result))
                               .set(Field::Locked, locked::kOwner));
}

Task<std::uint16_t> GlobalWc::batch_final_release(ClientContext& ctx, LockId lock, const WcOutcome& outcome) {
  std::uint16_t size = 1;
  if (outcome.role == WcRole::Executor) {
    LockNode& node = fabric_.lock_node(ctx.id(), lock);
    co_await ctx.wait_until([&node] { return node.locked.load(std::memory_order_acquire) == locked::kCombined; });
    size = node.batch.load(std::memory_order_acquire);
    if (observer_) {
      observer_->on_batch_member(lock, ctx.id(), WcRole::Executor, size);
      observer_->on_batch_close(lock, ctx.id(), size, node.result.load(std::memory_order_acquire));
    }
  }
  co_await mcs_.release(ctx, lock);
  if (mcs_.config().bump_epoch_on_release) co_await mcs_.bump_epoch(ctx, lock);
  co_return size;
}

}  // namespace dmsync
