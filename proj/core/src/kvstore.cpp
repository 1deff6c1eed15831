#include "dmsync/kvstore.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <random>
#include <stdexcept>

namespace dmsync {

namespace kv_block {

std::size_t size(std::size_t value_capacity) { return 16 + ((value_capacity + 7) / 8) * 8; }

std::vector<std::byte> encode(std::uint64_t key, std::string_view value, std::size_t value_capacity) {
  if (value.size() > value_capacity) throw std::invalid_argument("value exceeds block capacity");
  std::vector<std::byte> out(size(value_capacity));
  const std::uint64_t len = value.size();
  std::memcpy(out.data(), &key, 8);
  std::memcpy(out.data() + 8, &len, 8);
  std::memcpy(out.data() + 16, value.data(), value.size());
  return out;
}

Decoded decode(std::span<const std::byte> bytes) {
  if (bytes.size() < 16) throw std::invalid_argument("short block");
  Decoded d;
  std::uint64_t len = 0;
  std::memcpy(&d.key, bytes.data(), 8);
  std::memcpy(&len, bytes.data() + 8, 8);
  if (len > bytes.size() - 16) throw std::invalid_argument("corrupt block length");
  d.value.assign(reinterpret_cast<const char*>(bytes.data()) + 16, len);
  return d;
}

}  // namespace kv_block

const char* to_string(ModeName m) {
  switch (m) {
    case ModeName::OSync: return "osync";
    case ModeName::CasBackoff: return "cas_backoff";
    case ModeName::Mcs: return "mcs";
    case ModeName::Cider: return "cider";
  }
  return "?";
}

std::optional<ModeName> parse_mode(std::string_view s) {
  for (auto m : {ModeName::OSync, ModeName::CasBackoff, ModeName::Mcs, ModeName::Cider})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Search: return "search";
    case OpKind::Insert: return "insert";
    case OpKind::Update: return "update";
    case OpKind::Delete: return "delete";
  }
  return "?";
}

const char* to_string(OpStatus s) {
  switch (s) {
    case OpStatus::Ok: return "ok";
    case OpStatus::Invalid: return "invalid";
    case OpStatus::Fenced: return "fenced";
  }
  return "?";
}

namespace {

ResultCode code_of(OpStatus s) {
  switch (s) {
    case OpStatus::Ok: return ResultCode::Ok;
    case OpStatus::Invalid: return ResultCode::Invalid;
    case OpStatus::Fenced: return ResultCode::Fenced;
  }
  return ResultCode::Invalid;
}

OpStatus status_of(ResultCode c) {
  switch (c) {
    case ResultCode::Ok: return OpStatus::Ok;
    case ResultCode::Fenced: return OpStatus::Fenced;
    default: return OpStatus::Invalid;
  }
}

OpResult result_of(OpStatus s) {
  OpResult r;
  r.status = s;
  return r;
}

}  // namespace

void StoreOptions::validate() const {
  if (key_count == 0) throw std::invalid_argument("key_count must be >= 1");
  if (value_capacity == 0) throw std::invalid_argument("value_capacity must be >= 1");
  if (arena_chunk_bytes < kv_block::size(value_capacity)) throw std::invalid_argument("arena chunk too small");
  if (backoff_base_steps == 0 || backoff_cap_steps < backoff_base_steps)
    throw std::invalid_argument("bad backoff bounds");
  sync.validate();
}

void ClientStats::merge(const ClientStats& o) {
  for (std::size_t i = 0; i < kOpKinds; ++i) {
    issued[i] += o.issued[i];
    ok[i] += o.ok[i];
    invalid[i] += o.invalid[i];
    fenced[i] += o.fenced[i];
  }
  pessimistic += o.pessimistic;
  optimistic += o.optimistic;
  optimistic_hot += o.optimistic_hot;
  cas_failures += o.cas_failures;
  for (const auto& [k, v] : o.retry_histogram) retry_histogram[k] += v;
  combined_local += o.combined_local;
  combined_global += o.combined_global;
  executed_solo += o.executed_solo;
  executed_executor += o.executed_executor;
  batches += o.batches;
  batch_members += o.batch_members;
  batch_max = std::max(batch_max, o.batch_max);
}

double verbs_per_committed_op(const VerbCounters& verbs, std::uint64_t committed) {
  if (committed == 0) throw std::invalid_argument("verbs_per_committed_op: nothing committed");
  return static_cast<double>(verbs.total()) / static_cast<double>(committed);
}

// ---------------------------------------------------------------------------

Store::Store(MemoryPool& pool, Fabric& fabric, StoreOptions options)
    : pool_(pool), fabric_(fabric), options_(std::move(options)) {
  options_.validate();
  ptr_base_ = pool_.alloc_region(options_.key_count * 8, RegionTag::Index);
  locks_ = LockTable(pool_, options_.key_count);
  mcs_ = std::make_unique<McsLock>(pool_, fabric_, locks_, options_.lock);
  gwc_ = std::make_unique<GlobalWc>(*mcs_, fabric_, pool_);
}

void Store::attach_client(ClientId id, NodeIndex node) {
  if (!id.valid()) throw std::invalid_argument("attach_client: null client");
  if (clients_.size() <= id.value) clients_.resize(id.value + 1);
  if (clients_[id.value]) throw std::logic_error("attach_client: client already attached");
  auto st = std::make_unique<ClientState>();
  st->node = node;
  clients_[id.value] = std::move(st);
  node_state(node);
}

Store::ClientState& Store::client(ClientId id) {
  if (id.value >= clients_.size() || !clients_[id.value]) throw std::logic_error("client not attached to store");
  return *clients_[id.value];
}

Store::NodeState& Store::node_state(NodeIndex n) {
  if (nodes_.size() <= n) nodes_.resize(n + 1);
  if (!nodes_[n]) {
    auto ns = std::make_unique<NodeState>();
    ns->ledger = std::make_unique<CreditLedger>(options_.sync);
    ns->wc = std::make_unique<LocalWcTable>();
    nodes_[n] = std::move(ns);
  }
  return *nodes_[n];
}

ClientStats& Store::stats(ClientId id) { return client(id).stats; }

ClientStats Store::merged_stats() const {
  ClientStats all;
  for (const auto& c : clients_)
    if (c) all.merge(c->stats);
  return all;
}

CreditLedger& Store::ledger(NodeIndex node) { return *node_state(node).ledger; }

void Store::set_observer(ProtocolObserver* obs) {
  observer_ = obs;
  mcs_->set_observer(obs);
  gwc_->set_observer(obs);
}

void Store::check_key(std::uint64_t key) const {
  if (key >= options_.key_count) throw std::out_of_range("key out of range");
}

Address Store::alloc_block(ClientId id) {
  auto& arenas = client(id).arenas;
  const std::uint64_t len = kv_block::size(options_.value_capacity);
  if (arenas.empty() || arenas.back().used() + len > arenas.back().capacity())
    arenas.emplace_back(pool_, options_.arena_chunk_bytes);
  return arenas.back().kv_alloc(len);
}

Task<Address> Store::write_block(ClientContext& ctx, std::uint64_t key, const std::string& value) {
  std::string payload = options_.mode.local_wc ? node_state(ctx.node()).wc->take(key) : value;
  const Address blk = alloc_block(ctx.id());
  const auto bytes = kv_block::encode(key, payload, options_.value_capacity);
  co_await ctx.step("kv_write");
  pool_.write(blk, bytes);
  co_return blk;
}

void Store::load(std::uint64_t key, std::string_view value) {
  check_key(key);
  const std::uint64_t len = kv_block::size(options_.value_capacity);
  if (loader_.capacity() == 0 || loader_.used() + len > loader_.capacity())
    loader_ = KvArena(pool_, std::max<std::uint64_t>(options_.arena_chunk_bytes, std::uint64_t{16} << 20));
  const Address blk = loader_.kv_alloc(len);
  pool_.local_write(blk, kv_block::encode(key, value, options_.value_capacity));
  const Word old = pool_.local_load(pointer_address(key));
  pool_.local_store(pointer_address(key), data_ptr::pack(blk, data_ptr::version(old)));
}

void Store::prefill(double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("prefill fraction must be in [0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick(fraction);
  for (std::uint64_t k = 0; k < options_.key_count; ++k) {
    if (fraction >= 1.0 || (fraction > 0.0 && pick(rng))) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "p%07llx", static_cast<unsigned long long>(k & 0xFFFFFFF));
      std::string v(buf);
      v.resize(std::min(v.size(), options_.value_capacity));
      load(k, v);
    }
  }
}

Word Store::peek_pointer(std::uint64_t key) const {
  check_key(key);
  return pool_.local_load(pointer_address(key));
}

std::optional<std::string> Store::peek_value(std::uint64_t key) const { return value_at(peek_pointer(key)); }

std::optional<std::string> Store::value_at(Word w) const {
  if (!data_ptr::present(w)) return std::nullopt;
  const Address blk = data_ptr::address(w);
  std::vector<std::byte> bytes(kv_block::size(options_.value_capacity));
  for (std::size_t i = 0; i < bytes.size(); i += 8) {
    const Word word = pool_.local_load(blk + i);
    std::memcpy(bytes.data() + i, &word, 8);
  }
  return kv_block::decode(bytes).value;
}

void Store::note_commit(std::uint64_t key, Word old_word, Word new_word, ClientId who) {
  if (observer_) observer_->on_pointer_commit(key, old_word, new_word, who);
}

std::uint64_t Store::backoff_ticks(ClientContext& ctx, std::uint32_t attempt) const {
  const unsigned shift = std::min<std::uint32_t>(attempt, 30);
  std::uint64_t hi;
  if (ctx.deterministic()) {
    hi = std::min(options_.backoff_cap_steps, options_.backoff_base_steps << shift);
  } else {
    const auto base = static_cast<std::uint64_t>(options_.backoff_base_wall.count());
    const auto cap = static_cast<std::uint64_t>(options_.backoff_cap_wall.count());
    hi = std::min(cap, base << shift);
  }
  std::uniform_int_distribution<std::uint64_t> d(1, std::max<std::uint64_t>(hi, 1));
  return d(ctx.rng());
}

// ---------------------------------------------------------------------------
// SEARCH / INSERT

Task<OpResult> Store::search(ClientContext& ctx, std::uint64_t key) {
  check_key(key);
  OpResult r;
  co_await ctx.step("ptr_read");
  const Word w = pool_.read_word(pointer_address(key));
  if (!data_ptr::present(w)) {
    r.status = OpStatus::Invalid;
  } else {
    std::vector<std::byte> bytes(kv_block::size(options_.value_capacity));
    co_await ctx.step("kv_read");
    pool_.read(data_ptr::address(w), bytes);
    r.value = kv_block::decode(bytes).value;
  }
  record(ctx.id(), OpKind::Search, r);
  co_return r;
}

Task<OpResult> Store::insert(ClientContext& ctx, std::uint64_t key, std::string value) {
  check_key(key);
  OpResult r;
  co_await ctx.step("ptr_read");
  Word w = pool_.read_word(pointer_address(key));
  if (data_ptr::present(w)) {
    r.status = OpStatus::Invalid;
    record(ctx.id(), OpKind::Insert, r);
    co_return r;
  }
  const Address blk = alloc_block(ctx.id());
  const auto bytes = kv_block::encode(key, value, options_.value_capacity);
  co_await ctx.step("kv_write");
  pool_.write(blk, bytes);
  for (;;) {
    const Word desired = data_ptr::pack(blk, data_ptr::version(w));
    co_await ctx.step("ptr_cas");
    const Word prior = pool_.cas(pointer_address(key), w, desired);
    if (prior == w) {
      note_commit(key, w, desired, ctx.id());
      break;
    }
    ++r.retries;
    if (data_ptr::present(prior)) {
      r.status = OpStatus::Invalid;
      break;
    }
    w = prior;  // still empty, but a DELETE moved the version on
  }
  record(ctx.id(), OpKind::Insert, r);
  co_return r;
}

Task<OpResult> Store::upsert(ClientContext& ctx, std::uint64_t key, std::string value) {
  check_key(key);
  // The UPDATE's own first read doubles as the presence probe.
  OpResult r = co_await update_impl(ctx, key, value);
  if (r.status == OpStatus::Invalid && r.path == UpdatePath::None) co_return co_await insert(ctx, key, std::move(value));
  record(ctx.id(), OpKind::Update, r);
  co_return r;
}

// ---------------------------------------------------------------------------
// UPDATE

Task<OpResult> Store::update(ClientContext& ctx, std::uint64_t key, std::string value) {
  check_key(key);
  OpResult r = co_await update_impl(ctx, key, value);
  record(ctx.id(), OpKind::Update, r);
  co_return r;
}

Task<OpResult> Store::update_impl(ClientContext& ctx, std::uint64_t key, const std::string& value) {
  if (!options_.mode.local_wc) co_return co_await update_body(ctx, key, value);
  LocalWcTable& wc = *node_state(ctx.node()).wc;
  for (;;) {
    const LocalWcTable::Ticket t = co_await wc.enter(ctx, key, value);
    if (t.retry) continue;
    if (!t.combiner) {
      OpResult r = result_of(status_of(t.result));
      r.path = UpdatePath::LocalCombined;
      co_return r;
    }
    OpResult r = co_await update_body(ctx, key, value);
    // A joiner may adopt only a commit that followed the window's close; a
    // failure, or a global batch's commit, may precede the join.
    const bool adoptable = r.ok() && r.path != UpdatePath::GlobalCombined;
    wc.exit(key, adoptable ? std::optional<ResultCode>(code_of(r.status)) : std::nullopt);
    co_return r;
  }
}

Task<OpResult> Store::update_body(ClientContext& ctx, std::uint64_t key, const std::string& value) {
  co_await ctx.step("ptr_read");
  const Word w = pool_.read_word(pointer_address(key));
  if (!data_ptr::present(w)) co_return result_of(OpStatus::Invalid);
  const std::uint8_t v = data_ptr::version(w);
  const LockId lock{key};
  OpResult r;

  switch (options_.mode.name) {
    case ModeName::OSync:
      co_return co_await update_optimistic(ctx, key, value, w);

    case ModeName::CasBackoff: {
      const bool got = co_await spin_acquire(ctx, key, v, false);
      if (!got) break;
      r = co_await commit_locked(ctx, key, value, w, false);
      r.path = UpdatePath::Locked;
      co_await spin_release(ctx, key, v);
      co_return r;
    }

    case ModeName::Mcs: {
      const Grant g = co_await mcs_->enqueue(ctx, lock, v, false);
      if (g.kind == Grant::Kind::Mismatch) break;
      r = co_await commit_locked(ctx, key, value, w, g.kind == Grant::Kind::Free);
      r.path = UpdatePath::Locked;
      co_await mcs_->release(ctx, lock);
      if (mcs_->config().bump_epoch_on_release) co_await mcs_->bump_epoch(ctx, lock);
      co_return r;
    }

    case ModeName::Cider: {
      CreditLedger& ledger = *node_state(ctx.node()).ledger;
      if (ledger.decide_mode(key) == SyncMode::Optimistic) {
        r = co_await update_optimistic(ctx, key, value, w);
        if (r.ok()) ledger.after_optimistic(key, r.retries);
        co_return r;
      }
      const WcOutcome o = co_await gwc_->try_lock_and_wc(ctx, lock, v);
      if (o.decision == WcDecision::VersionMismatch) {
        r = co_await settle_mismatch_update(ctx, key, v);
        r.pessimistic = true;
        co_return r;
      }
      if (o.decision == WcDecision::Combined) {
        r.status = status_of(o.result);
        r.path = UpdatePath::GlobalCombined;
        r.batch = o.batch;
      } else {
        r = co_await commit_locked(ctx, key, value, w, !o.handed_over);
        if (o.role == WcRole::Executor) co_await gwc_->executor_handback(ctx, lock, o.coordinator, code_of(r.status));
        r.batch = co_await gwc_->batch_final_release(ctx, lock, o);
        r.path = o.role == WcRole::Executor ? UpdatePath::Executor : UpdatePath::Solo;
      }
      r.pessimistic = true;
      ledger.after_pessimistic(key, r.batch);
      co_return r;
    }
  }
  co_return co_await settle_mismatch_update(ctx, key, v);
}

Task<OpResult> Store::settle_mismatch_update(ClientContext& ctx, std::uint64_t key, std::uint8_t expected) {
  // A DELETE bumped the lock version. Report the fence only once the DELETE
  // has published, so the failure linearizes after it.
  co_await confirm_fenced(ctx, key, expected);
  co_return result_of(OpStatus::Fenced);
}

Task<OpResult> Store::update_optimistic(ClientContext& ctx, std::uint64_t key, const std::string& value, Word w) {
  OpResult r;
  r.path = UpdatePath::Optimistic;
  const std::uint8_t v = data_ptr::version(w);
  Address blk = co_await write_block(ctx, key, value);
  for (;;) {
    const Word desired = data_ptr::pack(blk, v);
    co_await ctx.step("ptr_cas");
    const Word prior = pool_.cas(pointer_address(key), w, desired);
    if (prior == w) {
      note_commit(key, w, desired, ctx.id());
      co_return r;
    }
    ++r.retries;
    if (!data_ptr::present(prior)) {
      r.status = OpStatus::Invalid;
      co_return r;
    }
    if (data_ptr::version(prior) != v) {
      r.status = OpStatus::Fenced;
      co_return r;
    }
    w = prior;
    if (options_.rewrite_on_retry) blk = co_await write_block(ctx, key, value);
  }
}

Task<OpResult> Store::commit_locked(ClientContext& ctx, std::uint64_t key, const std::string& value, Word w,
                                    bool fresh) {
  if (!fresh) {
    co_await ctx.step("ptr_reread");
    w = pool_.read_word(pointer_address(key));
    if (!data_ptr::present(w)) co_return result_of(OpStatus::Invalid);
  }
  // Optimistic writers of other modes may still move the pointer, so the
  // owner keeps CAS semantics rather than a blind write.
  co_return co_await update_optimistic(ctx, key, value, w);
}

Task<std::optional<Word>> Store::confirm_fenced(ClientContext& ctx, std::uint64_t key, std::uint8_t expected) {
  for (std::uint32_t i = 0; i < options_.confirm_attempts; ++i) {
    if (i > 0) co_await ctx.sleep(backoff_ticks(ctx, i));
    co_await ctx.step("ptr_confirm");
    const Word w = pool_.read_word(pointer_address(key));
    if (data_ptr::version(w) != expected) co_return w;
  }
  co_return std::nullopt;
}

// ---------------------------------------------------------------------------
// DELETE

Task<OpResult> Store::remove(ClientContext& ctx, std::uint64_t key) {
  check_key(key);
  OpResult r;
  co_await ctx.step("ptr_read");
  Word w = pool_.read_word(pointer_address(key));
  if (!data_ptr::present(w)) {
    r.status = OpStatus::Invalid;
    record(ctx.id(), OpKind::Delete, r);
    co_return r;
  }
  const std::uint8_t v = data_ptr::version(w);
  const LockId lock{key};
  bool mismatch = false;

  switch (options_.mode.name) {
    case ModeName::OSync:
      for (;;) {
        const Word desired = data_ptr::pack_raw(0, lock_word::next_version(data_ptr::version(w)));
        co_await ctx.step("ptr_cas");
        const Word prior = pool_.cas(pointer_address(key), w, desired);
        if (prior == w) {
          note_commit(key, w, desired, ctx.id());
          break;
        }
        ++r.retries;
        if (!data_ptr::present(prior)) {
          r.status = OpStatus::Invalid;
          break;
        }
        w = prior;
      }
      break;

    case ModeName::CasBackoff: {
      const bool got = co_await spin_acquire(ctx, key, v, true);
      if (!got) {
        mismatch = true;
        break;
      }
      r = co_await commit_delete(ctx, key, w, false);
      co_await spin_release(ctx, key, lock_word::next_version(v));
      break;
    }

    case ModeName::Mcs: {
      const Grant g = co_await mcs_->enqueue(ctx, lock, v, true);
      if (g.kind == Grant::Kind::Mismatch) {
        mismatch = true;
        break;
      }
      r = co_await commit_delete(ctx, key, w, g.kind == Grant::Kind::Free);
      co_await mcs_->release(ctx, lock);
      if (mcs_->config().bump_epoch_on_release) co_await mcs_->bump_epoch(ctx, lock);
      break;
    }

    case ModeName::Cider: {
      const WcOutcome o = co_await gwc_->try_lock_and_wc(ctx, lock, v, true);
      if (o.decision == WcDecision::VersionMismatch) {
        mismatch = true;
        break;
      }
      if (o.decision == WcDecision::Combined) {
        // Only reachable when DELETE enqueues without bumping the version.
        r.status = status_of(o.result);
        r.path = UpdatePath::GlobalCombined;
        break;
      }
      r = co_await commit_delete(ctx, key, w, !o.handed_over);
      if (o.role == WcRole::Executor) co_await gwc_->executor_handback(ctx, lock, o.coordinator, code_of(r.status));
      r.batch = co_await gwc_->batch_final_release(ctx, lock, o);
      r.path = o.role == WcRole::Executor ? UpdatePath::Executor : UpdatePath::Solo;
      break;
    }
  }

  if (mismatch) {
    // Another DELETE got there first; wait for it to publish.
    co_await confirm_fenced(ctx, key, v);
    r.status = OpStatus::Invalid;
  }
  record(ctx.id(), OpKind::Delete, r);
  co_return r;
}

Task<OpResult> Store::commit_delete(ClientContext& ctx, std::uint64_t key, Word w, bool fresh) {
  OpResult r;
  if (!fresh) {
    co_await ctx.step("ptr_reread");
    w = pool_.read_word(pointer_address(key));
  }
  for (;;) {
    if (!data_ptr::present(w)) {
      r.status = OpStatus::Invalid;
      co_return r;
    }
    const Word desired = data_ptr::pack_raw(0, lock_word::next_version(data_ptr::version(w)));
    co_await ctx.step("ptr_cas");
    const Word prior = pool_.cas(pointer_address(key), w, desired);
    if (prior == w) {
      note_commit(key, w, desired, ctx.id());
      co_return r;
    }
    ++r.retries;
    w = prior;
  }
}

// ---------------------------------------------------------------------------
// CAS spinlock baseline

Task<bool> Store::spin_acquire(ClientContext& ctx, std::uint64_t key, std::uint8_t version, bool delete_bump) {
  const Address entry = locks_.entry(LockId{key});
  const Word free = lock_word::pack(kNoClient, version);
  const Word mine = lock_word::pack(ctx.id(), delete_bump ? lock_word::next_version(version) : version);
  for (std::uint32_t attempt = 0;; ++attempt) {
    co_await ctx.step("lock_cas");
    const Word prior = pool_.cas(entry, free, mine);
    if (prior == free) co_return true;
    if (lock_word::version(prior) != version) co_return false;
    co_await ctx.sleep(backoff_ticks(ctx, attempt));
  }
}

Task<void> Store::spin_release(ClientContext& ctx, std::uint64_t key, std::uint8_t version) {
  co_await ctx.step("lock_release");
  pool_.write_word(locks_.entry(LockId{key}), lock_word::pack(kNoClient, version));
}

// ---------------------------------------------------------------------------

void Store::record(ClientId id, OpKind kind, OpResult& r) {
  r.kind = kind;
  ClientStats& s = client(id).stats;
  const auto k = static_cast<std::size_t>(kind);
  ++s.issued[k];
  switch (r.status) {
    case OpStatus::Ok: ++s.ok[k]; break;
    case OpStatus::Invalid: ++s.invalid[k]; break;
    case OpStatus::Fenced: ++s.fenced[k]; break;
  }
  s.cas_failures += r.retries;
  if (kind != OpKind::Update && kind != OpKind::Delete) return;

  if (kind == OpKind::Update) {
    if (r.pessimistic) ++s.pessimistic;
    if (r.path == UpdatePath::Optimistic) {
      ++s.optimistic;
      ++s.retry_histogram[r.retries];
      if (r.retries >= options_.sync.hotness_threshold) ++s.optimistic_hot;
    }
  }
  if (r.path == UpdatePath::Solo || r.path == UpdatePath::Executor) {
    ++s.batches;
    s.batch_members += r.batch;
    s.batch_max = std::max<std::uint64_t>(s.batch_max, r.batch);
  }
  if (kind == OpKind::Update && r.ok()) {
    switch (r.path) {
      case UpdatePath::LocalCombined: ++s.combined_local; break;
      case UpdatePath::GlobalCombined: ++s.combined_global; break;
      case UpdatePath::Executor: ++s.executed_executor; break;
      default: ++s.executed_solo; break;
    }
  }
}

}  // namespace dmsync
