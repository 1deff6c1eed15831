#include "dmsync/verify.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dmsync/bench.hpp"

namespace dmsync {

namespace {

struct ScriptOp {
  OpKind kind = OpKind::Search;
  std::uint64_t key = 0;
  std::string value;
};

// What a client is working on right now; read by observers.
struct Current {
  std::string value;
  std::size_t seq = 0;
};

struct Rig {
  MemoryPool pool;
  Fabric fabric;
  std::unique_ptr<Store> store;
  DeterministicScheduler rt;
  std::vector<ClientId> ids;
  std::vector<OpRecord> history;
  std::uint64_t clock = 0;
  std::map<ClientId, std::vector<OpResult>> results;
  std::map<ClientId, Current> current;
  std::map<NodeIndex, std::uint16_t> threads;

  Rig(const StoreOptions& so, const Schedule& s) : rt(s) { store = std::make_unique<Store>(pool, fabric, so); }

  ClientId add(NodeIndex node) {
    const ClientId id = fabric.register_client(node, threads[node]++);
    store->attach_client(id, node);
    rt.add_client(id, node);
    ids.push_back(id);
    return id;
  }
  ClientContext& ctx(ClientId id) { return rt.context(id); }
};

Task<OpResult> invoke(ClientContext& ctx, Store& store, const ScriptOp& op) {
  switch (op.kind) {
    case OpKind::Search: co_return co_await store.search(ctx, op.key);
    case OpKind::Insert: co_return co_await store.insert(ctx, op.key, op.value);
    case OpKind::Update: co_return co_await store.update(ctx, op.key, op.value);
    case OpKind::Delete: co_return co_await store.remove(ctx, op.key);
  }
  co_return OpResult{};
}

Task<void> play(ClientContext& ctx, Rig* rig, std::vector<ScriptOp> ops) {
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const ScriptOp& op = ops[i];
    rig->current[ctx.id()] = Current{op.value, i};
    const std::size_t idx = rig->history.size();
    OpRecord rec;
    rec.client = ctx.id();
    rec.op = op.kind;
    rec.key = op.key;
    rec.value = op.value;
    rec.t_inv = ++rig->clock;
    rig->history.push_back(rec);
    OpResult r = co_await invoke(ctx, *rig->store, op);
    OpRecord& done = rig->history[idx];
    done.t_res = ++rig->clock;
    done.result = r.status;
    if (op.kind == OpKind::Search) done.value = r.ok() ? r.value : std::string();
    rig->results[ctx.id()].push_back(std::move(r));
  }
}

void spawn(Rig& rig, ClientId id, std::vector<ScriptOp> ops) { rig.rt.spawn(id, play(rig.ctx(id), &rig, std::move(ops))); }

// Steps `id` until its next step carries `label`.
bool advance_to(Rig& rig, ClientId id, const char* label) {
  ClientContext& c = rig.ctx(id);
  for (int i = 0; i < 10'000; ++i) {
    if (rig.rt.finished(id)) return false;
    if (i > 0 && !c.blocked() && std::strcmp(c.label(), label) == 0) return true;
    if (!rig.rt.step_client(id)) return false;
  }
  return false;
}

std::string witness_text(const std::vector<OpRecord>& h, const LinearizabilityResult& v) {
  std::ostringstream os;
  os << "history:";
  for (const auto& r : h) os << "\n    " << describe(r);
  if (!v.witness.empty()) {
    os << "\n  unplaceable:";
    for (std::size_t i : v.witness) os << "\n    " << describe(h[i]);
  }
  return os.str();
}

std::string mode_label(Mode m) {
  std::string s = to_string(m.name);
  if (m.local_wc) s += "+local_wc";
  return s;
}

void credit_all(Rig& rig, std::uint64_t key, std::uint64_t credit) {
  std::map<NodeIndex, bool> seen;
  for (ClientId id : rig.ids) {
    const NodeIndex n = rig.fabric.node_of(id);
    if (seen[n]) continue;
    seen[n] = true;
    rig.store->ledger(n).set_cell(key, CreditCell{credit, 0});
  }
}

// Flags any pointer commit that keeps a block but changes its version: an
// UPDATE may only replace a block within the generation it read.
class GenerationGuard final : public ProtocolObserver {
 public:
  void on_pointer_commit(std::uint64_t, std::uint64_t old_word, std::uint64_t new_word, ClientId) override {
    if (data_ptr::present(old_word) && data_ptr::present(new_word) &&
        data_ptr::version(old_word) != data_ptr::version(new_word))
      ++violations;
  }
  std::uint64_t violations = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Linearizability of small random runs

SmallRun small_run(Mode mode, std::uint64_t seed, bool skip_version_bump) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + 17);
  auto pick = [&rng](std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); };
  const auto clients = static_cast<std::uint32_t>(2 + pick(3));
  const std::uint64_t keys = 1 + pick(3);
  const std::uint32_t per_client = std::min<std::uint32_t>(3, 12 / clients);

  StoreOptions so;
  so.key_count = keys;
  so.mode = mode;
  so.arena_chunk_bytes = 4096;
  so.lock.watch_window_steps *= clients;
  so.lock.skip_delete_version_bump = skip_version_bump;
  Schedule sched;
  sched.seed = seed;
  sched.policy = Policy::Random;
  Rig rig(so, sched);

  SmallRun out;
  out.mode = mode;
  out.seed = seed;
  for (std::uint64_t k = 0; k < keys; ++k) {
    if (pick(10) < 6) {
      const std::string v = "init" + std::to_string(k);
      rig.store->load(k, v);
      out.initial[k] = v;
    } else {
      out.initial[k] = std::nullopt;
    }
  }
  for (std::uint32_t i = 0; i < clients; ++i) rig.add(static_cast<NodeIndex>(i / 2));
  if (mode.name == ModeName::Cider) {
    static constexpr std::uint64_t kCredits[] = {0, 0, 2, 36};
    for (NodeIndex n = 0; n <= (clients - 1) / 2; ++n)
      for (std::uint64_t k = 0; k < keys; ++k) rig.store->ledger(n).set_cell(k, CreditCell{kCredits[pick(4)], 0});
  }
  for (std::uint32_t i = 0; i < clients; ++i) {
    std::vector<ScriptOp> ops;
    for (std::uint32_t j = 0; j < per_client; ++j) {
      ScriptOp op;
      const auto roll = pick(100);
      op.kind = roll < 25 ? OpKind::Search : roll < 45 ? OpKind::Insert : roll < 80 ? OpKind::Update : OpKind::Delete;
      op.key = pick(keys);
      if (op.kind == OpKind::Insert || op.kind == OpKind::Update) op.value = make_value(rig.ids[i], j);
      ops.push_back(std::move(op));
    }
    spawn(rig, rig.ids[i], std::move(ops));
  }
  out.status = rig.rt.run();
  out.history = rig.history;
  out.verdict = check_linearizable(out.history, out.initial);
  return out;
}

SuiteResult verify_linearizability(const VerifyOptions& o, std::optional<ModeName> only) {
  SuiteResult s;
  s.name = "linearizability";
  for (ModeName m : {ModeName::OSync, ModeName::CasBackoff, ModeName::Mcs, ModeName::Cider}) {
    if (only && *only != m) continue;
    for (std::uint32_t i = 0; i < o.runs; ++i) {
      const std::uint64_t seed = o.seed + i;
      const Mode mode{m, m == ModeName::Cider && seed % 2 == 1};
      const SmallRun r = small_run(mode, seed, o.skip_version_bump);
      ++s.cases;
      const bool completed = r.status.outcome == RunStatus::Outcome::Completed;
      if (completed && r.verdict.passed()) continue;
      ++s.failures;
      if (s.details.size() < 5) {
        std::ostringstream os;
        os << mode_label(mode) << " seed " << seed << ": "
           << (!completed ? "run did not complete" : "not linearizable") << "\n  "
           << witness_text(r.history, r.verdict);
        s.details.push_back(os.str());
      }
    }
  }
  s.passed = s.failures == 0;
  return s;
}

// ---------------------------------------------------------------------------
// Fencing

namespace {

enum class Race { UpdateFirst, DeleteFirst, ReadThenDelete };

const char* to_string(Race r) {
  switch (r) {
    case Race::UpdateFirst: return "update_first";
    case Race::DeleteFirst: return "delete_first";
    case Race::ReadThenDelete: return "read_then_delete";
  }
  return "?";
}

// One UPDATE (U) and one DELETE (D) on a present key, then a SEARCH.
FencingCase update_delete_race(ModeName mode, bool pessimistic, Race race, bool skip_version_bump) {
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{mode, false};
  so.arena_chunk_bytes = 4096;
  so.lock.skip_delete_version_bump = skip_version_bump;
  Rig rig(so, Schedule{});
  GenerationGuard guard;
  rig.store->set_observer(&guard);
  rig.store->load(0, "initial0");
  const ClientId u = rig.add(0);
  const ClientId d = rig.add(1);
  const ClientId s = rig.add(2);
  if (mode == ModeName::Cider) credit_all(rig, 0, pessimistic ? 8 : 0);
  spawn(rig, u, {ScriptOp{OpKind::Update, 0, "updated0"}});
  spawn(rig, d, {ScriptOp{OpKind::Delete, 0, {}}});

  FencingCase fc;
  fc.mode = mode;
  fc.name = std::string(dmsync::to_string(mode)) + (mode == ModeName::Cider ? (pessimistic ? "/pessimistic" : "/optimistic") : "") +
            "/" + to_string(race);

  bool scripted = true;
  switch (race) {
    case Race::UpdateFirst:
      scripted = advance_to(rig, u, "kv_write");
      rig.rt.run_client_until_blocked(d);
      break;
    case Race::DeleteFirst:
      scripted = advance_to(rig, d, "ptr_cas");
      rig.rt.run_client_until_blocked(u);
      break;
    case Race::ReadThenDelete:
      scripted = advance_to(rig, u, "ptr_read") && rig.rt.step_client(u) && advance_to(rig, d, "ptr_cas");
      rig.rt.run_client_until_blocked(u);
      break;
  }
  RunStatus st = rig.rt.run();
  spawn(rig, s, {ScriptOp{OpKind::Search, 0, {}}});
  if (st.outcome == RunStatus::Outcome::Completed) st = rig.rt.run();
  fc.history = rig.history;

  const OpStatus us = rig.results[u].empty() ? OpStatus::Ok : rig.results[u][0].status;
  const OpStatus ds = rig.results[d].empty() ? OpStatus::Invalid : rig.results[d][0].status;
  const KvState initial{{0, std::string("initial0")}};
  const LinearizabilityResult lin = check_linearizable(fc.history, initial);

  // Lock-based UPDATEs are ordered against the DELETE by the lock: the one
  // holding it first wins, the other is fenced.
  const bool locked_update = mode == ModeName::CasBackoff || mode == ModeName::Mcs || (mode == ModeName::Cider && pessimistic);
  std::optional<bool> expect_update_ok;
  if (locked_update) expect_update_ok = race == Race::UpdateFirst;

  std::ostringstream why;
  if (!scripted) why << "interleaving could not be scripted; ";
  if (st.outcome != RunStatus::Outcome::Completed) why << "run did not complete; ";
  if (ds != OpStatus::Ok) why << "delete returned " << dmsync::to_string(ds) << "; ";
  if (expect_update_ok && (us == OpStatus::Ok) != *expect_update_ok)
    why << "update returned " << dmsync::to_string(us) << "; ";
  if (rig.store->peek_value(0)) why << "key still present; ";
  if (guard.violations) why << guard.violations << " update commit(s) crossed a generation; ";
  if (!lin.passed()) why << "not linearizable\n  " << witness_text(fc.history, lin);
  fc.detail = why.str();
  fc.passed = fc.detail.empty();
  if (fc.passed) fc.detail = std::string("update ") + dmsync::to_string(us) + ", delete " + dmsync::to_string(ds);
  return fc;
}

// A DELETE queued between two pessimistic UPDATEs while a holder is inside
// its critical section. The DELETE must close the batch ahead of it and fence
// the UPDATE that arrives after it enqueued.
FencingCase delete_in_queue(bool skip_version_bump) {
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{ModeName::Cider, false};
  so.arena_chunk_bytes = 4096;
  so.lock.skip_delete_version_bump = skip_version_bump;
  Rig rig(so, Schedule{});
  GenerationGuard guard;
  rig.store->set_observer(&guard);
  rig.store->load(0, "initial0");
  const ClientId h = rig.add(0);
  const ClientId u1 = rig.add(0);
  const ClientId d = rig.add(1);
  const ClientId u2 = rig.add(1);
  const ClientId s = rig.add(2);
  credit_all(rig, 0, 8);
  spawn(rig, h, {ScriptOp{OpKind::Update, 0, "holder00"}});
  spawn(rig, u1, {ScriptOp{OpKind::Update, 0, "before00"}});
  spawn(rig, d, {ScriptOp{OpKind::Delete, 0, {}}});
  spawn(rig, u2, {ScriptOp{OpKind::Update, 0, "after000"}});

  FencingCase fc;
  fc.mode = ModeName::Cider;
  fc.name = "cider/delete_in_queue";
  const bool scripted = advance_to(rig, h, "kv_write");
  rig.rt.run_client_until_blocked(u1);
  rig.rt.run_client_until_blocked(d);
  rig.rt.run_client_until_blocked(u2);
  RunStatus st = rig.rt.run();
  spawn(rig, s, {ScriptOp{OpKind::Search, 0, {}}});
  if (st.outcome == RunStatus::Outcome::Completed) st = rig.rt.run();
  fc.history = rig.history;

  const KvState initial{{0, std::string("initial0")}};
  const LinearizabilityResult lin = check_linearizable(fc.history, initial);
  auto status = [&rig](ClientId c) { return rig.results[c].empty() ? OpStatus::Ok : rig.results[c][0].status; };

  std::ostringstream why;
  if (!scripted) why << "interleaving could not be scripted; ";
  if (st.outcome != RunStatus::Outcome::Completed) why << "run did not complete; ";
  if (status(u2) == OpStatus::Ok) why << "update queued after the delete committed; ";
  if (rig.store->peek_value(0)) why << "key still present; ";
  if (guard.violations) why << guard.violations << " update commit(s) crossed a generation; ";
  if (!lin.passed()) why << "not linearizable\n  " << witness_text(fc.history, lin);
  fc.detail = why.str();
  fc.passed = fc.detail.empty();
  if (fc.passed)
    fc.detail = std::string("u1 ") + dmsync::to_string(status(u1)) + ", delete " + dmsync::to_string(status(d)) +
                ", u2 " + dmsync::to_string(status(u2));
  return fc;
}

}  // namespace

std::vector<FencingCase> fencing_cases(bool skip_version_bump) {
  std::vector<FencingCase> out;
  for (Race race : {Race::UpdateFirst, Race::DeleteFirst, Race::ReadThenDelete}) {
    out.push_back(update_delete_race(ModeName::OSync, false, race, skip_version_bump));
    out.push_back(update_delete_race(ModeName::CasBackoff, false, race, skip_version_bump));
    out.push_back(update_delete_race(ModeName::Mcs, false, race, skip_version_bump));
    out.push_back(update_delete_race(ModeName::Cider, false, race, skip_version_bump));
    out.push_back(update_delete_race(ModeName::Cider, true, race, skip_version_bump));
  }
  out.push_back(delete_in_queue(skip_version_bump));
  return out;
}

SuiteResult verify_fencing(const VerifyOptions& o) {
  SuiteResult s;
  s.name = "fencing";
  for (const FencingCase& fc : fencing_cases(o.skip_version_bump)) {
    ++s.cases;
    if (fc.passed) continue;
    ++s.failures;
    s.details.push_back(fc.name + ": " + fc.detail);
  }
  s.passed = s.failures == 0;
  return s;
}

// ---------------------------------------------------------------------------
// Write combining

bool BatchAccounting::matches() const {
  return batch == k && kv_writes == 1 && pointer_cas == 1 && entry_reads == 1 && notify == 1 && handback == 1 &&
         wave == k - 1 && combined == k - 1 && all_ok;
}

BatchAccounting measure_batch(std::uint32_t k) {
  if (k < 2) throw std::invalid_argument("measure_batch: k must be >= 2");
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{ModeName::Cider, false};
  so.arena_chunk_bytes = 4096;
  so.lock.watch_window_steps *= k + 1;
  Rig rig(so, Schedule{});
  rig.store->load(0, "initial0");
  const ClientId blocker = rig.add(0);
  std::vector<ClientId> members;
  for (std::uint32_t i = 0; i < k; ++i) members.push_back(rig.add(static_cast<NodeIndex>((i + 1) / 4)));
  credit_all(rig, 0, 64);
  spawn(rig, blocker, {ScriptOp{OpKind::Update, 0, "blocker0"}});
  for (ClientId m : members) spawn(rig, m, {ScriptOp{OpKind::Update, 0, make_value(m, 0)}});

  BatchAccounting acc;
  acc.k = k;
  bool armed = false;
  const Address entry_base = rig.store->locks().base();
  rig.pool.set_tap([&](const VerbEvent& e) {
    if (!armed) return;
    if (e.tag == RegionTag::Kv && e.kind == VerbKind::Write) ++acc.kv_writes;
    if (e.tag == RegionTag::Index && e.kind == VerbKind::Cas) ++acc.pointer_cas;
    if (e.tag == RegionTag::Locks && e.kind == VerbKind::Read && (e.addr.offset - entry_base.offset) % 16 == 0)
      ++acc.entry_reads;
  });

  // The blocker owns the lock while all k members queue behind it.
  if (!advance_to(rig, blocker, "kv_write")) throw std::logic_error("measure_batch: blocker never reached its write");
  for (ClientId m : members) rig.rt.run_client_until_blocked(m);
  rig.rt.run_client_until_blocked(blocker);
  const MessageCounters before = rig.fabric.messages();
  armed = true;
  const RunStatus st = rig.rt.run();
  armed = false;
  rig.pool.set_tap({});
  const MessageCounters m = rig.fabric.messages() - before;
  acc.notify = m[MessageKind::WcNotify];
  acc.handback = m[MessageKind::WcHandback];
  acc.wave = m[MessageKind::WcWave];
  acc.all_ok = st.outcome == RunStatus::Outcome::Completed;
  for (ClientId c : members) {
    const auto& rs = rig.results[c];
    if (rs.size() != 1 || !rs[0].ok()) acc.all_ok = false;
    if (rs.empty()) continue;
    if (rs[0].path == UpdatePath::GlobalCombined) ++acc.combined;
    if (rs[0].path == UpdatePath::Executor) acc.batch = rs[0].batch;
  }
  return acc;
}

namespace {

class BatchTracker final : public ProtocolObserver {
 public:
  struct Member {
    ClientId client;
    WcRole role;
    std::uint16_t position;
    std::size_t seq;
  };
  struct Batch {
    ClientId coordinator, executor;
    std::vector<Member> members;
    std::vector<std::string> commits;  // values the executor committed
    bool closed = false;
    std::uint16_t size = 0;
    std::uint16_t result = 0;
    std::size_t first_enqueue = 0;  // index into `order` of the coordinator's episode
  };

  explicit BatchTracker(Rig& rig) : rig_(rig) {}

  void on_enqueue(LockId, ClientId c, ClientId) override { order.push_back(c); }
  void on_batch_open(LockId, ClientId coordinator, ClientId executor) override {
    Batch b;
    b.coordinator = coordinator;
    b.executor = executor;
    // The coordinator's latest episode is the last time it enqueued.
    for (std::size_t i = order.size(); i-- > 0;)
      if (order[i] == coordinator) {
        b.first_enqueue = i;
        break;
      }
    batches.push_back(std::move(b));
  }
  void on_batch_member(LockId, ClientId c, WcRole role, std::uint16_t position) override {
    if (batches.empty()) return;
    batches.back().members.push_back({c, role, position, rig_.current[c].seq});
  }
  void on_batch_close(LockId, ClientId, std::uint16_t size, std::uint16_t result) override {
    if (batches.empty()) return;
    batches.back().closed = true;
    batches.back().size = size;
    batches.back().result = result;
  }
  void on_pointer_commit(std::uint64_t, std::uint64_t, std::uint64_t new_word, ClientId who) override {
    if (batches.empty() || batches.back().closed || who != batches.back().executor) return;
    batches.back().commits.push_back(rig_.store->value_at(new_word).value_or("<absent>"));
  }

  std::vector<ClientId> order;
  std::vector<Batch> batches;

 private:
  Rig& rig_;
};

}  // namespace

LwwCheck check_last_writer_wins(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ull);
  const auto clients = static_cast<std::uint32_t>(std::uniform_int_distribution<int>(2, 8)(rng));
  const auto ops = static_cast<std::uint32_t>(std::uniform_int_distribution<int>(1, 3)(rng));
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{ModeName::Cider, false};
  so.arena_chunk_bytes = 4096;
  so.lock.watch_window_steps *= clients;
  Schedule sched;
  sched.seed = seed;
  sched.policy = Policy::Random;
  Rig rig(so, sched);
  BatchTracker tracker(rig);
  rig.store->set_observer(&tracker);
  rig.store->load(0, "initial0");
  for (std::uint32_t i = 0; i < clients; ++i) rig.add(static_cast<NodeIndex>(i / 4));
  credit_all(rig, 0, 1000);
  for (ClientId c : rig.ids) {
    std::vector<ScriptOp> script;
    for (std::uint32_t j = 0; j < ops; ++j) script.push_back({OpKind::Update, 0, make_value(c, j)});
    spawn(rig, c, std::move(script));
  }
  const RunStatus st = rig.rt.run();

  LwwCheck out;
  std::ostringstream why;
  if (st.outcome != RunStatus::Outcome::Completed) why << "run did not complete; ";
  for (std::size_t bi = 0; bi < tracker.batches.size(); ++bi) {
    const auto& b = tracker.batches[bi];
    ++out.batches;
    std::ostringstream bw;
    auto members = b.members;
    std::sort(members.begin(), members.end(), [](const auto& x, const auto& y) { return x.position < y.position; });
    if (!b.closed) bw << "never closed; ";
    if (members.size() != b.size) bw << members.size() << " members but size " << b.size << "; ";
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i].position != i + 1) bw << "positions not 1..k; ";
      // Queue order: member i is the i-th client to enqueue from the coordinator on.
      const std::size_t at = b.first_enqueue + i;
      if (at >= tracker.order.size() || tracker.order[at] != members[i].client) bw << "member out of queue order; ";
    }
    if (members.empty() || members.back().client != b.executor) bw << "executor is not the queue-last member; ";
    const std::string expected = make_value(b.executor, members.empty() ? 0 : members.back().seq);
    if (b.commits.size() != 1 || b.commits[0] != expected)
      bw << "committed " << (b.commits.empty() ? "nothing" : b.commits.back()) << " instead of " << expected << "; ";
    for (const auto& m : members) {
      const auto& rs = rig.results[m.client];
      if (m.seq >= rs.size()) {
        bw << "c" << m.client.value << " never returned; ";
        continue;
      }
      if (static_cast<std::uint16_t>(rs[m.seq].status) != b.result) bw << "c" << m.client.value << " saw another result; ";
    }
    if (!bw.str().empty()) why << "batch " << bi << " (size " << b.size << "): " << bw.str();
  }
  out.detail = why.str();
  out.passed = out.detail.empty();
  return out;
}

SuiteResult verify_gwc(const VerifyOptions& o) {
  SuiteResult s;
  s.name = "gwc";
  for (std::uint32_t k : {2u, 3u, 5u, 8u}) {
    const BatchAccounting a = measure_batch(k);
    ++s.cases;
    if (a.matches()) continue;
    ++s.failures;
    std::ostringstream os;
    os << "batch k=" << k << ": size " << a.batch << ", kv writes " << a.kv_writes << ", pointer cas " << a.pointer_cas
       << ", entry reads " << a.entry_reads << ", notify " << a.notify << ", handback " << a.handback << ", wave "
       << a.wave << ", combined " << a.combined << (a.all_ok ? "" : ", not all ok");
    s.details.push_back(os.str());
  }
  std::uint64_t batches = 0;
  for (std::uint32_t i = 0; i < 200; ++i) {
    const LwwCheck c = check_last_writer_wins(o.seed + i);
    ++s.cases;
    batches += c.batches;
    if (c.passed) continue;
    ++s.failures;
    if (s.details.size() < 5) s.details.push_back("lww seed " + std::to_string(o.seed + i) + ": " + c.detail);
  }
  if (batches == 0) {
    ++s.failures;
    s.details.push_back("lww: no combined batch formed in 200 runs");
  }
  s.passed = s.failures == 0;
  return s;
}

// ---------------------------------------------------------------------------
// Epoch repair

namespace {

class WatchTracker final : public ProtocolObserver {
 public:
  explicit WatchTracker(DeterministicScheduler& rt) : rt_(rt) {}
  void on_stalled(LockId, ClientId c) override {
    ++stalls[c];
    if (!first_verdict.count(c)) first_verdict[c] = EpochVerdict::Stalled;
    if (!first_stall.count(c)) first_stall[c] = rt_.now();
  }
  void on_progress(LockId, ClientId c) override {
    ++progress[c];
    if (!first_verdict.count(c)) first_verdict[c] = EpochVerdict::Progress;
  }
  void on_repair(LockId, ClientId, bool applied) override { repairs_applied += applied; }

  std::map<ClientId, std::uint32_t> stalls, progress;
  std::map<ClientId, EpochVerdict> first_verdict;
  std::map<ClientId, std::uint64_t> first_stall;
  std::uint64_t repairs_applied = 0;

 private:
  DeterministicScheduler& rt_;
};

}  // namespace

EpochDrill epoch_drill(ModeName mode, std::uint32_t waiters) {
  if (mode != ModeName::Mcs && mode != ModeName::Cider) throw std::invalid_argument("epoch drill needs a queue lock");
  StoreOptions so;
  so.key_count = 1;
  so.mode = Mode{mode, false};
  so.arena_chunk_bytes = 4096;
  so.lock.watch_window_steps = 200;
  Rig rig(so, Schedule{});
  WatchTracker tracker(rig.rt);
  rig.store->set_observer(&tracker);
  rig.store->load(0, "initial0");
  const ClientId holder = rig.add(0);
  std::vector<ClientId> ws;
  for (std::uint32_t i = 0; i < waiters; ++i) ws.push_back(rig.add(static_cast<NodeIndex>((i + 1) / 4)));
  if (mode == ModeName::Cider) credit_all(rig, 0, 64);
  spawn(rig, holder, {ScriptOp{OpKind::Update, 0, "holder00"}});
  for (ClientId w : ws) spawn(rig, w, {ScriptOp{OpKind::Update, 0, make_value(w, 0)}});

  EpochDrill d;
  d.waiters = waiters;
  d.window = so.lock.watch_window_steps;
  const bool scripted = advance_to(rig, holder, "kv_write");
  for (ClientId w : ws) rig.rt.run_client_until_blocked(w);
  rig.rt.kill_now(holder);
  d.kill_time = rig.rt.now();
  d.status = rig.rt.run();
  d.repairs_applied = tracker.repairs_applied;
  d.lock_free_at_end = !rig.store->peek_lock(0).tail.valid();

  // A waiter's window starts before the kill, so its first check lands
  // within one window of it, plus the steps of waiters checking alongside.
  const std::uint64_t slack = 4 * (waiters + 1);
  std::ostringstream why;
  if (!scripted) why << "holder never reached its critical section; ";
  if (d.status.outcome != RunStatus::Outcome::Completed) why << "run did not complete; ";
  for (ClientId w : ws) {
    d.stalls.push_back(tracker.stalls[w]);
    d.progress.push_back(tracker.progress[w]);
    const std::uint64_t delay = tracker.first_stall.count(w) ? tracker.first_stall[w] - d.kill_time : 0;
    d.stall_delay.push_back(delay);
    const auto& rs = rig.results[w];
    d.completed.push_back(static_cast<std::uint32_t>(rs.size()));
    if (tracker.stalls[w] == 0) why << "c" << w.value << " never stalled; ";
    else if (tracker.first_verdict[w] != EpochVerdict::Stalled) why << "c" << w.value << " saw progress first; ";
    else if (delay > d.window + slack) why << "c" << w.value << " stalled " << delay << " steps after the kill; ";
    if (rs.size() != 1 || !rs[0].ok()) why << "c" << w.value << " did not complete exactly once; ";
  }
  if (d.repairs_applied == 0) why << "no repair applied; ";
  if (!d.lock_free_at_end) why << "lock still held at the end; ";
  d.detail = why.str();
  d.passed = d.detail.empty();
  return d;
}

SuiteResult verify_epoch(const VerifyOptions&) {
  SuiteResult s;
  s.name = "epoch";
  for (ModeName m : {ModeName::Mcs, ModeName::Cider}) {
    for (std::uint32_t waiters : {1u, 4u}) {
      const EpochDrill d = epoch_drill(m, waiters);
      ++s.cases;
      if (d.passed) continue;
      ++s.failures;
      s.details.push_back(std::string(to_string(m)) + " with " + std::to_string(waiters) + " waiter(s): " + d.detail);
    }
  }
  s.passed = s.failures == 0;
  return s;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"linearizability", "fencing", "gwc", "epoch"};
  return names;
}

std::optional<SuiteResult> run_suite(const std::string& name, const VerifyOptions& o) {
  if (name == "linearizability") return verify_linearizability(o);
  if (name == "fencing") return verify_fencing(o);
  if (name == "gwc") return verify_gwc(o);
  if (name == "epoch") return verify_epoch(o);
  return std::nullopt;
}

}  // namespace dmsync
