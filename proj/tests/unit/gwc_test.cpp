#include <gtest/gtest.h>

#include "dmsync/verify.hpp"
#include "rig.hpp"

using namespace dmsync;
using namespace dmsync::test;

namespace {

struct Recorder : ProtocolObserver {
  std::vector<std::string> events;
  void on_batch_open(LockId, ClientId c, ClientId e) override {
    events.push_back("open " + std::to_string(c.value) + "->" + std::to_string(e.value));
  }
  void on_batch_member(LockId, ClientId c, WcRole role, std::uint16_t pos) override {
    events.push_back(std::string(to_string(role)) + " " + std::to_string(c.value) + "@" + std::to_string(pos));
  }
  void on_batch_close(LockId, ClientId e, std::uint16_t size, std::uint16_t result) override {
    events.push_back("close " + std::to_string(e.value) + " size " + std::to_string(size) + " result " +
                     std::to_string(result));
  }
};

// Every client's node ledger is credited so the first decision is pessimistic.
void credit(Rig& r, std::uint64_t key, std::uint32_t nodes) {
  for (NodeIndex n = 0; n < nodes; ++n) r.store->ledger(n).set_cell(key, CreditCell{8, 0});
}

}  // namespace

TEST(GlobalWc, SoloPessimisticUpdateSendsNoMessages) {
  Rig r(options(ModeName::Cider));
  r.store->load(1, "a");
  const ClientId a = r.add();
  credit(r, 1, 1);
  r.rt.spawn(a, do_update(&r, a, 1, "b"));
  ASSERT_EQ(r.rt.run().outcome, RunStatus::Outcome::Completed);
  const OpResult& res = r.results[a].at(0);
  EXPECT_TRUE(res.ok());
  EXPECT_TRUE(res.pessimistic);
  EXPECT_EQ(res.path, UpdatePath::Solo);
  EXPECT_EQ(r.fabric.messages().total(), 0u);
  EXPECT_EQ(r.store->peek_value(1), "b");
  // Batch of one halves the remaining credit: (8 - 1) / 2.
  EXPECT_EQ(r.store->ledger(0).cell(1).credit, 3u);
}

TEST(GlobalWc, BatchAccountingIsExact) {
  for (std::uint32_t k : {2u, 3u, 4u, 5u, 8u}) {
    const BatchAccounting b = measure_batch(k);
    EXPECT_TRUE(b.all_ok) << "k=" << k;
    EXPECT_EQ(b.batch, k);
    EXPECT_EQ(b.kv_writes, 1u);
    EXPECT_EQ(b.pointer_cas, 1u);
    EXPECT_EQ(b.entry_reads, 1u);
    EXPECT_EQ(b.notify, 1u);
    EXPECT_EQ(b.handback, 1u);
    EXPECT_EQ(b.wave, k - 1);
    EXPECT_EQ(b.combined, k - 1);
    EXPECT_TRUE(b.matches());
  }
}

namespace {

// A blocker owns the lock while `members` queue behind it, so the first
// member is handed a lock with successors and coordinates.
void queue_behind_blocker(Rig& r, ClientId blocker, const std::vector<ClientId>& members) {
  r.rt.spawn(blocker, do_update(&r, blocker, 1, "blk"));
  for (ClientId id : members) r.rt.spawn(id, do_update(&r, id, 1, "v" + std::to_string(id.value)));
  ASSERT_TRUE(r.advance_to(blocker, "kv_write"));
  for (ClientId id : members) r.rt.run_client_until_blocked(id);
  ASSERT_EQ(r.rt.run().outcome, RunStatus::Outcome::Completed);
}

}  // namespace

TEST(GlobalWc, ObserverSeesOneOrderedBatch) {
  Rig r(options(ModeName::Cider));
  Recorder rec;
  r.store->set_observer(&rec);
  r.store->load(1, "a");
  const ClientId blocker = r.add(0);
  std::vector<ClientId> ids;
  for (int i = 1; i <= 3; ++i) ids.push_back(r.add(static_cast<NodeIndex>(i)));
  credit(r, 1, 4);
  queue_behind_blocker(r, blocker, ids);
  const std::string c = std::to_string(ids[0].value), p = std::to_string(ids[1].value),
                    e = std::to_string(ids[2].value);
  const std::vector<std::string> want = {
      "open " + c + "->" + e, "coordinator " + c + "@1", "participant " + p + "@2", "executor " + e + "@3",
      "close " + e + " size 3 result 0"};
  EXPECT_EQ(rec.events, want);
  // The queue-last member's value wins; everyone reports the executor's result.
  EXPECT_EQ(r.store->peek_value(1), "v" + e);
  for (ClientId id : ids) EXPECT_TRUE(r.results[id].at(0).ok());
  EXPECT_EQ(r.results[ids[0]][0].path, UpdatePath::GlobalCombined);
  EXPECT_EQ(r.results[ids[1]][0].path, UpdatePath::GlobalCombined);
  EXPECT_EQ(r.results[ids[2]][0].path, UpdatePath::Executor);
  EXPECT_EQ(r.results[ids[2]][0].batch, 3);
  EXPECT_EQ(r.fabric.messages()[MessageKind::WcNotify], 1u);
  EXPECT_EQ(r.fabric.messages()[MessageKind::WcHandback], 1u);
  // One release for the blocker, one for the whole batch.
  EXPECT_EQ(epoch_word::releases(r.store->peek_lock(1).epoch), 2u);
  EXPECT_FALSE(r.store->peek_lock(1).tail.valid());
}

TEST(GlobalWc, FreeAcquirerWithoutSuccessorIsSolo) {
  Rig r(options(ModeName::Cider), Schedule{0, Policy::RoundRobin, {}, false});
  r.store->load(1, "a");
  std::vector<ClientId> ids;
  for (int i = 0; i < 3; ++i) ids.push_back(r.add(static_cast<NodeIndex>(i)));
  credit(r, 1, 3);
  for (ClientId id : ids) r.rt.spawn(id, do_update(&r, id, 1, "v" + std::to_string(id.value)));
  ASSERT_EQ(r.rt.run().outcome, RunStatus::Outcome::Completed);
  // In lockstep the first owner acquires before anyone links behind it.
  EXPECT_EQ(r.results[ids[0]].at(0).path, UpdatePath::Solo);
  EXPECT_EQ(r.results[ids[1]].at(0).path, UpdatePath::GlobalCombined);
  EXPECT_EQ(r.results[ids[2]].at(0).path, UpdatePath::Executor);
  EXPECT_EQ(r.store->peek_value(1), "v" + std::to_string(ids[2].value));
}

TEST(GlobalWc, BatchGrowsCredit) {
  Rig r(options(ModeName::Cider));
  r.store->load(1, "a");
  const ClientId blocker = r.add(1);
  const ClientId a = r.add(0), b = r.add(0);
  credit(r, 1, 2);
  queue_behind_blocker(r, blocker, {a, b});
  // Two decisions (8 -> 6), then +2 for each member of the size-2 batch.
  EXPECT_EQ(r.store->ledger(0).cell(1).credit, 10u);
  // The blocker ran alone: (8 - 1) / 2.
  EXPECT_EQ(r.store->ledger(1).cell(1).credit, 3u);
}

TEST(GlobalWc, LastWriterWinsAcrossSchedules) {
  std::uint64_t batches = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const LwwCheck c = check_last_writer_wins(seed);
    ASSERT_TRUE(c.passed) << "seed " << seed << ": " << c.detail;
    batches += c.batches;
  }
  EXPECT_GT(batches, 40u);
}

TEST(Fencing, ScriptedRacesAllModes) {
  const auto cases = fencing_cases();
  EXPECT_GE(cases.size(), 16u);
  for (const FencingCase& c : cases) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Fencing, SkippedVersionBumpIsCaught) {
  int failed = 0;
  for (const FencingCase& c : fencing_cases(true)) failed += !c.passed;
  EXPECT_GT(failed, 0);
}

TEST(Fencing, DeleteQueuedBehindUpdatesIsNotCombined) {
  // A DELETE queued in a pessimistic batch must not adopt the batch result.
  for (const FencingCase& c : fencing_cases()) {
    if (c.name.find("delete_in_queue") == std::string::npos) continue;
    ASSERT_TRUE(c.passed) << c.detail;
    bool deleted = false;
    for (const OpRecord& op : c.history)
      if (op.op == OpKind::Delete && op.result == OpStatus::Ok) deleted = true;
    EXPECT_TRUE(deleted);
  }
}
