#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "dmsync/fabric.hpp"

using namespace dmsync;

TEST(Fabric, RegistrationIds) {
  Fabric f;
  EXPECT_EQ(f.register_client(0, 0).value, 1);
  EXPECT_THROW(f.register_client(0, 0), FabricError);
  std::set<std::uint16_t> ids{1};
  for (std::uint16_t i = 1; i < 512; ++i) ids.insert(f.register_client(i / 4, i % 4).value);
  EXPECT_EQ(ids.size(), 512u);
  EXPECT_EQ(f.node_of(ClientId(6)), 1);
  EXPECT_THROW(f.node_of(ClientId(600)), FabricError);
}

TEST(Fabric, PeerWriteIsVisibleToPoller) {
  Fabric f;
  const ClientId a = f.register_client(0, 0), b = f.register_client(1, 0);
  const LockId lock{3};
  EXPECT_EQ(f.poll_field(b, lock, Field::Next), 0u);
  f.write_peer_field(PeerWrite{a, b, lock, MessageKind::Link}.set(Field::Next, a.value));
  EXPECT_EQ(f.poll_field(b, lock, Field::Next), a.value);
  f.write_peer_field(PeerWrite{a, b, lock, MessageKind::Handover}.set(Field::Locked, locked::kOwner));
  EXPECT_EQ(f.poll_field(b, lock, Field::Locked), locked::kOwner);
  // Other locks are separate nodes.
  EXPECT_EQ(f.poll_field(b, LockId{4}, Field::Locked), 0u);
}

TEST(Fabric, SameSenderWritesLandInOrder) {
  Fabric f;
  const ClientId a = f.register_client(0, 0), b = f.register_client(1, 0);
  std::vector<std::uint64_t> seen;
  f.set_tap([&](const PeerWrite& w) { seen.push_back(w.fields[0].value); });
  for (std::uint64_t v = 1; v <= 5; ++v)
    f.write_peer_field(PeerWrite{a, b, LockId{0}, MessageKind::WcWave}.set(Field::Result, v));
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(f.poll_field(b, LockId{0}, Field::Result), 5u);
}

TEST(Fabric, LockedIsAppliedLast) {
  Fabric f;
  const ClientId a = f.register_client(0, 0), b = f.register_client(1, 0);
  LockNode& node = f.lock_node(b, LockId{0});
  bool consistent = false;
  f.set_tap([&](const PeerWrite&) {
    consistent = node.locked.load() == locked::kCombined && node.result.load() == 2 && node.batch.load() == 4;
  });
  f.write_peer_field(PeerWrite{a, b, LockId{0}, MessageKind::WcWave}
                         .set(Field::Locked, locked::kCombined)
                         .set(Field::Result, 2)
                         .set(Field::Batch, 4));
  EXPECT_TRUE(consistent);
}

TEST(Fabric, CountsMessagesByKind) {
  Fabric f;
  const ClientId a = f.register_client(0, 0), b = f.register_client(1, 0);
  f.write_peer_field(PeerWrite{a, b, LockId{0}, MessageKind::WcNotify}.set(Field::Locked, 1));
  f.write_peer_field(PeerWrite{b, a, LockId{0}, MessageKind::WcHandback}.set(Field::Locked, 1));
  f.write_peer_field(PeerWrite{b, a, LockId{0}, MessageKind::WcHandback}.set(Field::Locked, 1));
  f.count_control();
  const MessageCounters m = f.messages();
  EXPECT_EQ(m[MessageKind::WcNotify], 1u);
  EXPECT_EQ(m[MessageKind::WcHandback], 2u);
  EXPECT_EQ(m[MessageKind::Control], 1u);
  EXPECT_EQ(m.total(), 4u);
  EXPECT_EQ((m - m).total(), 0u);
}

TEST(Fabric, TooManyFieldsIsAnError) {
  PeerWrite w;
  for (int i = 0; i < 4; ++i) w.set(Field::Result, 1);
  EXPECT_THROW(w.set(Field::Result, 1), FabricError);
}

TEST(Fabric, ConcurrentWritersToDifferentFields) {
  Fabric f;
  const ClientId a = f.register_client(0, 0), b = f.register_client(1, 0), c = f.register_client(2, 0);
  f.lock_node(c, LockId{0});
  std::thread t1([&] {
    for (std::uint64_t i = 1; i <= 1000; ++i)
      f.write_peer_field(PeerWrite{a, c, LockId{0}, MessageKind::Link}.set(Field::Next, i));
  });
  std::thread t2([&] {
    for (std::uint64_t i = 1; i <= 1000; ++i)
      f.write_peer_field(PeerWrite{b, c, LockId{0}, MessageKind::WcWave}.set(Field::Result, i));
  });
  t1.join();
  t2.join();
  EXPECT_EQ(f.poll_field(c, LockId{0}, Field::Next), 1000u);
  EXPECT_EQ(f.poll_field(c, LockId{0}, Field::Result), 1000u);
  EXPECT_EQ(f.messages().total(), 2000u);
}
