#include <gtest/gtest.h>

#include <atomic>

#include "dmsync/schedule.hpp"

using namespace dmsync;

namespace {

Task<void> steps(ClientContext& ctx, int n) {
  for (int i = 0; i < n; ++i) co_await ctx.step("tick");
}

Task<void> wait_flag(ClientContext& ctx, const std::atomic<bool>* flag) {
  co_await ctx.wait_until([flag] { return flag->load(); });
}

Task<void> set_flag(ClientContext& ctx, std::atomic<bool>* flag) {
  co_await ctx.step("set");
  *flag = true;
}

Task<void> nap(ClientContext& ctx, std::uint64_t ticks, std::uint64_t* woke_at) {
  co_await ctx.sleep(ticks);
  *woke_at = ctx.now();
}

Task<void> timed_wait(ClientContext& ctx, bool* result) {
  *result = co_await ctx.wait_until([] { return false; }, 50);
}

DeterministicScheduler make(Policy p, std::uint64_t seed = 0) { return DeterministicScheduler(Schedule{seed, p, {}, true}); }

std::vector<std::uint16_t> clients_of(const std::vector<StepRecord>& log) {
  std::vector<std::uint16_t> out;
  for (const auto& r : log) out.push_back(r.client.value);
  return out;
}

}  // namespace

TEST(Scheduler, RoundRobinOrder) {
  auto rt = make(Policy::RoundRobin);
  for (std::uint16_t i = 1; i <= 3; ++i) rt.spawn(ClientId(i), steps(rt.add_client(ClientId(i), 0), 2));
  ASSERT_EQ(rt.run().outcome, RunStatus::Outcome::Completed);
  EXPECT_EQ(clients_of(rt.log()), (std::vector<std::uint16_t>{1, 2, 3, 1, 2, 3, 1, 2, 3}));
  EXPECT_EQ(rt.log()[0].label, "start");
  EXPECT_EQ(rt.log()[3].label, "tick");
}

TEST(Scheduler, EqualSeedsEqualLogs) {
  auto run = [](std::uint64_t seed) {
    auto rt = make(Policy::Random, seed);
    for (std::uint16_t i = 1; i <= 5; ++i) rt.spawn(ClientId(i), steps(rt.add_client(ClientId(i), 0), 6));
    rt.run();
    return rt.log();
  };
  EXPECT_EQ(run(9), run(9));
  EXPECT_NE(run(9), run(10));
}

TEST(Scheduler, ScriptedThenFallback) {
  DeterministicScheduler rt(Schedule{0, Policy::Scripted, {ClientId(2), ClientId(2), ClientId(1)}, true});
  for (std::uint16_t i = 1; i <= 2; ++i) rt.spawn(ClientId(i), steps(rt.add_client(ClientId(i), 0), 1));
  rt.run();
  EXPECT_EQ(clients_of(rt.log()), (std::vector<std::uint16_t>{2, 2, 1, 1}));
}

TEST(Scheduler, ScriptedClientMustBeRunnable) {
  DeterministicScheduler rt(Schedule{0, Policy::Scripted, {ClientId(1), ClientId(1), ClientId(1)}, false});
  rt.spawn(ClientId(1), steps(rt.add_client(ClientId(1), 0), 1));
  rt.spawn(ClientId(2), steps(rt.add_client(ClientId(2), 0), 5));
  EXPECT_THROW(rt.run(), std::logic_error);
}

TEST(Scheduler, AllBlockedIsDeadlockSuspect) {
  auto rt = make(Policy::RoundRobin);
  std::atomic<bool> never{false};
  rt.spawn(ClientId(1), wait_flag(rt.add_client(ClientId(1), 0), &never));
  rt.spawn(ClientId(2), wait_flag(rt.add_client(ClientId(2), 0), &never));
  const RunStatus st = rt.run();
  EXPECT_EQ(st.outcome, RunStatus::Outcome::DeadlockSuspect);
  EXPECT_EQ(st.blocked.size(), 2u);
}

TEST(Scheduler, WaiterWakesWhenPredicateHolds) {
  auto rt = make(Policy::RoundRobin);
  std::atomic<bool> flag{false};
  rt.spawn(ClientId(1), wait_flag(rt.add_client(ClientId(1), 0), &flag));
  rt.spawn(ClientId(2), set_flag(rt.add_client(ClientId(2), 0), &flag));
  EXPECT_EQ(rt.run().outcome, RunStatus::Outcome::Completed);
  EXPECT_EQ(rt.log().back().label, "wake");
}

TEST(Scheduler, ClockJumpsToEarliestDeadline) {
  auto rt = make(Policy::RoundRobin);
  std::uint64_t woke = 0;
  rt.spawn(ClientId(1), nap(rt.add_client(ClientId(1), 0), 100, &woke));
  EXPECT_EQ(rt.run().outcome, RunStatus::Outcome::Completed);
  EXPECT_GE(woke, 100u);
  EXPECT_LE(woke, 102u);
}

TEST(Scheduler, TimedWaitReportsTimeout) {
  auto rt = make(Policy::RoundRobin);
  bool result = true;
  rt.spawn(ClientId(1), timed_wait(rt.add_client(ClientId(1), 0), &result));
  rt.run();
  EXPECT_FALSE(result);
}

TEST(Scheduler, KillRuleStopsClient) {
  auto rt = make(Policy::RoundRobin);
  rt.spawn(ClientId(1), steps(rt.add_client(ClientId(1), 0), 5));
  rt.spawn(ClientId(2), steps(rt.add_client(ClientId(2), 0), 2));
  rt.kill_at(KillRule{ClientId(1), "tick", 2});
  const RunStatus st = rt.run();
  EXPECT_EQ(st.outcome, RunStatus::Outcome::Completed);
  ASSERT_EQ(st.killed.size(), 1u);
  EXPECT_TRUE(rt.finished(ClientId(1)));
  int ticks = 0;
  for (const auto& r : rt.log()) ticks += r.client == ClientId(1) && r.label == "tick";
  EXPECT_EQ(ticks, 1);
}

TEST(Scheduler, RunClientUntilBlocked) {
  auto rt = make(Policy::RoundRobin);
  std::atomic<bool> flag{false};
  rt.spawn(ClientId(1), wait_flag(rt.add_client(ClientId(1), 0), &flag));
  EXPECT_EQ(rt.run_client_until_blocked(ClientId(1)), 1u);
  EXPECT_FALSE(rt.finished(ClientId(1)));
  EXPECT_FALSE(rt.runnable(ClientId(1)));
  flag = true;
  EXPECT_TRUE(rt.runnable(ClientId(1)));
  EXPECT_TRUE(rt.step_client(ClientId(1)));
  EXPECT_TRUE(rt.finished(ClientId(1)));
}

TEST(FreeRunner, RunsThreads) {
  FreeRunner rt;
  std::atomic<bool> flag{false};
  rt.spawn(ClientId(1), wait_flag(rt.add_client(ClientId(1), 0), &flag));
  rt.spawn(ClientId(2), set_flag(rt.add_client(ClientId(2), 0), &flag));
  EXPECT_EQ(rt.run().outcome, RunStatus::Outcome::Completed);
  EXPECT_TRUE(flag);
}
