#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "dmsync/history.hpp"

using namespace dmsync;

namespace {

OpRecord op(std::uint16_t c, OpKind k, std::uint64_t key, std::string v, std::uint64_t inv, std::uint64_t res,
            OpStatus st = OpStatus::Ok) {
  return OpRecord{ClientId(c), k, key, std::move(v), inv, res, st};
}

using LR = LinearizabilityResult;

}  // namespace

TEST(Linearizability, SequentialHistoryPasses) {
  const std::vector<OpRecord> h = {
      op(1, OpKind::Insert, 0, "a", 0, 1),
      op(1, OpKind::Search, 0, "a", 2, 3),
      op(2, OpKind::Update, 0, "b", 4, 5),
      op(2, OpKind::Delete, 0, "", 6, 7),
      op(1, OpKind::Search, 0, "", 8, 9, OpStatus::Invalid),
      op(1, OpKind::Update, 0, "c", 10, 11, OpStatus::Invalid),
  };
  EXPECT_EQ(check_linearizable(h).verdict, LR::Verdict::Pass);
}

TEST(Linearizability, LostUpdateFails) {
  const std::vector<OpRecord> h = {
      op(1, OpKind::Update, 0, "a", 0, 1),
      op(2, OpKind::Update, 0, "b", 2, 3),
      op(3, OpKind::Search, 0, "a", 4, 5),
  };
  const LR r = check_linearizable(h, {{0, "init"}});
  EXPECT_EQ(r.verdict, LR::Verdict::Fail);
  EXPECT_FALSE(r.witness.empty());
}

TEST(Linearizability, OverlapAllowsEitherOrder) {
  for (const char* seen : {"a", "b"}) {
    const std::vector<OpRecord> h = {
        op(1, OpKind::Update, 0, "a", 0, 10),
        op(2, OpKind::Update, 0, "b", 1, 9),
        op(3, OpKind::Search, 0, seen, 11, 12),
    };
    EXPECT_TRUE(check_linearizable(h, {{0, "init"}}).passed()) << seen;
  }
}

TEST(Linearizability, InitialStateMatters) {
  const std::vector<OpRecord> h = {op(1, OpKind::Insert, 0, "a", 0, 1, OpStatus::Invalid)};
  EXPECT_FALSE(check_linearizable(h).passed());
  EXPECT_TRUE(check_linearizable(h, {{0, "x"}}).passed());
}

TEST(Linearizability, DoubleInsertBothOkFails) {
  const std::vector<OpRecord> h = {
      op(1, OpKind::Insert, 0, "a", 0, 5),
      op(2, OpKind::Insert, 0, "b", 1, 6),
  };
  EXPECT_FALSE(check_linearizable(h).passed());
}

TEST(Linearizability, PendingOpMayOrMayNotApply) {
  for (const char* seen : {"init", "p"}) {
    const std::vector<OpRecord> h = {
        op(1, OpKind::Update, 0, "p", 0, kPending),
        op(2, OpKind::Search, 0, seen, 5, 6),
    };
    EXPECT_TRUE(check_linearizable(h, {{0, "init"}}).passed()) << seen;
  }
  // ...but it cannot take effect before it was invoked.
  const std::vector<OpRecord> h = {
      op(2, OpKind::Search, 0, "p", 0, 1),
      op(1, OpKind::Update, 0, "p", 2, kPending),
  };
  EXPECT_FALSE(check_linearizable(h, {{0, "init"}}).passed());
}

TEST(Linearizability, KeysAreIndependent) {
  const std::vector<OpRecord> h = {
      op(1, OpKind::Update, 0, "a", 0, 1),
      op(2, OpKind::Search, 1, "y", 2, 3),
      op(2, OpKind::Search, 0, "a", 4, 5),
  };
  EXPECT_TRUE(check_linearizable(h, {{0, "x"}, {1, "y"}}).passed());
}

TEST(Linearizability, RefusesLongHistories) {
  std::vector<OpRecord> h;
  for (std::uint64_t i = 0; i <= kMaxCheckedOps; ++i)
    h.push_back(op(1, OpKind::Search, 0, "", 2 * i, 2 * i + 1, OpStatus::Invalid));
  EXPECT_EQ(check_linearizable(h).verdict, LR::Verdict::Refused);
  h.pop_back();
  EXPECT_EQ(check_linearizable(h).verdict, LR::Verdict::Pass);
}

TEST(History, JsonLines) {
  const std::vector<OpRecord> h = {
      op(3, OpKind::Update, 7, "v\"1", 4, 9),
      op(4, OpKind::Delete, 7, "", 5, kPending),
  };
  std::ostringstream os;
  write_history_jsonl(os, h);
  std::istringstream is(os.str());
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(is, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["client"], 3);
  EXPECT_EQ(rows[0]["op"], "update");
  EXPECT_EQ(rows[0]["key"], 7);
  EXPECT_EQ(rows[0]["value"], "v\"1");
  EXPECT_EQ(rows[0]["t_inv"], 4);
  EXPECT_EQ(rows[0]["t_res"], 9);
  EXPECT_EQ(rows[0]["result"], "ok");
  EXPECT_TRUE(rows[1]["t_res"].is_null());
  EXPECT_NE(describe(h[1]).find("pending"), std::string::npos);
}
