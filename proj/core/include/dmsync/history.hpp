#pragma once

// Operation histories and a brute-force linearizability checker against the
// sequential KV specification.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmsync/fabric.hpp"
#include "dmsync/kvstore.hpp"

namespace dmsync {

inline constexpr std::uint64_t kPending = std::numeric_limits<std::uint64_t>::max();

struct OpRecord {
  ClientId client;
  OpKind op = OpKind::Search;
  std::uint64_t key = 0;
  std::string value;  // argument of INSERT / UPDATE, result of an Ok SEARCH
  std::uint64_t t_inv = 0;
  std::uint64_t t_res = kPending;  // kPending: never responded (client killed)
  OpStatus result = OpStatus::Ok;
};

/// Initial contents of the keys a history touches; absent keys start empty.
using KvState = std::map<std::uint64_t, std::optional<std::string>>;

struct LinearizabilityResult {
  enum class Verdict { Pass, Fail, Refused };
  Verdict verdict = Verdict::Pass;
  /// On Fail: the operations left over at the deepest point the search reached.
  std::vector<std::size_t> witness;

  bool passed() const { return verdict == Verdict::Pass; }
};

inline constexpr std::size_t kMaxCheckedOps = 24;

/// Wing-Gong search with memoization over (linearized set, state). Pending
/// operations may take effect at any point after invocation, or never.
LinearizabilityResult check_linearizable(const std::vector<OpRecord>& history, const KvState& initial = {});

/// One JSON object per line: {client, op, key, value, t_inv, t_res, result}.
void write_history_jsonl(std::ostream& out, const std::vector<OpRecord>& history);
std::string describe(const OpRecord& r);

}  // namespace dmsync
