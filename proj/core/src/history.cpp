#include "dmsync/history.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace dmsync {

namespace {

class Checker {
 public:
  Checker(const std::vector<OpRecord>& h, const KvState& initial) : h_(h) {
    for (const auto& r : h_)
      if (std::find(keys_.begin(), keys_.end(), r.key) == keys_.end()) keys_.push_back(r.key);
    state_.resize(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      auto it = initial.find(keys_[i]);
      if (it != initial.end()) state_[i] = it->second;
    }
    for (std::size_t i = 0; i < h_.size(); ++i)
      if (h_[i].t_res != kPending) required_ |= std::uint64_t{1} << i;
  }

  bool run() { return dfs(0); }

  std::vector<std::size_t> witness() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < h_.size(); ++i)
      if (!(deepest_mask_ >> i & 1) && h_[i].t_res != kPending) out.push_back(i);
    return out;
  }

 private:
  using State = std::vector<std::optional<std::string>>;

  std::size_t slot(std::uint64_t key) const {
    return static_cast<std::size_t>(std::find(keys_.begin(), keys_.end(), key) - keys_.begin());
  }

  // Applies op i if its recorded response is legal in the current state.
  bool apply(std::size_t i, State& s) const {
    const OpRecord& r = h_[i];
    auto& cell = s[slot(r.key)];
    const bool pending = r.t_res == kPending;
    const bool ok = r.result == OpStatus::Ok;
    switch (r.op) {
      case OpKind::Search:
        if (pending) return true;
        return cell ? (ok && *cell == r.value) : !ok;
      case OpKind::Insert:
        if (cell) return pending || !ok;
        if (pending || ok) cell = r.value;
        return pending || ok;
      case OpKind::Update:
        if (!cell) return pending || !ok;
        if (pending || ok) cell = r.value;
        return pending || ok;
      case OpKind::Delete:
        if (!cell) return pending || !ok;
        if (pending || ok) cell.reset();
        return pending || ok;
    }
    return false;
  }

  std::string memo_key(std::uint64_t mask) const {
    std::string k = std::to_string(mask);
    for (const auto& c : state_) {
      k += '|';
      if (c) k += std::to_string(c->size()) + ':' + *c;
    }
    return k;
  }

  bool dfs(std::uint64_t mask) {
    if ((mask & required_) == required_) return true;
    if (std::popcount(mask) > std::popcount(deepest_mask_)) deepest_mask_ = mask;
    if (!seen_.insert(memo_key(mask)).second) return false;

    // An op is a candidate if no other outstanding op responded before it
    // was invoked.
    std::uint64_t min_res = kPending;
    for (std::size_t i = 0; i < h_.size(); ++i)
      if (!(mask >> i & 1)) min_res = std::min(min_res, h_[i].t_res);
    for (std::size_t i = 0; i < h_.size(); ++i) {
      if (mask >> i & 1) continue;
      if (h_[i].t_inv > min_res) continue;
      State saved = state_;
      if (apply(i, state_) && dfs(mask | std::uint64_t{1} << i)) return true;
      state_ = std::move(saved);
    }
    return false;
  }

  const std::vector<OpRecord>& h_;
  std::vector<std::uint64_t> keys_;
  State state_;
  std::uint64_t required_ = 0;
  std::uint64_t deepest_mask_ = 0;
  std::unordered_set<std::string> seen_;
};

}  // namespace

LinearizabilityResult check_linearizable(const std::vector<OpRecord>& history, const KvState& initial) {
  LinearizabilityResult res;
  if (history.size() > kMaxCheckedOps) {
    res.verdict = LinearizabilityResult::Verdict::Refused;
    return res;
  }
  Checker c(history, initial);
  if (c.run()) return res;
  res.verdict = LinearizabilityResult::Verdict::Fail;
  res.witness = c.witness();
  return res;
}

std::string describe(const OpRecord& r) {
  std::ostringstream os;
  os << "c" << r.client.value << " " << to_string(r.op) << "(" << r.key;
  if (r.op == OpKind::Insert || r.op == OpKind::Update) os << ", " << nlohmann::json(r.value).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  os << ") -> " << to_string(r.result);
  if (r.op == OpKind::Search && r.result == OpStatus::Ok) os << " " << nlohmann::json(r.value).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  os << " [" << r.t_inv << ", ";
  if (r.t_res == kPending)
    os << "pending";
  else
    os << r.t_res;
  os << "]";
  return os.str();
}

void write_history_jsonl(std::ostream& out, const std::vector<OpRecord>& history) {
  for (const auto& r : history) {
    nlohmann::json j;
    j["client"] = r.client.value;
    j["op"] = to_string(r.op);
    j["key"] = r.key;
    j["value"] = r.value;
    j["t_inv"] = r.t_inv;
    if (r.t_res == kPending)
      j["t_res"] = nullptr;
    else
      j["t_res"] = r.t_res;
    j["result"] = to_string(r.result);
    out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

}  // namespace dmsync
