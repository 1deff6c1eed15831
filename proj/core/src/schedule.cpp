#include "dmsync/schedule.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

namespace dmsync {

bool ClientContext::deterministic() const { return rt_->deterministic(); }

std::uint64_t ClientContext::now() const { return rt_->now(); }

ClientContext& Runtime::add_client(ClientId id, NodeIndex node) {
  for (const auto& s : slots_)
    if (s.ctx->id() == id) throw std::logic_error("add_client: client already added");
  Slot s;
  s.ctx = std::make_unique<ClientContext>(*this, id, node);
  s.ctx->seed(0x9E3779B97F4A7C15ull * id.value);
  slots_.push_back(std::move(s));
  return *slots_.back().ctx;
}

Runtime::Slot& Runtime::slot(ClientId id) {
  for (auto& s : slots_)
    if (s.ctx->id() == id) return s;
  throw std::logic_error("unknown client " + std::to_string(id.value));
}

ClientContext& Runtime::context(ClientId id) { return *slot(id).ctx; }

// A finished client may be given a new program; a killed one stays dead.
void Runtime::spawn(ClientId id, Task<void> program) {
  Slot& s = slot(id);
  if (s.program.handle() && !s.done && !s.dead) throw std::logic_error("client already has a running program");
  s.program = std::move(program);
  s.started = false;
  s.done = false;
}

// ---------------------------------------------------------------------------

DeterministicScheduler::DeterministicScheduler(Schedule schedule)
    : schedule_(std::move(schedule)), rng_(schedule_.seed) {}

std::size_t DeterministicScheduler::index_of(ClientId id) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].ctx->id() == id) return i;
  throw std::logic_error("unknown client " + std::to_string(id.value));
}

bool DeterministicScheduler::runnable_index(std::size_t i) {
  Slot& s = slots_[i];
  if (s.done || s.dead || !s.program.handle()) return false;
  const ClientContext& ctx = *s.ctx;
  if (!ctx.blocked()) return true;
  if (ctx.predicate_holds()) return true;
  return ctx.deadline() != 0 && clock_ >= ctx.deadline();
}

bool DeterministicScheduler::runnable(ClientId id) { return runnable_index(index_of(id)); }

bool DeterministicScheduler::finished(ClientId id) {
  const Slot& s = slots_[index_of(id)];
  return s.done || s.dead;
}

bool DeterministicScheduler::all_finished() const {
  return std::all_of(slots_.begin(), slots_.end(),
                     [](const Slot& s) { return s.done || s.dead || !s.program.handle(); });
}

bool DeterministicScheduler::advance_clock() {
  std::uint64_t earliest = std::numeric_limits<std::uint64_t>::max();
  for (const Slot& s : slots_) {
    if (s.done || s.dead || !s.ctx->blocked() || s.ctx->deadline() == 0) continue;
    earliest = std::min(earliest, s.ctx->deadline());
  }
  if (earliest == std::numeric_limits<std::uint64_t>::max()) return false;
  clock_ = std::max(clock_, earliest);
  return true;
}

std::optional<ClientId> DeterministicScheduler::pick() {
  const std::size_t n = slots_.size();
  if (n == 0) return std::nullopt;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (schedule_.policy == Policy::Scripted && script_pos_ < schedule_.script.size()) {
      const ClientId id = schedule_.script[script_pos_];
      if (!runnable_index(index_of(id)))
        throw std::logic_error("scripted client " + std::to_string(id.value) + " is not runnable");
      return id;
    }
    if (schedule_.policy == Policy::Random) {
      std::vector<std::size_t> ready;
      for (std::size_t i = 0; i < n; ++i)
        if (runnable_index(i)) ready.push_back(i);
      if (!ready.empty()) {
        std::uniform_int_distribution<std::size_t> dist(0, ready.size() - 1);
        return slots_[ready[dist(rng_)]].ctx->id();
      }
    } else {
      for (std::size_t k = 1; k <= n; ++k) {
        const std::size_t i = (cursor_ + k) % n;
        if (runnable_index(i)) return slots_[i].ctx->id();
      }
    }
    if (!advance_clock()) return std::nullopt;
  }
  return std::nullopt;
}

void DeterministicScheduler::execute(std::size_t i) {
  Slot& s = slots_[i];
  ClientContext& ctx = *s.ctx;
  const char* label = !s.started ? "start" : ctx.blocked() ? "wake" : ctx.label();

  for (auto& k : kills_) {
    if (k.rule.client == ctx.id() && k.rule.label == label && ++k.seen == k.rule.occurrence) {
      s.dead = true;
      killed_.push_back(ctx.id());
      ++clock_;
      if (schedule_.record_log) log_.push_back({ctx.id(), std::string("killed:") + label});
      return;
    }
  }

  if (ctx.blocked()) ctx.wake(ctx.predicate_holds());
  if (!s.started) {
    s.started = true;
    ctx.set_leaf(s.program.handle());
  }
  ++clock_;
  if (schedule_.record_log) log_.push_back({ctx.id(), label});
  ctx.leaf().resume();
  if (s.program.handle().done()) {
    s.done = true;
    s.program.rethrow_if_failed();
  }
  if (hook_) hook_(ctx.id(), label);
}

std::optional<ClientId> DeterministicScheduler::step() {
  const auto id = pick();
  if (!id) return std::nullopt;
  const std::size_t i = index_of(*id);
  if (schedule_.policy == Policy::Scripted && script_pos_ < schedule_.script.size()) ++script_pos_;
  cursor_ = i;
  execute(i);
  return id;
}

bool DeterministicScheduler::step_client(ClientId id) {
  const std::size_t i = index_of(id);
  if (!runnable_index(i)) return false;
  execute(i);
  return true;
}

std::uint64_t DeterministicScheduler::run_client_until_blocked(ClientId id, std::uint64_t max_steps) {
  const std::size_t i = index_of(id);
  std::uint64_t n = 0;
  while (n < max_steps && !slots_[i].done && !slots_[i].dead) {
    Slot& s = slots_[i];
    if (s.started && s.ctx->blocked() && !s.ctx->predicate_holds()) break;
    execute(i);
    ++n;
  }
  return n;
}

void DeterministicScheduler::kill_now(ClientId id) {
  Slot& s = slots_[index_of(id)];
  if (s.done || s.dead) return;
  s.dead = true;
  killed_.push_back(id);
}

RunStatus DeterministicScheduler::status(RunStatus::Outcome outcome) const {
  RunStatus st;
  st.outcome = outcome;
  st.steps = clock_;
  st.killed = killed_;
  if (outcome == RunStatus::Outcome::DeadlockSuspect) {
    for (const Slot& s : slots_)
      if (!s.done && !s.dead && s.program.handle()) st.blocked.push_back(s.ctx->id());
  }
  return st;
}

RunStatus DeterministicScheduler::run() {
  while (!all_finished()) {
    if (!step()) return status(RunStatus::Outcome::DeadlockSuspect);
  }
  return status(RunStatus::Outcome::Completed);
}

RunStatus DeterministicScheduler::run_until(const std::function<bool()>& stop) {
  for (;;) {
    if (stop()) return status(RunStatus::Outcome::Stopped);
    if (all_finished()) return status(RunStatus::Outcome::Completed);
    if (!step()) return status(RunStatus::Outcome::DeadlockSuspect);
  }
}

// ---------------------------------------------------------------------------

FreeRunner::FreeRunner() : start_(std::chrono::steady_clock::now()) {}

std::uint64_t FreeRunner::now() const {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count());
}

RunStatus FreeRunner::run() {
  start_ = std::chrono::steady_clock::now();
  std::vector<std::exception_ptr> errors(slots_.size());
  std::vector<std::thread> threads;
  threads.reserve(slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    threads.emplace_back([this, i, &errors] {
      Slot& s = slots_[i];
      ClientContext& ctx = *s.ctx;
      try {
        auto h = s.program.handle();
        if (!h) return;
        s.started = true;
        ctx.set_leaf(h);
        while (!h.done()) {
          if (ctx.blocked()) {
            bool ok = false;
            for (;;) {
              if (ctx.predicate_holds()) {
                ok = true;
                break;
              }
              if (ctx.deadline() != 0 && now() >= ctx.deadline()) break;
              std::this_thread::yield();
            }
            ctx.wake(ok);
          }
          ctx.leaf().resume();
        }
        s.done = true;
        s.program.rethrow_if_failed();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  RunStatus st;
  st.steps = now();
  return st;
}

}  // namespace dmsync
