#pragma once

// Client runtimes. A client is a Task<void> that yields at every verb and
// message boundary (ClientContext::step) and blocks on local predicates
// (ClientContext::wait_until). Two runtimes drive clients:
//
//   DeterministicScheduler  cooperative single-threaded stepping with a
//                           seeded policy; time is the global step count.
//   FreeRunner              one OS thread per client; time is wall-clock ns.

#include <chrono>
#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmsync/fabric.hpp"
#include "dmsync/task.hpp"

namespace dmsync {

class Runtime;

class ClientContext {
 public:
  ClientContext(Runtime& rt, ClientId id, NodeIndex node) : rt_(&rt), id_(id), node_(node) {}
  ClientContext(const ClientContext&) = delete;
  ClientContext& operator=(const ClientContext&) = delete;

  ClientId id() const { return id_; }
  NodeIndex node() const { return node_; }
  bool deterministic() const;
  /// Steps (deterministic) or nanoseconds since run start (free-running).
  std::uint64_t now() const;
  /// Picks the unit that matches the runtime.
  std::uint64_t ticks(std::uint64_t steps, std::chrono::nanoseconds wall) const {
    return deterministic() ? steps : static_cast<std::uint64_t>(wall.count());
  }
  std::mt19937_64& rng() { return rng_; }
  void seed(std::uint64_t s) { rng_.seed(s); }

  struct StepAwaiter {
    ClientContext& ctx;
    const char* label;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) noexcept {
      ctx.leaf_ = h;
      ctx.label_ = label;
    }
    void await_resume() const noexcept {}
  };

  /// Scheduling point; the verb or message that follows executes atomically
  /// with respect to every other client's steps.
  StepAwaiter step(const char* label) { return {*this, label}; }

  template <typename Pred>
  struct WaitAwaiter {
    ClientContext& ctx;
    Pred pred;
    std::uint64_t timeout;

    static bool call(void* self) { return static_cast<WaitAwaiter*>(self)->pred(); }

    bool await_ready() {
      if (pred()) {
        ctx.wait_satisfied_ = true;
        return true;
      }
      return false;
    }
    void await_suspend(std::coroutine_handle<> h) {
      ctx.leaf_ = h;
      ctx.label_ = "wake";
      ctx.blocked_ = true;
      ctx.pred_fn_ = &call;
      ctx.pred_obj_ = this;
      ctx.deadline_ = timeout == 0 ? 0 : ctx.now() + timeout;
    }
    bool await_resume() const noexcept { return ctx.wait_satisfied_; }
  };

  /// Blocks until `pred()` holds (returns true) or `timeout` ticks pass
  /// (returns false). timeout == 0 waits forever. The predicate must only
  /// read client-local state; it never issues verbs.
  template <typename Pred>
  WaitAwaiter<Pred> wait_until(Pred pred, std::uint64_t timeout = 0) {
    return {*this, std::move(pred), timeout};
  }

  auto sleep(std::uint64_t ticks) {
    return wait_until([] { return false; }, ticks == 0 ? 1 : ticks);
  }

  // Runtime-facing state.
  std::coroutine_handle<> leaf() const { return leaf_; }
  const char* label() const { return label_; }
  bool blocked() const { return blocked_; }
  std::uint64_t deadline() const { return deadline_; }
  bool predicate_holds() const { return pred_fn_ && pred_fn_(pred_obj_); }
  void wake(bool satisfied) {
    blocked_ = false;
    wait_satisfied_ = satisfied;
    pred_fn_ = nullptr;
    pred_obj_ = nullptr;
  }
  void set_leaf(std::coroutine_handle<> h) { leaf_ = h; }

 private:
  Runtime* rt_;
  ClientId id_;
  NodeIndex node_;
  std::mt19937_64 rng_{0};

  std::coroutine_handle<> leaf_;
  const char* label_ = "start";
  bool blocked_ = false;
  bool wait_satisfied_ = false;
  bool (*pred_fn_)(void*) = nullptr;
  void* pred_obj_ = nullptr;
  std::uint64_t deadline_ = 0;
};

struct RunStatus {
  enum class Outcome { Completed, DeadlockSuspect, Stopped };
  Outcome outcome = Outcome::Completed;
  std::uint64_t steps = 0;
  std::vector<ClientId> blocked;  // live clients blocked forever on DeadlockSuspect
  std::vector<ClientId> killed;
};

class Runtime {
 public:
  virtual ~Runtime() = default;
  virtual bool deterministic() const = 0;
  virtual std::uint64_t now() const = 0;
  virtual RunStatus run() = 0;

  ClientContext& add_client(ClientId id, NodeIndex node);
  ClientContext& context(ClientId id);
  /// Attaches the client's program; it starts when run() is called.
  void spawn(ClientId id, Task<void> program);
  std::size_t size() const { return slots_.size(); }

 protected:
  struct Slot {
    std::unique_ptr<ClientContext> ctx;
    Task<void> program;
    bool started = false;
    bool done = false;
    bool dead = false;
  };
  Slot& slot(ClientId id);
  std::vector<Slot> slots_;  // indexed by spawn order
};

enum class Policy { RoundRobin, Random, Scripted };

struct Schedule {
  std::uint64_t seed = 0;
  Policy policy = Policy::RoundRobin;
  std::vector<ClientId> script;  // consumed first under Policy::Scripted
  bool record_log = false;
};

struct StepRecord {
  ClientId client;
  std::string label;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Kill `client` instead of letting it execute the `occurrence`-th step
/// carrying `label`. The client is never scheduled again.
struct KillRule {
  ClientId client;
  std::string label;
  std::uint32_t occurrence = 1;
};

class DeterministicScheduler final : public Runtime {
 public:
  explicit DeterministicScheduler(Schedule schedule = {});

  bool deterministic() const override { return true; }
  std::uint64_t now() const override { return clock_; }

  RunStatus run() override;
  /// Runs until `stop()` holds (checked before each step) or no client can run.
  RunStatus run_until(const std::function<bool()>& stop);

  /// Next runnable client under the policy, without running it.
  std::optional<ClientId> pick();
  /// Runs one step of the policy's choice; nullopt when nothing is runnable.
  std::optional<ClientId> step();
  /// Runs one step of `id` if it is runnable.
  bool step_client(ClientId id);
  /// Steps `id` until it blocks, finishes, or `max_steps` elapse.
  std::uint64_t run_client_until_blocked(ClientId id, std::uint64_t max_steps = 1'000'000);

  bool runnable(ClientId id);
  bool finished(ClientId id);
  bool all_finished() const;

  void kill_at(KillRule rule) { kills_.push_back({std::move(rule), 0}); }
  void kill_now(ClientId id);
  void set_step_hook(std::function<void(ClientId, const char*)> hook) { hook_ = std::move(hook); }
  const std::vector<StepRecord>& log() const { return log_; }

 private:
  bool runnable_index(std::size_t i);
  bool advance_clock();
  void execute(std::size_t i);
  std::size_t index_of(ClientId id) const;
  RunStatus status(RunStatus::Outcome outcome) const;

  Schedule schedule_;
  std::mt19937_64 rng_;
  std::uint64_t clock_ = 0;
  std::size_t cursor_ = static_cast<std::size_t>(-1);  // last client run; wraps to 0 first
  std::size_t script_pos_ = 0;
  std::vector<StepRecord> log_;
  struct KillState {
    KillRule rule;
    std::uint32_t seen;
  };
  std::vector<KillState> kills_;
  std::vector<ClientId> killed_;
  std::function<void(ClientId, const char*)> hook_;
};

class FreeRunner final : public Runtime {
 public:
  FreeRunner();
  bool deterministic() const override { return false; }
  std::uint64_t now() const override;
  RunStatus run() override;

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace dmsync
