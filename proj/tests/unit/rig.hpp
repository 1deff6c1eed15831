#pragma once

// Small fixture: one store, one deterministic scheduler, scripted clients.

#include <cstring>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dmsync/kvstore.hpp"
#include "dmsync/schedule.hpp"

namespace dmsync::test {

struct Rig {
  MemoryPool pool;
  Fabric fabric;
  std::unique_ptr<Store> store;
  DeterministicScheduler rt;
  std::map<NodeIndex, std::uint16_t> threads;
  std::map<ClientId, std::vector<OpResult>> results;

  explicit Rig(StoreOptions so, Schedule s = {}) : rt(std::move(s)) {
    so.arena_chunk_bytes = 4096;
    store = std::make_unique<Store>(pool, fabric, so);
  }

  ClientId add(NodeIndex node = 0) {
    const ClientId id = fabric.register_client(node, threads[node]++);
    store->attach_client(id, node);
    rt.add_client(id, node);
    return id;
  }
  ClientContext& ctx(ClientId id) { return rt.context(id); }

  // Steps `id` until its next step carries `label`.
  bool advance_to(ClientId id, const char* label) {
    for (int i = 0; i < 10'000; ++i) {
      if (rt.finished(id)) return false;
      if (i > 0 && !ctx(id).blocked() && std::strcmp(ctx(id).label(), label) == 0) return true;
      if (!rt.step_client(id)) return false;
    }
    return false;
  }
};

inline Task<void> do_update(Rig* rig, ClientId id, std::uint64_t key, std::string value) {
  rig->results[id].push_back(co_await rig->store->update(rig->ctx(id), key, std::move(value)));
}
inline Task<void> do_insert(Rig* rig, ClientId id, std::uint64_t key, std::string value) {
  rig->results[id].push_back(co_await rig->store->insert(rig->ctx(id), key, std::move(value)));
}
inline Task<void> do_remove(Rig* rig, ClientId id, std::uint64_t key) {
  rig->results[id].push_back(co_await rig->store->remove(rig->ctx(id), key));
}
inline Task<void> do_search(Rig* rig, ClientId id, std::uint64_t key) {
  rig->results[id].push_back(co_await rig->store->search(rig->ctx(id), key));
}

inline StoreOptions options(ModeName mode, std::uint64_t keys = 4, bool local_wc = false) {
  StoreOptions so;
  so.key_count = keys;
  so.mode = Mode{mode, local_wc};
  return so;
}

}  // namespace dmsync::test
