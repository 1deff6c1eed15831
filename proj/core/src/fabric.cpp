#include "dmsync/fabric.hpp"

#include <numeric>

namespace dmsync {

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Link: return "link";
    case MessageKind::Handover: return "handover";
    case MessageKind::WcNotify: return "wc_notify";
    case MessageKind::WcHandback: return "wc_handback";
    case MessageKind::WcWave: return "wc_wave";
    case MessageKind::Control: return "control";
  }
  return "?";
}

std::uint64_t MessageCounters::total() const { return std::accumulate(by_kind.begin(), by_kind.end(), std::uint64_t{0}); }

MessageCounters MessageCounters::operator-(const MessageCounters& rhs) const {
  MessageCounters out;
  for (std::size_t i = 0; i < kMessageKinds; ++i) out.by_kind[i] = by_kind[i] - rhs.by_kind[i];
  return out;
}

void apply_field(LockNode& node, Field field, std::uint64_t value) {
  switch (field) {
    case Field::Next: node.next.store(value, std::memory_order_release); break;
    case Field::Coordinator: node.coordinator.store(static_cast<std::uint16_t>(value), std::memory_order_release); break;
    case Field::Result: node.result.store(static_cast<std::uint16_t>(value), std::memory_order_release); break;
    case Field::Batch: node.batch.store(static_cast<std::uint16_t>(value), std::memory_order_release); break;
    case Field::Locked: node.locked.store(static_cast<std::uint32_t>(value), std::memory_order_release); break;
  }
}

std::uint64_t load_field(const LockNode& node, Field field) {
  switch (field) {
    case Field::Next: return node.next.load(std::memory_order_acquire);
    case Field::Coordinator: return node.coordinator.load(std::memory_order_acquire);
    case Field::Result: return node.result.load(std::memory_order_acquire);
    case Field::Batch: return node.batch.load(std::memory_order_acquire);
    case Field::Locked: return node.locked.load(std::memory_order_acquire);
  }
  return 0;
}

ClientId Fabric::register_client(NodeIndex node, std::uint16_t thread) {
  if (clients_.size() >= 0xFFFE) throw FabricError("register_client: client id space exhausted");
  if (!slots_.emplace(node, thread).second)
    throw FabricError("register_client: (node " + std::to_string(node) + ", thread " + std::to_string(thread) +
                      ") already registered");
  clients_.push_back(ClientInfo{node, thread, std::make_unique<NodeTable>()});
  return ClientId(static_cast<std::uint16_t>(clients_.size()));
}

const Fabric::ClientInfo& Fabric::info(ClientId id) const {
  if (!id.valid() || id.value > clients_.size()) throw FabricError("unknown client " + std::to_string(id.value));
  return clients_[id.value - 1];
}

NodeIndex Fabric::node_of(ClientId id) const { return info(id).node; }

std::vector<ClientId> Fabric::clients() const {
  std::vector<ClientId> out;
  out.reserve(clients_.size());
  for (std::size_t i = 1; i <= clients_.size(); ++i) out.emplace_back(static_cast<std::uint16_t>(i));
  return out;
}

LockNode& Fabric::lock_node(ClientId owner, LockId lock) {
  auto& table = *info(owner).table;
  std::lock_guard g(table.mu);
  auto& slot = table.nodes[lock.value];
  if (!slot) slot = std::make_unique<LockNode>();
  return *slot;
}

LockNode* Fabric::find_lock_node(ClientId owner, LockId lock) const {
  auto& table = *info(owner).table;
  std::lock_guard g(table.mu);
  auto it = table.nodes.find(lock.value);
  return it == table.nodes.end() ? nullptr : it->second.get();
}

void Fabric::write_peer_field(const PeerWrite& w) {
  LockNode& node = lock_node(w.target, w.lock);
  const FieldWrite* locked_write = nullptr;
  for (std::uint8_t i = 0; i < w.count; ++i) {
    if (w.fields[i].field == Field::Locked) {
      locked_write = &w.fields[i];
      continue;
    }
    apply_field(node, w.fields[i].field, w.fields[i].value);
  }
  if (locked_write) apply_field(node, Field::Locked, locked_write->value);
  counters_[static_cast<std::size_t>(w.kind)].fetch_add(1, std::memory_order_relaxed);
  if (tap_) tap_(w);
}

std::uint64_t Fabric::poll_field(ClientId self, LockId lock, Field field) {
  return load_field(lock_node(self, lock), field);
}

MessageCounters Fabric::messages() const {
  MessageCounters out;
  for (std::size_t i = 0; i < kMessageKinds; ++i) out.by_kind[i] = counters_[i].load(std::memory_order_relaxed);
  return out;
}

}  // namespace dmsync
