#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tsync/error.hpp"
#include "tsync/messages.hpp"
#include "tsync/protocol.hpp"

namespace tsync {

enum class Role { head, gateway, sensor };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::head: return "head";
    case Role::gateway: return "gateway";
    case Role::sensor: return "sensor";
  }
  return "?";
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "head") return Role::head;
  if (s == "gateway") return Role::gateway;
  if (s == "sensor") return Role::sensor;
  return std::nullopt;
}

struct TopologyNode {
  std::string name;
  Role role{Role::sensor};
  std::optional<NodeId> parent;
};

/// Static tree rooted at the unique head. Node ids are indices into `nodes`.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<TopologyNode> nodes) : nodes_(std::move(nodes)) {}

  /// Every violation of the rooted-tree shape, empty when valid.
  std::vector<std::string> check() const {
    std::vector<std::string> errors;
    std::size_t heads = 0;
    std::set<std::string> names;
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (!names.insert(n.name).second) errors.push_back("node '" + n.name + "': duplicate id");
      if (n.role == Role::head) {
        ++heads;
        if (n.parent) errors.push_back("node '" + n.name + "': head must not have a parent");
        continue;
      }
      if (!n.parent) {
        errors.push_back("node '" + n.name + "': orphan, not a tree (missing parent)");
      } else if (*n.parent >= nodes_.size()) {
        errors.push_back("node '" + n.name + "': parent out of range");
      } else if (nodes_[*n.parent].role == Role::sensor) {
        errors.push_back("node '" + n.name + "': parent '" + nodes_[*n.parent].name + "' is a sensor (sensors are leaves)");
      }
    }
    if (heads != 1) errors.push_back("topology must have exactly one head, found " + std::to_string(heads));
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      // Walk up; more steps than nodes means a cycle.
      std::optional<NodeId> cur = i;
      std::size_t steps = 0;
      while (cur && *cur < nodes_.size() && nodes_[*cur].parent && steps <= nodes_.size()) {
        cur = nodes_[*cur].parent;
        ++steps;
      }
      if (steps > nodes_.size()) {
        errors.push_back("node '" + nodes_[i].name + "': cycle in parent links, not a tree");
        break;
      }
    }
    return errors;
  }

  void validate() const {
    if (auto e = check(); !e.empty()) throw SyncError(Errc::invalid_config, e.front());
  }

  std::size_t size() const { return nodes_.size(); }
  const TopologyNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<TopologyNode>& nodes() const { return nodes_; }

  NodeId root() const {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].role == Role::head) return i;
    throw SyncError(Errc::invalid_config, "no head node");
  }

  std::vector<NodeId> children(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].parent == id) out.push_back(i);
    return out;
  }

  std::size_t depth(NodeId id) const {
    std::size_t d = 0;
    for (auto p = nodes_.at(id).parent; p; p = nodes_.at(*p).parent) ++d;
    return d;
  }

  std::optional<NodeId> find(std::string_view name) const {
    for (NodeId i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].name == name) return i;
    return std::nullopt;
  }

 private:
  std::vector<TopologyNode> nodes_;
};

/// Re-stamps a child's payload into the gateway's frame: one subtraction of the
/// child's own offset, hop count + 1. The child's sync block is not forwarded.
inline RelayedReport gateway_relay_upward(const OffsetTable& child_table, const DataReport& from_child) {
  RelayedReport out = from_child.body;
  out.event_ts = translate_to_master(child_table, from_child.sender, from_child.body.event_ts);
  ++out.hop_count;
  return out;
}

/// Gateway with both personas: sensor toward its parent, head toward its children.
class Gateway {
 public:
  Gateway(NodeId self, HeadConfig head_cfg, SensorConfig sensor_cfg) : self_(self), down_(head_cfg), up_(sensor_cfg) {}

  void on_parent_beacon(const Beacon& b, LocalTimestamp raw_rx) { up_.on_beacon(b, raw_rx); }

  /// Beacon for the children, stamped on the gateway's syntonized clock. Nothing is sent
  /// until the gateway itself is syntonized.
  std::optional<Beacon> emit_child_beacon(LocalTimestamp raw_tx) {
    if (!up_.trustworthy()) return std::nullopt;
    return down_.emit_beacon(up_.syntonized(raw_tx));
  }

  struct RelayOutcome {
    ReportOutcome closed;             // the child's exchange as seen by the head persona
    std::optional<DataReport> relay;  // nullopt when dropped
  };

  /// Closes the child's exchange, then re-emits the payload upward with the gateway's
  /// own sync block. The relay is dropped while the child has no offset record.
  RelayOutcome on_child_report(const DataReport& report, LocalTimestamp raw_rx, LocalTimestamp raw_tx) {
    RelayOutcome out;
    if (!up_.trustworthy()) {
      ++relay_drops_;
      return out;
    }
    out.closed = down_.on_report(report, up_.syntonized(raw_rx));
    if (!out.closed.event_ts) {
      ++relay_drops_;
      return out;
    }
    out.relay = up_.make_report(self_, gateway_relay_upward(down_.table(), report), raw_tx);
    return out;
  }

  HeadPersona& head() { return down_; }
  const HeadPersona& head() const { return down_; }
  SensorPersona& sensor() { return up_; }
  const SensorPersona& sensor() const { return up_; }
  std::uint64_t relay_drops() const { return relay_drops_; }

 private:
  NodeId self_;
  HeadPersona down_;
  SensorPersona up_;
  std::uint64_t relay_drops_{0};
};

}  // namespace tsync
