#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acn/core/types.h"

namespace acn {

using NodeId = std::uint64_t;

struct TraceNode {
  NodeId node_id = 0;
  RoleId agent = RoleId::AccountManager;
  std::string input_message;
  std::string output_message;
  std::string prompt_snapshot;
  std::vector<NodeId> children;
  json result_payload = json::object();
};

/// Recorded agent invocations for one user turn. Node ids are handed out
/// monotonically from 0, so the root is always node 0.
class CallTrace {
 public:
  CallTrace() = default;
  CallTrace(std::string trace_id, std::string session_id);

  const std::string& trace_id() const { return trace_id_; }
  const std::string& session_id() const { return session_id_; }
  std::optional<NodeId> root() const { return root_; }
  const std::map<NodeId, TraceNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  const TraceNode& node(NodeId id) const;

  /// Appends a node. `parent` empty means "root"; only legal on an empty trace.
  NodeId record_invocation(std::optional<NodeId> parent, RoleId agent, std::string input,
                           std::string output, std::string prompt_snapshot,
                           json result_payload = json::object());

  /// Fills in output and payload of a node once its callees returned.
  void complete_invocation(NodeId id, std::string output, json result_payload);
  void merge_payload(NodeId id, const json& fields);

  /// Pre-order DFS over children in call order.
  std::vector<NodeId> dfs_order() const;
  std::optional<NodeId> parent_of(NodeId id) const;

  json to_json() const;
  static CallTrace from_json(const json& j);

 private:
  std::string trace_id_;
  std::string session_id_;
  std::optional<NodeId> root_;
  std::map<NodeId, TraceNode> nodes_;
  NodeId next_id_ = 0;

  TraceNode& mutable_node(NodeId id);
};

json to_json(const TraceNode& n);
TraceNode trace_node_from_json(const json& j);

/// Structural check: exactly one root, all children exist, every node reached
/// exactly once from the root. Throws Error on violation.
void validate_tree(const CallTrace& trace);

}  // namespace acn
