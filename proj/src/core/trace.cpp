#include "acn/core/trace.h"

#include <set>

#include "acn/core/error.h"

namespace acn {

CallTrace::CallTrace(std::string trace_id, std::string session_id)
    : trace_id_(std::move(trace_id)), session_id_(std::move(session_id)) {}

const TraceNode& CallTrace::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " not in trace");
  }
  return it->second;
}

TraceNode& CallTrace::mutable_node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id) + " not in trace");
  }
  return it->second;
}

NodeId CallTrace::record_invocation(std::optional<NodeId> parent, RoleId agent, std::string input,
                                    std::string output, std::string prompt_snapshot,
                                    json result_payload) {
  if (!parent) {
    if (root_) throw Error(ErrorCode::DuplicateRoot, "trace " + trace_id_ + " already has a root");
    if (agent != RoleId::AccountManager) {
      throw Error(ErrorCode::InvalidArgument, "trace root must be an AccountManager node");
    }
  } else if (!contains(*parent)) {
    throw Error(ErrorCode::UnknownParent, "parent " + std::to_string(*parent) + " not in trace");
  }
  if (!result_payload.is_object()) {
    throw Error(ErrorCode::InvalidArgument, "result_payload must be a record");
  }
  const NodeId id = next_id_++;
  TraceNode n;
  n.node_id = id;
  n.agent = agent;
  n.input_message = std::move(input);
  n.output_message = std::move(output);
  n.prompt_snapshot = std::move(prompt_snapshot);
  n.result_payload = std::move(result_payload);
  nodes_.emplace(id, std::move(n));
  if (parent) {
    mutable_node(*parent).children.push_back(id);
  } else {
    root_ = id;
  }
  return id;
}

void CallTrace::complete_invocation(NodeId id, std::string output, json result_payload) {
  auto& n = mutable_node(id);
  n.output_message = std::move(output);
  merge_payload(id, result_payload);
}

void CallTrace::merge_payload(NodeId id, const json& fields) {
  auto& n = mutable_node(id);
  for (const auto& [k, v] : fields.items()) n.result_payload[k] = v;
}

std::vector<NodeId> CallTrace::dfs_order() const {
  std::vector<NodeId> out;
  if (!root_) return out;
  std::vector<NodeId> stack{*root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    const auto& ch = node(id).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::optional<NodeId> CallTrace::parent_of(NodeId id) const {
  for (const auto& [pid, n] : nodes_) {
    for (NodeId c : n.children) {
      if (c == id) return pid;
    }
  }
  return std::nullopt;
}

json to_json(const TraceNode& n) {
  return {{"node_id", n.node_id},
          {"agent", to_string(n.agent)},
          {"input_message", n.input_message},
          {"output_message", n.output_message},
          {"prompt_snapshot", n.prompt_snapshot},
          {"children", n.children},
          {"result_payload", n.result_payload}};
}

TraceNode trace_node_from_json(const json& j) {
  TraceNode n;
  n.node_id = j.at("node_id").get<NodeId>();
  n.agent = role_from_string(j.at("agent").get<std::string>());
  n.input_message = j.at("input_message").get<std::string>();
  n.output_message = j.at("output_message").get<std::string>();
  n.prompt_snapshot = j.at("prompt_snapshot").get<std::string>();
  n.children = j.at("children").get<std::vector<NodeId>>();
  n.result_payload = j.at("result_payload");
  return n;
}

json CallTrace::to_json() const {
  json nodes = json::object();
  for (const auto& [id, n] : nodes_) nodes[std::to_string(id)] = acn::to_json(n);
  return {{"trace_id", trace_id_},
          {"session_id", session_id_},
          {"root", root_ ? json(*root_) : json(nullptr)},
          {"nodes", nodes}};
}

CallTrace CallTrace::from_json(const json& j) {
  CallTrace t(j.at("trace_id").get<std::string>(), j.at("session_id").get<std::string>());
  if (!j.at("root").is_null()) t.root_ = j.at("root").get<NodeId>();
  for (const auto& [key, value] : j.at("nodes").items()) {
    TraceNode n = trace_node_from_json(value);
    if (std::to_string(n.node_id) != key) {
      throw Error(ErrorCode::Parse, "node key " + key + " does not match node_id");
    }
    t.next_id_ = std::max(t.next_id_, n.node_id + 1);
    t.nodes_.emplace(n.node_id, std::move(n));
  }
  validate_tree(t);
  return t;
}

void validate_tree(const CallTrace& trace) {
  if (trace.empty()) {
    if (trace.root()) throw Error(ErrorCode::UnknownNode, "root set on empty trace");
    return;
  }
  if (!trace.root() || !trace.contains(*trace.root())) {
    throw Error(ErrorCode::UnknownNode, "trace has no valid root");
  }
  std::size_t edges = 0;
  for (const auto& [id, n] : trace.nodes()) {
    for (NodeId c : n.children) {
      if (!trace.contains(c)) {
        throw Error(ErrorCode::UnknownNode, "child " + std::to_string(c) + " missing");
      }
      ++edges;
    }
  }
  if (edges + 1 != trace.size()) throw Error(ErrorCode::InvalidArgument, "trace is not a tree");
  std::set<NodeId> seen;
  std::vector<NodeId> stack{*trace.root()};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (!seen.insert(id).second) throw Error(ErrorCode::InvalidArgument, "trace has a cycle");
    for (NodeId c : trace.node(id).children) stack.push_back(c);
  }
  if (seen.size() != trace.size()) throw Error(ErrorCode::InvalidArgument, "unreachable nodes");
  if (trace.node(*trace.root()).agent != RoleId::AccountManager) {
    throw Error(ErrorCode::InvalidArgument, "root is not an AccountManager node");
  }
}

}  // namespace acn
