#ifndef MEDKG_GRAPH_HPP
#define MEDKG_GRAPH_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "medkg/corpus.hpp"
#include "medkg/kb.hpp"

namespace medkg {

enum class NodeKind { Subject, Reasoning, Mention, Candidate };
enum class EdgeKind { Sub2Rea, Rea2Rea, Rea2Men, Men2Can };

std::string node_kind_name(NodeKind k);
std::string edge_kind_name(EdgeKind k);
bool edge_kind_directed(EdgeKind k);

struct GraphNode {
  NodeKind kind;
  EntityId entity = EntityId::drug("");
  int doc = -1;         // -1 for Candidate nodes
  int span_begin = -1;  // -1 for Candidate nodes
  int span_end = -1;
  int ordinal = 0;  // per-entity occurrence counter, document order
};

struct TypedEdge {
  EdgeKind kind;
  int src = -1;
  int dst = -1;
  bool directed = true;
};

struct ReasoningGraph {
  std::vector<GraphNode> nodes;
  std::vector<TypedEdge> edges;
  std::vector<EntityId> candidate_order;

  std::vector<int> nodes_of_kind(NodeKind k) const;
  int candidate_node(const EntityId& drug) const;  // -1 if truncated away
  void check_edge_endpoints() const;
};

// Truncation caps, in spec order: subject, reasoning, mention, candidate.
struct GraphCaps {
  int subject = 200;
  int reasoning = 800;
  int mention = 100;
  int candidate = 9;
};

struct NodeSets {
  std::vector<GraphNode> subject_nodes;
  std::vector<GraphNode> mention_nodes;
  std::vector<GraphNode> protein_spans;  // P_ex, one entry per textual occurrence
  std::vector<GraphNode> candidate_nodes;
};

NodeSets extract_nodes(const Sample& sample, const std::vector<TokenizedDoc>& docs);

// Algorithm: seed from the subject's in-text targets, then expand through
// in-text pathway interactions. Returns the selected protein entity set.
std::set<EntityId> select_proteins(const EntityId& subject, const std::set<EntityId>& in_text_proteins,
                                   const KnowledgeBase& kb);

std::vector<TypedEdge> connect_edges(const std::vector<GraphNode>& nodes, const EntityId& subject,
                                     const KnowledgeBase& kb);

ReasoningGraph truncate(const ReasoningGraph& g, const GraphCaps& caps, bool training,
                        const std::optional<EntityId>& gold = std::nullopt);

ReasoningGraph build_graph(const Sample& sample, const std::vector<TokenizedDoc>& docs, const KnowledgeBase& kb,
                           const GraphCaps& caps = {}, bool training = false);

// Optional per-edge attention weights and per-node output scores for export.
struct GraphScores {
  std::vector<double> edge_weights;  // parallel to graph.edges
  std::vector<double> node_scores;   // parallel to graph.nodes, in [0,1]
};

std::string export_dot(const ReasoningGraph& g, const GraphScores* scores = nullptr);
std::string export_json(const ReasoningGraph& g, const GraphScores* scores = nullptr);
ReasoningGraph import_json(const std::string& text);

}  // namespace medkg

#endif
