#include "medkg/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "json.hpp"

namespace medkg {

using nlohmann::json;

std::string node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Subject: return "subject";
    case NodeKind::Reasoning: return "reasoning";
    case NodeKind::Mention: return "mention";
    case NodeKind::Candidate: return "candidate";
  }
  return "?";
}

std::string edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Sub2Rea: return "sub2rea";
    case EdgeKind::Rea2Rea: return "rea2rea";
    case EdgeKind::Rea2Men: return "rea2men";
    case EdgeKind::Men2Can: return "men2can";
  }
  return "?";
}

bool edge_kind_directed(EdgeKind k) { return k == EdgeKind::Sub2Rea || k == EdgeKind::Rea2Men; }

std::vector<int> ReasoningGraph::nodes_of_kind(NodeKind k) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == k) out.push_back(static_cast<int>(i));
  return out;
}

int ReasoningGraph::candidate_node(const EntityId& drug) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == NodeKind::Candidate && nodes[i].entity == drug) return static_cast<int>(i);
  return -1;
}

void ReasoningGraph::check_edge_endpoints() const {
  for (const auto& e : edges) {
    NodeKind s = nodes[static_cast<std::size_t>(e.src)].kind;
    NodeKind d = nodes[static_cast<std::size_t>(e.dst)].kind;
    bool ok = false;
    switch (e.kind) {
      case EdgeKind::Sub2Rea: ok = s == NodeKind::Subject && d == NodeKind::Reasoning; break;
      case EdgeKind::Rea2Rea: ok = s == NodeKind::Reasoning && d == NodeKind::Reasoning; break;
      case EdgeKind::Rea2Men: ok = s == NodeKind::Reasoning && d == NodeKind::Mention; break;
      case EdgeKind::Men2Can: ok = s == NodeKind::Mention && d == NodeKind::Candidate; break;
    }
    if (!ok)
      throw ContractError("edge " + edge_kind_name(e.kind) + " has endpoint kinds " + node_kind_name(s) + "->" +
                          node_kind_name(d));
    if (e.directed != edge_kind_directed(e.kind)) throw ContractError("edge direction flag mismatch");
  }
}

NodeSets extract_nodes(const Sample& sample, const std::vector<TokenizedDoc>& docs) {
  NodeSets out;
  std::set<EntityId> candidate_set(sample.candidates.begin(), sample.candidates.end());
  std::map<EntityId, int> ordinal;
  for (std::size_t di = 0; di < docs.size(); ++di) {
    for (const auto& span : docs[di].spans) {
      GraphNode n;
      n.entity = span.entity;
      n.doc = static_cast<int>(di);
      n.span_begin = span.begin;
      n.span_end = span.end;
      n.ordinal = ++ordinal[span.entity];
      if (span.entity.kind == EntityKind::Protein) {
        n.kind = NodeKind::Reasoning;
        out.protein_spans.push_back(n);
      } else if (span.entity == sample.subject) {
        n.kind = NodeKind::Subject;
        out.subject_nodes.push_back(n);
      } else if (candidate_set.count(span.entity)) {
        n.kind = NodeKind::Mention;
        out.mention_nodes.push_back(n);
      }
    }
  }
  for (const auto& c : sample.candidates) {
    GraphNode n;
    n.kind = NodeKind::Candidate;
    n.entity = c;
    out.candidate_nodes.push_back(n);
  }
  return out;
}

std::set<EntityId> select_proteins(const EntityId& subject, const std::set<EntityId>& in_text_proteins,
                                   const KnowledgeBase& kb) {
  std::set<EntityId> selected;
  std::deque<EntityId> frontier;
  for (const auto& p : kb.targets_of(subject))
    if (in_text_proteins.count(p)) frontier.push_back(p);
  while (!frontier.empty()) {
    EntityId p = frontier.front();
    frontier.pop_front();
    if (!selected.insert(p).second) continue;
    for (const auto& q : kb.interactors_of(p, /*directed=*/false))
      if (in_text_proteins.count(q)) frontier.push_back(q);
  }
  return selected;
}

std::vector<TypedEdge> connect_edges(const std::vector<GraphNode>& nodes, const EntityId& subject,
                                     const KnowledgeBase& kb) {
  std::vector<TypedEdge> edges;
  std::set<EntityId> subject_targets = kb.targets_of(subject);
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i) {
    const GraphNode& a = nodes[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const GraphNode& b = nodes[static_cast<std::size_t>(j)];
      if (a.kind == NodeKind::Subject && b.kind == NodeKind::Reasoning && subject_targets.count(b.entity)) {
        edges.push_back({EdgeKind::Sub2Rea, i, j, true});
      } else if (a.kind == NodeKind::Reasoning && b.kind == NodeKind::Reasoning && i < j &&
                 kb.has_pathway_either(a.entity, b.entity)) {
        edges.push_back({EdgeKind::Rea2Rea, i, j, false});
      } else if (a.kind == NodeKind::Reasoning && b.kind == NodeKind::Mention &&
                 kb.is_target(a.entity, b.entity)) {
        edges.push_back({EdgeKind::Rea2Men, i, j, true});
      } else if (a.kind == NodeKind::Mention && b.kind == NodeKind::Candidate && a.entity == b.entity) {
        edges.push_back({EdgeKind::Men2Can, i, j, false});
      }
    }
  }
  return edges;
}

ReasoningGraph truncate(const ReasoningGraph& g, const GraphCaps& caps, bool training,
                        const std::optional<EntityId>& gold) {
  if (caps.subject < 1 || caps.reasoning < 1 || caps.mention < 1 || caps.candidate < 1)
    throw ContractError("truncation caps must be positive");

  std::vector<EntityId> kept_candidates;
  for (const auto& c : g.candidate_order) {
    if (static_cast<int>(kept_candidates.size()) >= caps.candidate) break;
    kept_candidates.push_back(c);
  }
  if (training && gold) {
    bool have_gold = std::find(kept_candidates.begin(), kept_candidates.end(), *gold) != kept_candidates.end();
    bool gold_in_order = std::find(g.candidate_order.begin(), g.candidate_order.end(), *gold) !=
                         g.candidate_order.end();
    if (!have_gold && gold_in_order && !kept_candidates.empty()) kept_candidates.back() = *gold;
  }
  std::set<EntityId> kept_set(kept_candidates.begin(), kept_candidates.end());

  std::vector<int> keep(g.nodes.size(), 0);
  int counts[4] = {0, 0, 0, 0};
  const int kind_cap[4] = {caps.subject, caps.reasoning, caps.mention, caps.candidate};
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    int k = static_cast<int>(n.kind);
    if (n.kind == NodeKind::Mention || n.kind == NodeKind::Candidate)
      if (!kept_set.count(n.entity)) continue;
    if (counts[k] >= kind_cap[k]) continue;
    ++counts[k];
    keep[i] = 1;
  }

  ReasoningGraph out;
  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!keep[i]) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[i]);
  }
  for (const auto& e : g.edges) {
    int s = remap[static_cast<std::size_t>(e.src)];
    int d = remap[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) out.edges.push_back({e.kind, s, d, e.directed});
  }
  out.candidate_order = kept_candidates;
  return out;
}

ReasoningGraph build_graph(const Sample& sample, const std::vector<TokenizedDoc>& docs, const KnowledgeBase& kb,
                           const GraphCaps& caps, bool training) {
  NodeSets sets = extract_nodes(sample, docs);
  std::set<EntityId> in_text;
  for (const auto& n : sets.protein_spans) in_text.insert(n.entity);
  std::set<EntityId> selected = select_proteins(sample.subject, in_text, kb);

  ReasoningGraph g;
  for (const auto& n : sets.subject_nodes) g.nodes.push_back(n);
  std::map<EntityId, int> rea_ordinal;
  for (const auto& n : sets.protein_spans)
    if (selected.count(n.entity)) {
      GraphNode m = n;
      m.ordinal = ++rea_ordinal[m.entity];  // ordinals over selected occurrences only
      g.nodes.push_back(m);
    }
  for (const auto& n : sets.mention_nodes) g.nodes.push_back(n);
  for (const auto& n : sets.candidate_nodes) g.nodes.push_back(n);
  g.candidate_order = sample.candidates;
  g.edges = connect_edges(g.nodes, sample.subject, kb);
  g = truncate(g, caps, training, sample.answer);
  g.check_edge_endpoints();
  return g;
}

namespace {

const char* kind_color(NodeKind k) {
  switch (k) {
    case NodeKind::Subject: return "#2ca02c";    // green
    case NodeKind::Reasoning: return "#9467bd";  // violet
    case NodeKind::Mention: return "#8c564b";    // brown
    case NodeKind::Candidate: return "#d62728";  // red
  }
  return "#000000";
}

}  // namespace

std::string export_dot(const ReasoningGraph& g, const GraphScores* scores) {
  if (scores) {
    if (scores->edge_weights.size() != g.edges.size() && !scores->edge_weights.empty())
      throw ContractError("edge weight count mismatches edge count");
    if (scores->node_scores.size() != g.nodes.size() && !scores->node_scores.empty())
      throw ContractError("node score count mismatches node count");
  }
  std::ostringstream out;
  out << "digraph reasoning {\n";
  out << "  node [shape=ellipse style=filled fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    std::string fill = kind_color(n.kind);
    if (scores && !scores->node_scores.empty() &&
        (n.kind == NodeKind::Mention || n.kind == NodeKind::Candidate)) {
      double s = std::clamp(scores->node_scores[i], 0.0, 1.0);
      char alpha[3];
      std::snprintf(alpha, sizeof(alpha), "%02x", static_cast<int>(0x30 + s * 0xCF));
      fill += alpha;
    }
    out << "  n" << i << " [label=\"" << n.entity.accession;
    if (n.kind != NodeKind::Candidate) out << "@" << n.ordinal;
    out << "\" kind=\"" << node_kind_name(n.kind) << "\" fillcolor=\"" << fill << "\"];\n";
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const TypedEdge& e = g.edges[i];
    out << "  n" << e.src << " -> n" << e.dst << " [kind=\"" << edge_kind_name(e.kind) << "\"";
    if (!e.directed) out << " dir=none";
    if (scores && !scores->edge_weights.empty()) {
      double w = std::clamp(scores->edge_weights[i], 0.0, 1.0);
      out << " penwidth=" << format_double(1.0 + 4.0 * w) << " attnweight=\"" << format_double(w) << "\"";
    }
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string export_json(const ReasoningGraph& g, const GraphScores* scores) {
  json j;
  j["nodes"] = json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GraphNode& n = g.nodes[i];
    json nj;
    nj["id"] = i;
    nj["kind"] = node_kind_name(n.kind);
    nj["entity"] = n.entity.accession;
    if (n.doc >= 0) {
      nj["doc"] = n.doc;
      nj["span"] = {n.span_begin, n.span_end};
    } else {
      nj["doc"] = nullptr;
      nj["span"] = nullptr;
    }
    nj["ordinal"] = n.ordinal;
    if (scores && !scores->node_scores.empty()) nj["score"] = scores->node_scores[i];
    j["nodes"].push_back(nj);
  }
  j["edges"] = json::array();
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const TypedEdge& e = g.edges[i];
    json ej;
    ej["kind"] = edge_kind_name(e.kind);
    ej["src"] = e.src;
    ej["dst"] = e.dst;
    ej["directed"] = e.directed;
    if (scores && !scores->edge_weights.empty()) ej["weight"] = scores->edge_weights[i];
    j["edges"].push_back(ej);
  }
  j["candidates"] = json::array();
  for (const auto& c : g.candidate_order) j["candidates"].push_back(c.accession);
  return j.dump(2) + "\n";
}

ReasoningGraph import_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("graph JSON malformed: ") + e.what());
  }
  ReasoningGraph g;
  for (const auto& nj : j.at("nodes")) {
    GraphNode n;
    std::string kind = nj.at("kind").get<std::string>();
    if (kind == "subject")
      n.kind = NodeKind::Subject;
    else if (kind == "reasoning")
      n.kind = NodeKind::Reasoning;
    else if (kind == "mention")
      n.kind = NodeKind::Mention;
    else if (kind == "candidate")
      n.kind = NodeKind::Candidate;
    else
      throw ValidationError("unknown node kind: " + kind);
    std::string acc = nj.at("entity").get<std::string>();
    n.entity = n.kind == NodeKind::Reasoning ? EntityId::protein(acc) : EntityId::drug(acc);
    if (!nj.at("doc").is_null()) {
      n.doc = nj.at("doc").get<int>();
      n.span_begin = nj.at("span")[0].get<int>();
      n.span_end = nj.at("span")[1].get<int>();
    }
    n.ordinal = nj.at("ordinal").get<int>();
    g.nodes.push_back(n);
  }
  for (const auto& ej : j.at("edges")) {
    TypedEdge e;
    std::string kind = ej.at("kind").get<std::string>();
    if (kind == "sub2rea")
      e.kind = EdgeKind::Sub2Rea;
    else if (kind == "rea2rea")
      e.kind = EdgeKind::Rea2Rea;
    else if (kind == "rea2men")
      e.kind = EdgeKind::Rea2Men;
    else if (kind == "men2can")
      e.kind = EdgeKind::Men2Can;
    else
      throw ValidationError("unknown edge kind: " + kind);
    e.src = ej.at("src").get<int>();
    e.dst = ej.at("dst").get<int>();
    e.directed = ej.at("directed").get<bool>();
    g.edges.push_back(e);
  }
  for (const auto& c : j.at("candidates")) g.candidate_order.push_back(EntityId::drug(c.get<std::string>()));
  g.check_edge_endpoints();
  return g;
}

}  // namespace medkg
