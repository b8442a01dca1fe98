#ifndef MEDKG_GAT_HPP
#define MEDKG_GAT_HPP

#include "medkg/graph.hpp"
#include "medkg/params.hpp"

namespace medkg {

// Relation slots: directed edge kinds own one slot, undirected kinds two
// (forward and backward message direction).
enum class RelationSlot { Sub2Rea = 0, Rea2ReaFwd, Rea2ReaBwd, Rea2Men, Men2CanFwd, Men2CanBwd };
constexpr int kNumRelationSlots = 6;
std::string relation_slot_name(RelationSlot r);

struct GatConfig {
  int rep_dim = 0;   // 2h + 2 d_k
  int heads = 1;     // K
  int hops = 5;      // L, parameter-sharing layers
  bool merge_edge_types = false;
  double leaky_slope = 0.2;

  void validate() const {
    if (heads < 1) throw ContractError("attention heads must be >= 1");
    if (hops < 1) throw ContractError("hop count must be >= 1");
    if (rep_dim < 1) throw ContractError("node representation dim must be >= 1");
  }
};

void init_gat(ParamStore& store, const GatConfig& cfg, Rng& rng);

// One directed message (j -> i) under a relation slot.
struct RelationAdjacency {
  // in_neighbors[slot][i] = list of (source node j, graph edge index)
  std::vector<std::map<int, std::vector<std::pair<int, std::size_t>>>> by_slot;
  static RelationAdjacency build(const ReasoningGraph& g, bool merge_edge_types);
};

// Per-edge attention weights observed during a layer, averaged over heads
// and message directions; used for graph export.
struct AttentionTrace {
  std::vector<double> edge_weight;  // parallel to graph.edges
  std::vector<double> weight_sum;   // running accumulators, internal
  std::vector<int> weight_count;
};

// g_i: multi-relation attention aggregate (ELU inside, mean over heads).
// Isolated nodes get a zero aggregate.
std::vector<Var> relational_aggregate(BoundParams& bp, const GatConfig& cfg, const RelationAdjacency& adj,
                                      const ReasoningGraph& g, const std::vector<Var>& reps,
                                      AttentionTrace* trace = nullptr);

// Question-aware gate (attention over question states, convex blend).
std::vector<Var> question_gate(BoundParams& bp, const std::vector<Var>& reps, Var question_states);

// General gate blending the previous state with the gated update.
std::vector<Var> general_gate(BoundParams& bp, const std::vector<Var>& gated, const std::vector<Var>& aggregate,
                              const std::vector<Var>& prev);

// L hops of {aggregate, question gate, general gate} with shared parameters.
std::vector<Var> gat_forward(BoundParams& bp, const GatConfig& cfg, const ReasoningGraph& g,
                             std::vector<Var> reps, Var question_states, AttentionTrace* trace = nullptr);

void init_output_layer(ParamStore& store, int rep_dim, Rng& rng);

struct CandidateScore {
  Var score;
  bool has_mention = false;
};

// score(c) = f_can(U_can) + max over c's mention nodes of f_men(U_men);
// candidates with no mentions use f_can alone.
std::vector<CandidateScore> score_candidates(BoundParams& bp, const ReasoningGraph& g,
                                             const std::vector<Var>& final_reps,
                                             const std::vector<Var>& fallback_candidate_reps);

}  // namespace medkg

#endif
