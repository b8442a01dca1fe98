#include "medkg/gat.hpp"

namespace medkg {

std::string relation_slot_name(RelationSlot r) {
  switch (r) {
    case RelationSlot::Sub2Rea: return "sub2rea";
    case RelationSlot::Rea2ReaFwd: return "rea2rea_fwd";
    case RelationSlot::Rea2ReaBwd: return "rea2rea_bwd";
    case RelationSlot::Rea2Men: return "rea2men";
    case RelationSlot::Men2CanFwd: return "men2can_fwd";
    case RelationSlot::Men2CanBwd: return "men2can_bwd";
  }
  return "?";
}

namespace {

std::string slot_prefix(const GatConfig& cfg, int slot, int head) {
  std::string r = cfg.merge_edge_types ? "merged" : relation_slot_name(static_cast<RelationSlot>(slot));
  return "gat." + r + ".h" + std::to_string(head);
}

}  // namespace

void init_gat(ParamStore& store, const GatConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.rep_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  const int n_slots = cfg.merge_edge_types ? 1 : kNumRelationSlots;
  for (int slot = 0; slot < n_slots; ++slot)
    for (int head = 0; head < cfg.heads; ++head) {
      store.create(slot_prefix(cfg, slot, head) + ".W", d, d, s, rng);
      store.create(slot_prefix(cfg, slot, head) + ".a", 2 * d, 1, s, rng);
    }
  store.create("gate.Wq", 2 * d, 1, s, rng);
  store.create("gate.bq", 1, 1, 0.0, rng);
  store.create("gate.Ws", 2 * d, d, s, rng);
  store.create("gate.bs", 1, d, 0.0, rng);
  store.create("gate.Wg", 2 * d, d, s, rng);
  store.create("gate.bg", 1, d, 0.0, rng);
}

RelationAdjacency RelationAdjacency::build(const ReasoningGraph& g, bool merge_edge_types) {
  RelationAdjacency adj;
  adj.by_slot.resize(static_cast<std::size_t>(kNumRelationSlots));
  auto add = [&](RelationSlot slot, int dst, int src, std::size_t edge_idx) {
    int s = merge_edge_types ? 0 : static_cast<int>(slot);
    adj.by_slot[static_cast<std::size_t>(s)][dst].emplace_back(src, edge_idx);
  };
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const TypedEdge& e = g.edges[i];
    switch (e.kind) {
      case EdgeKind::Sub2Rea:
        add(RelationSlot::Sub2Rea, e.dst, e.src, i);
        break;
      case EdgeKind::Rea2Rea:
        add(RelationSlot::Rea2ReaFwd, e.dst, e.src, i);
        add(RelationSlot::Rea2ReaBwd, e.src, e.dst, i);
        break;
      case EdgeKind::Rea2Men:
        add(RelationSlot::Rea2Men, e.dst, e.src, i);
        break;
      case EdgeKind::Men2Can:
        add(RelationSlot::Men2CanFwd, e.dst, e.src, i);
        add(RelationSlot::Men2CanBwd, e.src, e.dst, i);
        break;
    }
  }
  return adj;
}

std::vector<Var> relational_aggregate(BoundParams& bp, const GatConfig& cfg, const RelationAdjacency& adj,
                                      const ReasoningGraph& g, const std::vector<Var>& reps,
                                      AttentionTrace* trace) {
  Tape& tape = bp.tape();
  const int n = static_cast<int>(reps.size());
  const int n_slots = cfg.merge_edge_types ? 1 : kNumRelationSlots;
  std::vector<Var> head_sum(static_cast<std::size_t>(n));
  std::vector<bool> any(static_cast<std::size_t>(n), false);

  for (int head = 0; head < cfg.heads; ++head) {
    // per-head per-slot transform cache, filled on demand
    std::vector<std::map<int, Var>> wu(static_cast<std::size_t>(n_slots));
    std::vector<Var> head_out(static_cast<std::size_t>(n));
    std::vector<bool> head_any(static_cast<std::size_t>(n), false);
    for (int slot = 0; slot < n_slots; ++slot) {
      const auto& neighbors = adj.by_slot[static_cast<std::size_t>(slot)];
      if (neighbors.empty()) continue;
      Var W = bp(slot_prefix(cfg, slot, head) + ".W");
      Var a = bp(slot_prefix(cfg, slot, head) + ".a");
      auto transform = [&](int node) {
        auto it = wu[static_cast<std::size_t>(slot)].find(node);
        if (it != wu[static_cast<std::size_t>(slot)].end()) return it->second;
        Var v = tape.matmul(reps[static_cast<std::size_t>(node)], W);
        wu[static_cast<std::size_t>(slot)][node] = v;
        return v;
      };
      for (const auto& [i, in_list] : neighbors) {
        Var wu_i = transform(i);
        std::vector<Var> coeffs;
        for (const auto& [j, edge_idx] : in_list)
          coeffs.push_back(tape.leaky_relu(tape.matmul(tape.concat({wu_i, transform(j)}, 1), a), cfg.leaky_slope));
        Var alpha = tape.softmax(tape.stack_scalars(coeffs), 1);
        const double inv_n = 1.0 / static_cast<double>(in_list.size());
        for (std::size_t k = 0; k < in_list.size(); ++k) {
          Var ak = tape.slice_cols(alpha, static_cast<int>(k), static_cast<int>(k) + 1);
          Var msg = tape.scale(tape.mul(transform(in_list[k].first), ak), inv_n);
          if (head_any[static_cast<std::size_t>(i)])
            head_out[static_cast<std::size_t>(i)] = tape.add(head_out[static_cast<std::size_t>(i)], msg);
          else {
            head_out[static_cast<std::size_t>(i)] = msg;
            head_any[static_cast<std::size_t>(i)] = true;
          }
          if (trace) {
            std::size_t e = in_list[k].second;
            trace->weight_sum[e] += tape.value(alpha).at(0, static_cast<int>(k));
            trace->weight_count[e] += 1;
          }
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!head_any[static_cast<std::size_t>(i)]) continue;
      Var h = tape.elu(head_out[static_cast<std::size_t>(i)]);
      if (any[static_cast<std::size_t>(i)])
        head_sum[static_cast<std::size_t>(i)] = tape.add(head_sum[static_cast<std::size_t>(i)], h);
      else {
        head_sum[static_cast<std::size_t>(i)] = h;
        any[static_cast<std::size_t>(i)] = true;
      }
    }
  }

  std::vector<Var> out(static_cast<std::size_t>(n));
  const int d = cfg.rep_dim;
  for (int i = 0; i < n; ++i) {
    if (any[static_cast<std::size_t>(i)])
      out[static_cast<std::size_t>(i)] = tape.scale(head_sum[static_cast<std::size_t>(i)], 1.0 / cfg.heads);
    else
      out[static_cast<std::size_t>(i)] = tape.input(Tensor(1, d));  // isolated node
  }
  (void)g;
  return out;
}

std::vector<Var> question_gate(BoundParams& bp, const std::vector<Var>& reps, Var question_states) {
  Tape& tape = bp.tape();
  Var Wq = bp("gate.Wq");
  Var bq = bp("gate.bq");
  Var Ws = bp("gate.Ws");
  Var bs = bp("gate.bs");
  const int l_q = tape.value(question_states).n_rows;
  std::vector<Var> q_rows;
  for (int j = 0; j < l_q; ++j) q_rows.push_back(tape.row(question_states, j));
  std::vector<Var> out;
  out.reserve(reps.size());
  for (const Var& u : reps) {
    std::vector<Var> w;
    for (int j = 0; j < l_q; ++j)
      w.push_back(tape.sigmoid(tape.add(tape.matmul(tape.concat({u, q_rows[static_cast<std::size_t>(j)]}, 1), Wq), bq)));
    Var alpha = tape.softmax(tape.stack_scalars(w), 1);
    Var q;
    for (int j = 0; j < l_q; ++j) {
      Var term = tape.mul(q_rows[static_cast<std::size_t>(j)], tape.slice_cols(alpha, j, j + 1));
      q = j == 0 ? term : tape.add(q, term);
    }
    Var beta = tape.sigmoid(tape.add(tape.matmul(tape.concat({q, u}, 1), Ws), bs));
    Var one_minus = tape.shift(tape.scale(beta, -1.0), 1.0);
    out.push_back(tape.add(tape.mul(beta, tape.tanh_(q)), tape.mul(one_minus, u)));
  }
  return out;
}

std::vector<Var> general_gate(BoundParams& bp, const std::vector<Var>& gated, const std::vector<Var>& aggregate,
                              const std::vector<Var>& prev) {
  Tape& tape = bp.tape();
  Var Wg = bp("gate.Wg");
  Var bg = bp("gate.bg");
  std::vector<Var> out;
  out.reserve(gated.size());
  for (std::size_t i = 0; i < gated.size(); ++i) {
    Var w = tape.sigmoid(tape.add(tape.matmul(tape.concat({gated[i], aggregate[i]}, 1), Wg), bg));
    Var one_minus = tape.shift(tape.scale(w, -1.0), 1.0);
    out.push_back(tape.add(tape.mul(w, tape.tanh_(gated[i])), tape.mul(one_minus, prev[i])));
  }
  return out;
}

std::vector<Var> gat_forward(BoundParams& bp, const GatConfig& cfg, const ReasoningGraph& g,
                             std::vector<Var> reps, Var question_states, AttentionTrace* trace) {
  cfg.validate();
  RelationAdjacency adj = RelationAdjacency::build(g, cfg.merge_edge_types);
  if (trace) {
    trace->weight_sum.assign(g.edges.size(), 0.0);
    trace->weight_count.assign(g.edges.size(), 0);
  }
  for (int hop = 0; hop < cfg.hops; ++hop) {
    AttentionTrace* hop_trace = (trace && hop == cfg.hops - 1) ? trace : nullptr;
    std::vector<Var> agg = relational_aggregate(bp, cfg, adj, g, reps, hop_trace);
    std::vector<Var> gated = question_gate(bp, reps, question_states);
    reps = general_gate(bp, gated, agg, reps);
  }
  if (trace) {
    trace->edge_weight.assign(g.edges.size(), 0.0);
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      if (trace->weight_count[i] > 0) trace->edge_weight[i] = trace->weight_sum[i] / trace->weight_count[i];
  }
  return reps;
}

void init_output_layer(ParamStore& store, int rep_dim, Rng& rng) {
  init_mlp(store, "out.can", rep_dim, std::max(2, rep_dim / 2), rng);
  init_mlp(store, "out.men", rep_dim, std::max(2, rep_dim / 2), rng);
}

std::vector<CandidateScore> score_candidates(BoundParams& bp, const ReasoningGraph& g,
                                             const std::vector<Var>& final_reps,
                                             const std::vector<Var>& fallback_candidate_reps) {
  Tape& tape = bp.tape();
  if (g.candidate_order.empty()) throw ContractError("no candidates to score");
  std::vector<CandidateScore> out;
  for (std::size_t c = 0; c < g.candidate_order.size(); ++c) {
    const EntityId& drug = g.candidate_order[c];
    int can_node = g.candidate_node(drug);
    Var u_can = can_node >= 0 ? final_reps[static_cast<std::size_t>(can_node)] : fallback_candidate_reps.at(c);
    CandidateScore cs;
    cs.score = mlp_scalar(bp, "out.can", u_can);
    std::vector<Var> mention_scores;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i].kind == NodeKind::Mention && g.nodes[i].entity == drug)
        mention_scores.push_back(mlp_scalar(bp, "out.men", final_reps[i]));
    if (!mention_scores.empty()) {
      cs.score = tape.add(cs.score, tape.vmax(mention_scores));
      cs.has_mention = true;
    }
    out.push_back(cs);
  }
  return out;
}

}  // namespace medkg
