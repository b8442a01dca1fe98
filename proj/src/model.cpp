#include "medkg/model.hpp"

#include <algorithm>

#include "json.hpp"

namespace medkg {

using nlohmann::json;

void ModelConfig::validate() const {
  if (dims.hidden < 2 || dims.hidden % 2 != 0) throw ValidationError("hidden size must be even and >= 2");
  if (dims.word_dim < 1) throw ValidationError("word dim must be >= 1");
  if (dims.know_dim < 1) throw ValidationError("knowledge dim must be >= 1");
  if (heads < 1) throw ValidationError("heads must be >= 1");
  if (hops < 1) throw ValidationError("hops must be >= 1");
  if (no_graph_reasoning &&
      (merge_edge_types || drop_subject || drop_reasoning || drop_mention || drop_candidate))
    throw ValidationError("no_graph_reasoning contradicts graph-structure ablation flags");
}

int argmax_score(const std::vector<double>& scores) {
  if (scores.empty()) throw ContractError("argmax over no scores");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return best;
}

Model Model::init(const ModelConfig& cfg, const Vocabulary& vocab, EmbeddingTable transe, EmbeddingTable transh,
                  std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.config = cfg;
  m.vocab = vocab;
  m.transe = std::move(transe);
  m.transh = std::move(transh);
  m.knowledge_seed = seed;
  Rng rng(seed);
  init_reader(m.params, cfg.dims, vocab.size(), rng);
  if (!cfg.no_graph_reasoning) {
    GatConfig gc{cfg.rep_dim(), cfg.heads, cfg.hops, cfg.merge_edge_types, 0.2};
    init_gat(m.params, gc, rng);
    init_bilstm(m.params, "enc.gateq", cfg.dims.word_dim, cfg.rep_dim(), rng);
  }
  init_output_layer(m.params, cfg.rep_dim(), rng);
  return m;
}

namespace {

ReasoningGraph drop_kind(const ReasoningGraph& g, NodeKind kind) {
  ReasoningGraph out;
  out.candidate_order = g.candidate_order;
  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].kind == kind) continue;
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(g.nodes[i]);
  }
  for (const TypedEdge& e : g.edges) {
    int s = remap[static_cast<std::size_t>(e.src)];
    int d = remap[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) out.edges.push_back({e.kind, s, d, e.directed});
  }
  return out;
}

}  // namespace

PreparedSample Model::prepare(const Sample& sample, const KnowledgeBase& kb, const GraphCaps& caps,
                              bool training) const {
  PreparedSample ps;
  ps.sample = sample;
  EntityCatalog catalog = EntityCatalog::from_kb(kb);
  catalog.entities.insert(sample.subject);
  for (const EntityId& c : sample.candidates) catalog.entities.insert(c);
  if (sample.answer) catalog.entities.insert(*sample.answer);
  for (const std::string& doc : sample.supports) ps.docs.push_back(tokenize(doc, catalog));
  ps.graph = build_graph(sample, ps.docs, kb, caps, training);
  if (config.drop_subject) ps.graph = drop_kind(ps.graph, NodeKind::Subject);
  if (config.drop_reasoning) ps.graph = drop_kind(ps.graph, NodeKind::Reasoning);
  if (config.drop_mention) ps.graph = drop_kind(ps.graph, NodeKind::Mention);
  if (config.drop_candidate) ps.graph = drop_kind(ps.graph, NodeKind::Candidate);

  ps.question_tokens = {vocab.lookup(kRelation), vocab.lookup(sample.subject.accession)};
  for (const auto& doc : ps.docs) {
    ps.doc_tokens.emplace_back();
    for (const std::string& tok : doc.tokens) ps.doc_tokens.back().push_back(vocab.lookup(tok));
  }
  for (const EntityId& c : ps.graph.candidate_order)
    ps.candidate_tokens.push_back({vocab.lookup(c.accession)});
  if (sample.answer)
    for (std::size_t i = 0; i < ps.graph.candidate_order.size(); ++i)
      if (ps.graph.candidate_order[i] == *sample.answer) ps.gold = static_cast<int>(i);
  return ps;
}

namespace {

Var knowledge_var(Model& m, BoundParams& bp, const EmbeddingTable& table, const char* tag, const EntityId& id) {
  const int d = m.config.dims.know_dim;
  if (m.config.no_knowledge_fusion) return bp.tape().input(Tensor(1, d));
  if (!m.config.finetune_knowledge)
    return knowledge_vector(bp.tape(), table, id, d, m.knowledge_seed, false, false);
  std::string name = std::string("know.") + tag + "." + id.str();
  if (!m.params.tensors.count(name)) {
    std::vector<double> v = (table.dim == d && table.has_entity(id))
                                ? table.entity(id)
                                : missing_entity_vector(id, d, m.knowledge_seed);
    m.params.tensors[name] = Tensor(1, d, std::move(v));
  }
  return bp(name);
}

}  // namespace

ForwardResult Model::forward(BoundParams& bp, const PreparedSample& ps, bool want_loss, bool want_trace) const {
  Model& self = *const_cast<Model*>(this);  // lazy knowledge params only
  Tape& tape = bp.tape();
  ForwardResult out;
  EncodedSample enc = encode(bp, config.dims, ps.question_tokens, ps.doc_tokens, ps.candidate_tokens);
  out.warnings = enc.warnings;

  auto fused = [&](Var h, const EntityId& entity) {
    CoattendOut co = coattend(bp, config.dims, h, enc.question);
    Var ke = knowledge_var(self, bp, transe, "transe", entity);
    Var kh = knowledge_var(self, bp, transh, "transh", entity);
    return fuse(bp, config.dims, co, ke, kh);
  };

  std::vector<Var> cand_reps;
  for (std::size_t c = 0; c < ps.graph.candidate_order.size(); ++c)
    cand_reps.push_back(fused(enc.candidates[c], ps.graph.candidate_order[c]));

  std::vector<Var> score_vars;
  if (config.no_graph_reasoning) {
    for (const Var& r : cand_reps) score_vars.push_back(mlp_scalar(bp, "out.can", r));
  } else {
    std::vector<Var> reps;
    for (const GraphNode& node : ps.graph.nodes) {
      if (node.kind == NodeKind::Candidate) {
        std::size_t idx = 0;
        for (; idx < ps.graph.candidate_order.size(); ++idx)
          if (ps.graph.candidate_order[idx] == node.entity) break;
        reps.push_back(cand_reps.at(idx));
      } else {
        reps.push_back(fused(node_states(bp, node, enc), node.entity));
      }
    }
    Var q_states = bilstm(bp, "enc.gateq", tape.rows(bp("word_emb"), ps.question_tokens), config.rep_dim());
    GatConfig gc{config.rep_dim(), config.heads, config.hops, config.merge_edge_types, 0.2};
    AttentionTrace trace;
    std::vector<Var> final_reps =
        gat_forward(bp, gc, ps.graph, std::move(reps), q_states, want_trace ? &trace : nullptr);
    std::vector<CandidateScore> cs = score_candidates(bp, ps.graph, final_reps, cand_reps);
    for (const CandidateScore& c : cs) score_vars.push_back(c.score);
    if (want_trace) out.graph_scores.edge_weights = trace.edge_weight;
  }

  out.scores = score_vars;
  std::vector<double> vals;
  for (const Var& s : score_vars) vals.push_back(tape.value(s).at(0, 0));
  out.predicted = argmax_score(vals);

  if (want_loss && ps.gold >= 0) {
    // log-sum-exp(scores) - s_gold, max-shifted for stability
    Var m = tape.vmax(score_vars);
    std::vector<Var> shifted;
    for (const Var& s : score_vars) shifted.push_back(tape.exp_(tape.sub(s, m)));
    Var lse = tape.add(m, tape.log_(tape.sum(tape.stack_scalars(shifted))));
    out.loss = tape.sub(lse, score_vars[static_cast<std::size_t>(ps.gold)]);
  }

  if (want_trace) {
    // node shading for export: candidates and their mentions get the softmax
    // probability, the subject full intensity, reasoning nodes their strongest
    // incident attention weight
    double mx = *std::max_element(vals.begin(), vals.end());
    std::vector<double> probs(vals.size());
    double z = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) z += (probs[i] = std::exp(vals[i] - mx));
    for (double& p : probs) p /= z;
    out.graph_scores.node_scores.assign(ps.graph.nodes.size(), 0.0);
    if (out.graph_scores.edge_weights.empty())
      out.graph_scores.edge_weights.assign(ps.graph.edges.size(), 0.0);
    auto cand_index = [&](const EntityId& e) -> int {
      for (std::size_t i = 0; i < ps.graph.candidate_order.size(); ++i)
        if (ps.graph.candidate_order[i] == e) return static_cast<int>(i);
      return -1;
    };
    for (std::size_t i = 0; i < ps.graph.nodes.size(); ++i) {
      const GraphNode& node = ps.graph.nodes[i];
      switch (node.kind) {
        case NodeKind::Subject:
          out.graph_scores.node_scores[i] = 1.0;
          break;
        case NodeKind::Candidate:
        case NodeKind::Mention: {
          int c = cand_index(node.entity);
          out.graph_scores.node_scores[i] = c >= 0 ? probs[static_cast<std::size_t>(c)] : 0.0;
          break;
        }
        case NodeKind::Reasoning: {
          double best = 0.0;
          for (std::size_t e = 0; e < ps.graph.edges.size(); ++e)
            if (ps.graph.edges[e].src == static_cast<int>(i) || ps.graph.edges[e].dst == static_cast<int>(i))
              best = std::max(best, out.graph_scores.edge_weights[e]);
          out.graph_scores.node_scores[i] = best;
          break;
        }
      }
    }
  }
  return out;
}

std::string Model::save_json() const {
  json j;
  j["format"] = "medkg-ckpt";
  j["version"] = 1;
  json& c = j["config"];
  c["hidden"] = config.dims.hidden;
  c["word_dim"] = config.dims.word_dim;
  c["know_dim"] = config.dims.know_dim;
  c["heads"] = config.heads;
  c["hops"] = config.hops;
  c["finetune_knowledge"] = config.finetune_knowledge;
  c["no_knowledge_fusion"] = config.no_knowledge_fusion;
  c["no_graph_reasoning"] = config.no_graph_reasoning;
  c["merge_edge_types"] = config.merge_edge_types;
  c["drop_subject"] = config.drop_subject;
  c["drop_reasoning"] = config.drop_reasoning;
  c["drop_mention"] = config.drop_mention;
  c["drop_candidate"] = config.drop_candidate;
  j["knowledge_seed"] = knowledge_seed;
  j["vocab"]["tokens"] = vocab.tokens;
  j["vocab"]["hash"] = to_hex(vocab.hash());
  json p = json::object();
  for (const auto& [name, t] : params.tensors) {
    json e;
    e["rows"] = t.n_rows;
    e["cols"] = t.n_cols;
    json data = json::array();
    for (double v : t.data) data.push_back(format_double(v));
    e["data"] = std::move(data);
    p[name] = std::move(e);
  }
  j["params"] = std::move(p);
  j["transe"] = export_embeddings(transe);
  j["transh"] = export_embeddings(transh);
  return j.dump(1);
}

Model Model::load_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "medkg-ckpt" || j.at("version") != 1)
      throw ValidationError("unsupported checkpoint format/version");
    Model m;
    const json& c = j.at("config");
    m.config.dims.hidden = c.at("hidden");
    m.config.dims.word_dim = c.at("word_dim");
    m.config.dims.know_dim = c.at("know_dim");
    m.config.heads = c.at("heads");
    m.config.hops = c.at("hops");
    m.config.finetune_knowledge = c.at("finetune_knowledge");
    m.config.no_knowledge_fusion = c.at("no_knowledge_fusion");
    m.config.no_graph_reasoning = c.at("no_graph_reasoning");
    m.config.merge_edge_types = c.at("merge_edge_types");
    m.config.drop_subject = c.at("drop_subject");
    m.config.drop_reasoning = c.at("drop_reasoning");
    m.config.drop_mention = c.at("drop_mention");
    m.config.drop_candidate = c.at("drop_candidate");
    m.knowledge_seed = j.at("knowledge_seed");
    m.vocab.tokens = j.at("vocab").at("tokens").get<std::vector<std::string>>();
    for (int i = 0; i < m.vocab.size(); ++i) m.vocab.index[m.vocab.tokens[static_cast<std::size_t>(i)]] = i;
    std::string want = j.at("vocab").at("hash");
    if (to_hex(m.vocab.hash()) != want)
      throw ValidationError("checkpoint vocabulary hash mismatch: stored " + want + ", recomputed " +
                            to_hex(m.vocab.hash()));
    for (const auto& [name, e] : j.at("params").items()) {
      int rows = e.at("rows");
      int cols = e.at("cols");
      std::vector<double> data;
      for (const auto& v : e.at("data")) data.push_back(std::stod(v.get<std::string>()));
      m.params.tensors[name] = Tensor(rows, cols, std::move(data));
    }
    m.transe = import_embeddings_text(j.at("transe"));
    m.transh = import_embeddings_text(j.at("transh"));
    m.config.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace medkg
