// Acceptance suite: one printed pass/fail line per criterion, exit 0 only
// when all ten hold. Tolerances and budgets are pinned as constants below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "medkg/trainer.hpp"

using namespace medkg;

namespace {

constexpr double kPerOpTol = 1e-4;
constexpr double kEndToEndTol = 1e-3;
constexpr double kEquivarianceTol = 1e-9;
constexpr double kMetricTol = 1e-12;
constexpr double kTrainedHits10Floor = 0.8;
constexpr double kUntrainedHits10Ceil = 0.25;
constexpr double kDevAccuracyFloor = 0.334;

struct Budget {
  double used = 0;
  double limit = 0;  // seconds, 0 = none
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------- shared oracles ----------

std::set<EntityId> bfs_oracle(const EntityId& subject, const std::set<EntityId>& in_text,
                              const KnowledgeBase& kb) {
  std::set<EntityId> seen;
  std::deque<EntityId> q;
  for (const auto& p : kb.targets_of(subject))
    if (in_text.count(p) && seen.insert(p).second) q.push_back(p);
  while (!q.empty()) {
    EntityId p = q.front();
    q.pop_front();
    for (const auto& r : kb.interactors_of(p, false))
      if (in_text.count(r) && seen.insert(r).second) q.push_back(r);
  }
  return seen;
}

KnowledgeBase random_kb(Rng& rng, int n_proteins, int n_drugs, int n_facts) {
  KnowledgeBase kb;
  for (int i = 0; i < n_facts; ++i) {
    kb.add_triplet({EntityId::protein("P" + std::to_string(rand_index(rng, static_cast<std::size_t>(n_proteins)))),
                    "act" + std::to_string(rand_index(rng, 3)),
                    EntityId::drug("D" + std::to_string(rand_index(rng, static_cast<std::size_t>(n_drugs))))});
    EntityId a = EntityId::protein("P" + std::to_string(rand_index(rng, static_cast<std::size_t>(n_proteins))));
    EntityId b = EntityId::protein("P" + std::to_string(rand_index(rng, static_cast<std::size_t>(n_proteins))));
    if (!(a == b)) kb.add_pathway(a, b);
  }
  return kb;
}

// ---------- criterion 1 ----------

bool criterion1() {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    int n_p = 2 + static_cast<int>(rand_index(rng, 29));
    int n_d = 1 + static_cast<int>(rand_index(rng, 10));
    KnowledgeBase kb = random_kb(rng, n_p, n_d, 3 * n_p);
    std::set<EntityId> in_text;
    for (int i = 0; i < n_p; ++i)
      if (rand_index(rng, 2) == 0) in_text.insert(EntityId::protein("P" + std::to_string(i)));
    EntityId subject = EntityId::drug("D" + std::to_string(rand_index(rng, static_cast<std::size_t>(n_d))));
    if (select_proteins(subject, in_text, kb) != bfs_oracle(subject, in_text, kb)) return false;
  }
  return true;
}

// ---------- criterion 2 ----------

std::vector<TypedEdge> edge_oracle(const std::vector<GraphNode>& nodes, const EntityId& subject,
                                   const KnowledgeBase& kb) {
  std::vector<TypedEdge> out;
  int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const GraphNode& a = nodes[static_cast<std::size_t>(i)];
      const GraphNode& b = nodes[static_cast<std::size_t>(j)];
      if (a.kind == NodeKind::Subject && b.kind == NodeKind::Reasoning &&
          kb.targets_of(subject).count(b.entity))
        out.push_back({EdgeKind::Sub2Rea, i, j, true});
      else if (a.kind == NodeKind::Reasoning && b.kind == NodeKind::Reasoning && i < j &&
               kb.has_pathway_either(a.entity, b.entity))
        out.push_back({EdgeKind::Rea2Rea, i, j, false});
      else if (a.kind == NodeKind::Reasoning && b.kind == NodeKind::Mention && kb.is_target(a.entity, b.entity))
        out.push_back({EdgeKind::Rea2Men, i, j, true});
      else if (a.kind == NodeKind::Mention && b.kind == NodeKind::Candidate && a.entity == b.entity)
        out.push_back({EdgeKind::Men2Can, i, j, false});
    }
  return out;
}

bool criterion2() {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    KnowledgeBase kb = random_kb(rng, 10, 6, 30);
    EntityId subject = EntityId::drug("D" + std::to_string(rand_index(rng, 6)));
    std::vector<GraphNode> nodes;
    int n_nodes = 2 + static_cast<int>(rand_index(rng, 14));
    for (int i = 0; i < n_nodes; ++i) {
      GraphNode node;
      switch (rand_index(rng, 4)) {
        case 0: node.kind = NodeKind::Subject; node.entity = subject; break;
        case 1:
          node.kind = NodeKind::Reasoning;
          node.entity = EntityId::protein("P" + std::to_string(rand_index(rng, 10)));
          break;
        case 2:
          node.kind = NodeKind::Mention;
          node.entity = EntityId::drug("D" + std::to_string(rand_index(rng, 6)));
          break;
        default:
          node.kind = NodeKind::Candidate;
          node.entity = EntityId::drug("D" + std::to_string(rand_index(rng, 6)));
          break;
      }
      nodes.push_back(node);
    }
    auto got = connect_edges(nodes, subject, kb);
    auto want = edge_oracle(nodes, subject, kb);
    auto key = [](const TypedEdge& e) { return std::tuple(static_cast<int>(e.kind), e.src, e.dst, e.directed); };
    std::vector<std::tuple<int, int, int, bool>> ka, kw;
    for (const auto& e : got) ka.push_back(key(e));
    for (const auto& e : want) kw.push_back(key(e));
    std::sort(ka.begin(), ka.end());
    std::sort(kw.begin(), kw.end());
    if (ka != kw) return false;
  }
  return true;
}

// ---------- criterion 3 ----------

struct TinyModel {
  KnowledgeBase kb;
  Sample sample;
  Model model;
  PreparedSample ps;
};

TinyModel tiny_model(ModelConfig cfg = {}) {
  TinyModel f;
  f.kb.add_triplet({EntityId::protein("P1"), "a", EntityId::drug("DB1")});
  f.kb.add_pathway(EntityId::protein("P1"), EntityId::protein("P2"));
  f.kb.add_triplet({EntityId::protein("P2"), "b", EntityId::drug("DB2")});
  f.sample.id = "acc";
  f.sample.subject = EntityId::drug("DB1");
  f.sample.candidates = {EntityId::drug("DB2"), EntityId::drug("DB3")};
  f.sample.supports = {"DB1 targets P1 .", "P1 interacts with P2 . DB2 targets P2 ."};
  f.sample.answer = EntityId::drug("DB2");
  cfg.dims.hidden = 6;
  cfg.dims.word_dim = 5;
  cfg.dims.know_dim = 3;
  cfg.hops = 2;
  auto [vocab, emb] = build_vocab({f.sample}, cfg.dims.word_dim, 1);
  (void)emb;
  f.model = Model::init(cfg, vocab, {}, {}, 7);
  GraphCaps caps;
  caps.reasoning = 2;  // 1 subject + 2 reasoning + 1 mention + 2 candidates = 6 nodes
  f.ps = f.model.prepare(f.sample, f.kb, caps, true);
  return f;
}

bool criterion3() {
  using medkg::testing::gradcheck;
  Rng rng(303);
  auto r = [&](int rows, int cols) { return Tensor::randn(rows, cols, 1.0, rng); };
  auto pos = [&](int rows, int cols) {
    Tensor t = r(rows, cols);
    for (double& v : t.data) v = 0.5 + std::fabs(v);
    return t;
  };
  std::vector<double> worst;
  auto run = [&](std::vector<Tensor> in, const medkg::testing::LossFn& f) { worst.push_back(gradcheck(in, f)); };

  run({r(2, 3), r(3, 4)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.matmul(v[0], v[1])); });
  run({r(3, 2)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.transpose(v[0])); });
  run({r(2, 3), r(2, 3)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(t.add(v[0], v[1]), t.sub(v[0], v[1]))); });
  run({r(2, 3), Tensor::scalar(0.7)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(v[0], v[1])); });  // scalar broadcast
  run({r(2, 3)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.shift(t.scale(v[0], -2.5), 0.3)); });
  run({r(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.sigmoid(v[0])); });
  run({r(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.tanh_(v[0])); });
  run({pos(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.relu(v[0])); });
  run({pos(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.leaky_relu(t.scale(v[0], -1.0), 0.2)); });
  run({pos(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.elu(t.scale(v[0], -1.0))); });
  run({r(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.exp_(v[0])); });
  run({pos(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.log_(v[0])); });
  run({pos(2, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.sqrt_(v[0])); });
  run({r(2, 4)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(t.softmax(v[0], 1), t.exp_(v[0]))); });
  run({r(3, 2)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(t.softmax(v[0], 0), t.exp_(v[0]))); });
  run({r(1, 2), r(1, 3)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.sigmoid(t.concat({v[0], v[1]}, 1))); });
  run({r(2, 5)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.slice_cols(v[0], 1, 4)); });
  run({r(4, 3)},
      [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(t.rows(v[0], {0, 2, 2}), t.rows(v[0], {1, 1, 3}))); });
  run({r(4, 3)}, [](Tape& t, const std::vector<Var>& v) { return t.sum(t.mul(t.mean_rows(v[0]), t.row(v[0], 1))); });
  run({Tensor::scalar(0.4), Tensor::scalar(1.9), Tensor::scalar(-0.3)}, [](Tape& t, const std::vector<Var>& v) {
    return t.mul(t.vmax({v[0], v[1], v[2]}), t.sum(t.stack_scalars({v[0], v[1], v[2]})));
  });
  for (double w : worst)
    if (!(w < kPerOpTol)) return false;

  // end-to-end: the two-hop reader on a 6-node graph against finite differences
  TinyModel f = tiny_model();
  auto loss_value = [&]() {
    Tape tape;
    BoundParams bp(tape, f.model.params);
    ForwardResult fr = f.model.forward(bp, f.ps, true);
    return tape.value(fr.loss).at(0, 0);
  };
  Tape tape;
  BoundParams bp(tape, f.model.params);
  ForwardResult fr = f.model.forward(bp, f.ps, true);
  tape.backward(fr.loss);
  const double eps = 1e-5;
  Rng pick(7);
  for (const auto& [name, var] : bp.used()) {
    const Tensor& g = tape.grad(var);
    Tensor& p = f.model.params.at(name);
    std::size_t idx = rand_index(pick, p.size());
    double keep = p.data[idx];
    p.data[idx] = keep + eps;
    double up = loss_value();
    p.data[idx] = keep - eps;
    double down = loss_value();
    p.data[idx] = keep;
    double numeric = (up - down) / (2 * eps);
    double err = std::fabs(g.data[idx] - numeric) / std::max({1.0, std::fabs(g.data[idx]), std::fabs(numeric)});
    if (!(err < kEndToEndTol)) return false;
  }
  return true;
}

// ---------- criterion 4 ----------

LinkPredictionReport rank_oracle(const EmbeddingTable& table, const KnowledgeBase& kb,
                                 const std::vector<Triplet>& test, bool filtered) {
  auto score = [&](const Triplet& t) {
    if (table.model == TransModel::TransH)
      return score_transh(table.entity(t.protein), table.relations.at(t.action), table.entity(t.drug),
                          table.normals.at(t.action));
    return score_transe(table.entity(t.protein), table.relations.at(t.action), table.entity(t.drug));
  };
  std::vector<int> ranks;
  for (const Triplet& t : test)
    for (int dir = 0; dir < 2; ++dir) {
      std::vector<EntityId> pool = dir == 0 ? kb.drugs() : kb.proteins();
      double ts = score(t);
      int rank = 1;
      for (const EntityId& cand : pool) {
        Triplet alt = t;
        (dir == 0 ? alt.drug : alt.protein) = cand;
        if (alt == t) continue;
        if (filtered && kb.has_triplet(alt)) continue;
        if (score(alt) <= ts) ++rank;  // ties rank ahead of the truth
      }
      ranks.push_back(rank);
    }
  LinkPredictionReport rep;
  rep.filtered = filtered;
  double n = static_cast<double>(ranks.size());
  for (int r : ranks) {
    rep.mr += r / n;
    rep.mrr += 1.0 / r / n;
    rep.hits1 += (r <= 1) / n;
    rep.hits3 += (r <= 3) / n;
    rep.hits10 += (r <= 10) / n;
  }
  return rep;
}

bool reports_close(const LinkPredictionReport& a, const LinkPredictionReport& b) {
  return std::fabs(a.mr - b.mr) < kMetricTol && std::fabs(a.mrr - b.mrr) < kMetricTol &&
         std::fabs(a.hits1 - b.hits1) < kMetricTol && std::fabs(a.hits3 - b.hits3) < kMetricTol &&
         std::fabs(a.hits10 - b.hits10) < kMetricTol;
}

bool criterion4() {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    KnowledgeBase kb = random_kb(rng, 20, 15, 60);
    bool transh = trial % 2 == 1;
    EmbeddingTable table;
    table.model = transh ? TransModel::TransH : TransModel::TransE;
    table.dim = 6;
    auto rvec = [&]() {
      std::vector<double> v(6);
      for (double& x : v) x = randn(rng, 1.0);
      return v;
    };
    for (const auto& e : kb.proteins()) table.entities[e] = rvec();
    for (const auto& e : kb.drugs()) table.entities[e] = rvec();
    for (const auto& a : kb.actions()) {
      table.relations[a] = rvec();
      if (transh) {
        std::vector<double> w = rvec();
        double norm = 0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : w) x /= norm;
        table.normals[a] = w;
      }
    }
    std::vector<Triplet> test(kb.triplets().begin(), kb.triplets().end());
    test.resize(std::min<std::size_t>(test.size(), 15));
    for (bool filtered : {false, true}) {
      LinkPredictionReport got = eval_link_prediction(table, kb, test, filtered);
      LinkPredictionReport want = rank_oracle(table, kb, test, filtered);
      if (!reports_close(got, want)) return false;
      if (!(got.hits1 <= got.hits3 + kMetricTol && got.hits3 <= got.hits10 + kMetricTol)) return false;
    }
    LinkPredictionReport raw = eval_link_prediction(table, kb, test, false);
    LinkPredictionReport flt = eval_link_prediction(table, kb, test, true);
    if (!(flt.hits10 + kMetricTol >= raw.hits10 && flt.mrr + kMetricTol >= raw.mrr)) return false;
  }
  return true;
}

// ---------- criterion 5 ----------

KnowledgeBase block_kb(Rng& rng) {
  // 5 blocks x (10 proteins, 10 drugs); action i only links within block i,
  // so each relation is a learnable translation between two clusters
  KnowledgeBase kb;
  while (kb.triplets().size() < 200) {
    int block = static_cast<int>(rand_index(rng, 5));
    int p = block * 10 + static_cast<int>(rand_index(rng, 10));
    int d = block * 10 + static_cast<int>(rand_index(rng, 10));
    char pb[16], db[16];
    std::snprintf(pb, sizeof pb, "P%02d", p);
    std::snprintf(db, sizeof db, "D%02d", d);
    kb.add_triplet({EntityId::protein(pb), "act" + std::to_string(block), EntityId::drug(db)});
  }
  return kb;
}

bool criterion5(double* trained_out, double* untrained_out) {
  Rng rng(505);
  KnowledgeBase kb = block_kb(rng);

  EmbeddingTable random_table;
  random_table.model = TransModel::TransE;
  random_table.dim = 16;
  for (const auto& e : kb.proteins()) random_table.entities[e] = missing_entity_vector(e, 16, 9);
  for (const auto& e : kb.drugs()) random_table.entities[e] = missing_entity_vector(e, 16, 9);
  for (const auto& a : kb.actions()) {
    Rng rr(fnv1a64(a));
    std::vector<double> v(16);
    for (double& x : v) x = randn(rr, 0.1);
    random_table.relations[a] = v;
  }
  double untrained = eval_link_prediction(random_table, kb, true).hits10;

  TransConfig cfg;
  cfg.model = TransModel::TransE;
  cfg.dim = 16;
  cfg.epochs = 1000;
  cfg.lr = 0.1;
  cfg.batch = 32;
  cfg.seed = 1;
  EmbeddingTable trained = train_embeddings(kb, cfg);
  double hits = eval_link_prediction(trained, kb, true).hits10;
  *trained_out = hits;
  *untrained_out = untrained;
  return hits >= kTrainedHits10Floor && untrained <= kUntrainedHits10Ceil;
}

// ---------- criteria 6 and 7 ----------

struct LearnabilityResult {
  std::vector<double> full_dev;   // per seed
  std::vector<double> nogr_dev;   // per seed
};

LearnabilityResult run_learnability() {
  SynthSpec spec;
  spec.n_samples = 250;
  spec.n_drugs = 60;
  spec.n_proteins = 60;
  spec.seed = 606;
  SynthResult corpus = synth_generate(spec);
  std::vector<Sample> train_set(corpus.samples.begin(), corpus.samples.begin() + 200);
  std::vector<Sample> dev_set(corpus.samples.begin() + 200, corpus.samples.end());

  TransConfig ec;
  ec.dim = 32;
  ec.epochs = 50;
  ec.lr = 0.1;
  ec.batch = 32;
  EmbeddingTable transe = train_embeddings(corpus.kb, ec);
  ec.model = TransModel::TransH;
  EmbeddingTable transh = train_embeddings(corpus.kb, ec);

  LearnabilityResult out;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = seed;
    cfg.model.dims.hidden = 64;
    cfg.model.dims.word_dim = 64;
    cfg.model.dims.know_dim = 32;
    cfg.model.hops = 5;
    TrainResult full = train(train_set, dev_set, corpus.kb, transe, transh, cfg);
    out.full_dev.push_back(full.best_dev);

    TrainConfig ng = cfg;
    ng.model.no_graph_reasoning = true;
    TrainResult nogr = train(train_set, dev_set, corpus.kb, transe, transh, ng);
    out.nogr_dev.push_back(nogr.best_dev);
  }
  return out;
}

bool criterion6(const LearnabilityResult& r) {
  int hits = 0;
  for (double a : r.full_dev)
    if (a >= kDevAccuracyFloor) ++hits;
  return hits >= 2;
}

bool criterion7(const LearnabilityResult& r) {
  int hits = 0;
  for (std::size_t i = 0; i < r.full_dev.size(); ++i)
    if (r.nogr_dev[i] <= r.full_dev[i]) ++hits;
  return hits >= 2;
}

// ---------- criterion 8 ----------

bool equivariance_check() {
  GatConfig cfg{4, 2, 3, false, 0.2};
  ParamStore store;
  Rng prng(808);
  init_gat(store, cfg, prng);
  ReasoningGraph g;
  auto add_node = [&](NodeKind k, const EntityId& e) {
    GraphNode n;
    n.kind = k;
    n.entity = e;
    g.nodes.push_back(n);
  };
  add_node(NodeKind::Subject, EntityId::drug("S"));
  add_node(NodeKind::Reasoning, EntityId::protein("P1"));
  add_node(NodeKind::Reasoning, EntityId::protein("P2"));
  add_node(NodeKind::Mention, EntityId::drug("D1"));
  add_node(NodeKind::Candidate, EntityId::drug("D1"));
  g.edges = {{EdgeKind::Sub2Rea, 0, 1, true},
             {EdgeKind::Rea2Rea, 1, 2, false},
             {EdgeKind::Rea2Men, 2, 3, true},
             {EdgeKind::Men2Can, 3, 4, false}};
  g.candidate_order = {EntityId::drug("D1")};

  Rng rng(809);
  std::vector<Tensor> rep_vals;
  for (int i = 0; i < 5; ++i) rep_vals.push_back(Tensor::randn(1, 4, 1.0, rng));
  Tensor q_val = Tensor::randn(2, 4, 1.0, rng);
  auto run = [&](const ReasoningGraph& graph, const std::vector<int>& order) {
    Tape tape;
    BoundParams bp(tape, store);
    std::vector<Var> reps;
    for (int i : order) reps.push_back(tape.input(rep_vals[static_cast<std::size_t>(i)]));
    std::vector<Var> outv = gat_forward(bp, cfg, graph, std::move(reps), tape.input(q_val));
    std::vector<Tensor> vals;
    for (const Var& v : outv) vals.push_back(tape.value(v));
    return vals;
  };
  std::vector<Tensor> base = run(g, {0, 1, 2, 3, 4});
  std::vector<int> perm = {2, 4, 0, 3, 1};
  ReasoningGraph h;
  h.nodes.resize(5);
  std::vector<int> old_at(5);
  for (int i = 0; i < 5; ++i) {
    h.nodes[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = g.nodes[static_cast<std::size_t>(i)];
    old_at[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
  }
  for (const TypedEdge& e : g.edges)
    h.edges.push_back({e.kind, perm[static_cast<std::size_t>(e.src)], perm[static_cast<std::size_t>(e.dst)],
                       e.directed});
  h.candidate_order = g.candidate_order;
  std::vector<Tensor> permuted = run(h, old_at);
  for (int i = 0; i < 5; ++i) {
    const Tensor& a = base[static_cast<std::size_t>(i)];
    const Tensor& b = permuted[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    for (std::size_t k = 0; k < a.size(); ++k)
      if (std::fabs(a.data[k] - b.data[k]) > kEquivarianceTol) return false;
  }
  return true;
}

bool gate_and_attention_check() {
  GatConfig cfg{4, 1, 1, false, 0.2};
  ParamStore store;
  Rng prng(811);
  init_gat(store, cfg, prng);

  // attention normalization: three senders into one receiver
  ReasoningGraph g;
  for (int i = 0; i < 3; ++i) {
    GraphNode n;
    n.kind = NodeKind::Subject;
    n.entity = EntityId::drug("S");
    g.nodes.push_back(n);
  }
  GraphNode rea;
  rea.kind = NodeKind::Reasoning;
  rea.entity = EntityId::protein("P");
  g.nodes.push_back(rea);
  for (int i = 0; i < 3; ++i) g.edges.push_back({EdgeKind::Sub2Rea, i, 3, true});

  Tape tape;
  BoundParams bp(tape, store);
  Rng rng(812);
  std::vector<Var> reps;
  for (int i = 0; i < 4; ++i) reps.push_back(tape.input(Tensor::randn(1, 4, 1.0, rng)));
  AttentionTrace trace;
  trace.weight_sum.assign(3, 0.0);
  trace.weight_count.assign(3, 0);
  relational_aggregate(bp, cfg, RelationAdjacency::build(g, false), g, reps, &trace);
  double total = trace.weight_sum[0] + trace.weight_sum[1] + trace.weight_sum[2];
  if (std::fabs(total - 1.0) > 1e-10) return false;

  // gate convexity: outputs stay inside the blend's elementwise hull
  Var q_states = tape.input(Tensor::randn(2, 4, 1.0, rng));
  std::vector<Var> gated = question_gate(bp, reps, q_states);
  const Tensor& q = tape.value(q_states);
  for (std::size_t i = 0; i < gated.size(); ++i) {
    const Tensor& u = tape.value(reps[i]);
    const Tensor& out = tape.value(gated[i]);
    for (int j = 0; j < 4; ++j) {
      double lo = std::min({std::tanh(q.at(0, j)), std::tanh(q.at(1, j)), u.at(0, j)});
      double hi = std::max({std::tanh(q.at(0, j)), std::tanh(q.at(1, j)), u.at(0, j)});
      if (out.at(0, j) < lo - 1e-10 || out.at(0, j) > hi + 1e-10) return false;
    }
  }
  std::vector<Var> agg;
  for (int i = 0; i < 4; ++i) agg.push_back(tape.input(Tensor::randn(1, 4, 1.0, rng)));
  std::vector<Var> updated = general_gate(bp, gated, agg, reps);
  for (std::size_t i = 0; i < updated.size(); ++i) {
    const Tensor& prev = tape.value(reps[i]);
    const Tensor& mid = tape.value(gated[i]);
    const Tensor& out = tape.value(updated[i]);
    for (int j = 0; j < 4; ++j) {
      double lo = std::min(std::tanh(mid.at(0, j)), prev.at(0, j));
      double hi = std::max(std::tanh(mid.at(0, j)), prev.at(0, j));
      if (out.at(0, j) < lo - 1e-10 || out.at(0, j) > hi + 1e-10) return false;
    }
  }
  return true;
}

bool criterion8() {
  if (!equivariance_check()) return false;
  if (!gate_and_attention_check()) return false;

  // truncation idempotence and graph determinism on generated instances
  SynthSpec spec;
  spec.n_samples = 5;
  spec.seed = 814;
  SynthResult corpus = synth_generate(spec);
  EntityCatalog cat = EntityCatalog::from_kb(corpus.kb);
  for (const Sample& s : corpus.samples) {
    std::vector<TokenizedDoc> docs;
    for (const auto& d : s.supports) docs.push_back(tokenize(d, cat));
    ReasoningGraph g1 = build_graph(s, docs, corpus.kb);
    ReasoningGraph g2 = build_graph(s, docs, corpus.kb);
    if (export_json(g1) != export_json(g2)) return false;
    GraphCaps caps{1, 4, 2, 3};
    ReasoningGraph t1 = truncate(g1, caps, false);
    ReasoningGraph t2 = truncate(t1, caps, false);
    if (export_json(t1) != export_json(t2)) return false;
  }
  return true;
}

// ---------- criterion 9 ----------

bool criterion9() {
  SynthSpec spec;
  spec.n_samples = 8;
  spec.n_drugs = 14;
  spec.n_proteins = 12;
  spec.n_candidates = 3;
  spec.seed = 909;
  SynthResult corpus = synth_generate(spec);
  std::vector<Sample> train_set(corpus.samples.begin(), corpus.samples.begin() + 6);
  std::vector<Sample> dev_set(corpus.samples.begin() + 6, corpus.samples.end());
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 3;
  cfg.model.dims.hidden = 8;
  cfg.model.dims.word_dim = 6;
  cfg.model.dims.know_dim = 4;
  cfg.model.hops = 2;
  TrainResult a = train(train_set, dev_set, corpus.kb, {}, {}, cfg);
  TrainResult b = train(train_set, dev_set, corpus.kb, {}, {}, cfg);
  return a.model.save_json() == b.model.save_json() &&
         eval_report_json(a.best_report, cfg) == eval_report_json(b.best_report, cfg) &&
         a.epoch_loss == b.epoch_loss;
}

// ---------- criterion 10 ----------

// Minimal DOT grammar check: digraph ID { stmt* } where every statement is a
// node line `nID [k=v ...];` or an edge line `nID -> nID [k=v ...];` and all
// attribute values are bare tokens or balanced double-quoted strings.
bool dot_parses(const std::string& text) {
  std::vector<std::string> lines = split(text, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 2) return false;
  if (lines.front().rfind("digraph ", 0) != 0 || lines.front().back() != '{') return false;
  if (lines.back() != "}") return false;
  auto valid_attrs = [](const std::string& s) {
    // inside [ ... ]: space-separated key=value with optional quoted value
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && s[i] == ' ') ++i;
      if (i >= s.size()) break;
      std::size_t eq = s.find('=', i);
      if (eq == std::string::npos || eq == i) return false;
      i = eq + 1;
      if (i >= s.size()) return false;
      if (s[i] == '"') {
        std::size_t close = s.find('"', i + 1);
        if (close == std::string::npos) return false;
        i = close + 1;
      } else {
        while (i < s.size() && s[i] != ' ') ++i;
      }
    }
    return true;
  };
  for (std::size_t li = 1; li + 1 < lines.size(); ++li) {
    std::string s = lines[li];
    if (s.rfind("  ", 0) != 0) return false;
    s = s.substr(2);
    if (s.empty() || s.back() != ';') return false;
    s.pop_back();
    bool default_stmt = s.rfind("node ", 0) == 0;  // default-attribute statement
    if (default_stmt) s = s.substr(5);
    std::size_t lb = s.find('[');
    if (lb != std::string::npos) {
      if (s.back() != ']') return false;
      if (!valid_attrs(s.substr(lb + 1, s.size() - lb - 2))) return false;
      s = s.substr(0, lb);
      while (!s.empty() && s.back() == ' ') s.pop_back();
    }
    if (default_stmt) {
      if (!s.empty()) return false;
      continue;
    }
    auto arrow = s.find(" -> ");
    if (arrow != std::string::npos) {
      std::string a = s.substr(0, arrow), b = s.substr(arrow + 4);
      if (a.empty() || b.empty() || a.find(' ') != std::string::npos || b.find(' ') != std::string::npos)
        return false;
    } else if (s.empty() || s.find(' ') != std::string::npos) {
      return false;
    }
  }
  return true;
}

bool criterion10() {
  SynthSpec spec;
  spec.n_samples = 6;
  spec.seed = 1010;
  SynthResult corpus = synth_generate(spec);

  // samples JSON
  std::string stext = save_samples(corpus.samples);
  if (save_samples(parse_samples(stext)) != stext) return false;

  // KB TSVs
  std::string tsv = corpus.kb.save_triplets();
  std::string ptsv = corpus.kb.save_pathways();
  KnowledgeBase kb2;
  {
    std::string tp = "/tmp/acc_triplets.tsv", pp = "/tmp/acc_pathways.tsv";
    write_file(tp, tsv);
    write_file(pp, ptsv);
    kb2.load_triplets(tp);
    kb2.load_pathways(pp);
  }
  if (kb2.save_triplets() != tsv || kb2.save_pathways() != ptsv) return false;

  // embeddings
  TransConfig ec;
  ec.dim = 8;
  ec.epochs = 2;
  EmbeddingTable table = train_embeddings(corpus.kb, ec);
  std::string etext = export_embeddings(table);
  if (export_embeddings(import_embeddings_text(etext)) != etext) return false;

  // graph JSON and DOT
  EntityCatalog cat = EntityCatalog::from_kb(corpus.kb);
  for (const Sample& s : corpus.samples) {
    std::vector<TokenizedDoc> docs;
    for (const auto& d : s.supports) docs.push_back(tokenize(d, cat));
    ReasoningGraph g = build_graph(s, docs, corpus.kb);
    std::string gtext = export_json(g);
    if (export_json(import_json(gtext)) != gtext) return false;
    GraphScores scores;
    scores.edge_weights.assign(g.edges.size(), 0.4);
    scores.node_scores.assign(g.nodes.size(), 0.6);
    if (!dot_parses(export_dot(g))) return false;
    if (!dot_parses(export_dot(g, &scores))) return false;
  }
  return true;
}

struct Outcome {
  int id;
  bool pass;
  std::string detail;
  double secs;
};

}  // namespace

int main() {
  std::vector<Outcome> results;
  auto run = [&](int id, double limit, const std::function<bool(std::string*)>& fn) {
    Outcome o;
    o.id = id;
    auto t0 = Clock::now();
    std::string detail;
    try {
      o.pass = fn(&detail);
    } catch (const std::exception& e) {
      o.pass = false;
      detail = std::string("exception: ") + e.what();
    }
    o.secs = seconds_since(t0);
    if (limit > 0 && o.secs > limit) {
      o.pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
    }
    o.detail = detail;
    results.push_back(o);
  };

  run(1, 10, [](std::string* d) {
    *d = "protein selection equals BFS oracle on 500 random KBs";
    return criterion1();
  });
  run(2, 10, [](std::string* d) {
    *d = "edge construction equals the quadratic rule oracle on 200 node sets";
    return criterion2();
  });
  run(3, 60, [](std::string* d) {
    *d = "per-op and end-to-end gradients match finite differences";
    return criterion3();
  });
  run(4, 0, [](std::string* d) {
    *d = "link-prediction metrics equal the exhaustive ranking oracle";
    return criterion4();
  });
  run(5, 120, [](std::string* d) {
    double trained = 0, untrained = 0;
    bool ok = criterion5(&trained, &untrained);
    char buf[128];
    std::snprintf(buf, sizeof buf, "trained filtered hits@10 %.3f (floor %.2f), untrained %.3f (ceiling %.2f)",
                  trained, kTrainedHits10Floor, untrained, kUntrainedHits10Ceil);
    *d = buf;
    return ok;
  });

  LearnabilityResult lr;
  bool learn_ran = true;
  std::string learn_err;
  auto t0 = Clock::now();
  try {
    lr = run_learnability();
  } catch (const std::exception& e) {
    learn_ran = false;
    learn_err = e.what();
  }
  double learn_secs = seconds_since(t0);
  run(6, 0, [&](std::string* d) {
    if (!learn_ran) {
      *d = "exception: " + learn_err;
      return false;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "dev accuracy per seed %.3f/%.3f/%.3f vs floor %.3f (%.0fs incl. training)",
                  lr.full_dev[0], lr.full_dev[1], lr.full_dev[2], kDevAccuracyFloor, learn_secs);
    *d = buf;
    return learn_secs <= 900 && criterion6(lr);
  });
  run(7, 0, [&](std::string* d) {
    if (!learn_ran) {
      *d = "exception: " + learn_err;
      return false;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "graph-free arm %.3f/%.3f/%.3f vs full %.3f/%.3f/%.3f", lr.nogr_dev[0],
                  lr.nogr_dev[1], lr.nogr_dev[2], lr.full_dev[0], lr.full_dev[1], lr.full_dev[2]);
    *d = buf;
    return criterion7(lr);
  });

  run(8, 0, [](std::string* d) {
    *d = "equivariance, gate convexity, attention normalization, truncation, determinism";
    return criterion8();
  });
  run(9, 0, [](std::string* d) {
    *d = "identical seed/config/data give bitwise-identical checkpoints and reports";
    return criterion9();
  });
  run(10, 0, [](std::string* d) {
    *d = "samples/KB/embeddings/graph round-trips and DOT grammar";
    return criterion10();
  });

  bool all = true;
  for (const Outcome& o : results) {
    all = all && o.pass;
    std::printf("criterion %2d: %s  %s (%.1fs)\n", o.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), o.secs);
  }
  return all ? 0 : 1;
}
