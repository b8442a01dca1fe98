#include "medkg/kg_embed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace medkg {

namespace {

void check_dim(std::size_t a, std::size_t b) {
  if (a != b)
    throw ShapeError("vector dims disagree: " + std::to_string(a) + " vs " + std::to_string(b));
}

double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

const std::vector<double>& EmbeddingTable::entity(const EntityId& id) const {
  auto it = entities.find(id);
  if (it == entities.end()) throw ValidationError("entity missing from embedding table: " + id.str());
  return it->second;
}

double score_transe(const std::vector<double>& p, const std::vector<double>& l, const std::vector<double>& d) {
  check_dim(p.size(), l.size());
  check_dim(p.size(), d.size());
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double x = p[i] + l[i] - d[i];
    s += x * x;
  }
  return std::sqrt(s);
}

double score_transh(const std::vector<double>& p, const std::vector<double>& l, const std::vector<double>& d,
                    const std::vector<double>& w) {
  check_dim(p.size(), l.size());
  check_dim(p.size(), d.size());
  check_dim(p.size(), w.size());
  if (std::abs(l2(w) - 1.0) > 1e-6) throw ContractError("TransH hyperplane normal must be unit length");
  double pw = 0, dw = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pw += p[i] * w[i];
    dw += d[i] * w[i];
  }
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double x = (p[i] - pw * w[i]) + l[i] - (d[i] - dw * w[i]);
    s += x * x;
  }
  return std::sqrt(s);
}

Triplet negative_sample(const Triplet& t, const std::vector<EntityId>& proteins, const std::vector<EntityId>& drugs,
                        const KnowledgeBase& kb, Rng& rng, int max_retries) {
  if (proteins.size() < 2 || drugs.size() < 2)
    throw ContractError("negative sampling needs at least 2 proteins and 2 drugs");
  for (int i = 0; i < max_retries; ++i) {
    Triplet neg = t;
    if (rand_index(rng, 2) == 0)
      neg.protein = proteins[rand_index(rng, proteins.size())];
    else
      neg.drug = drugs[rand_index(rng, drugs.size())];
    if (!(neg == t) && !kb.has_triplet(neg)) return neg;
  }
  throw ContractError("could not sample a negative triplet (knowledge base too dense)");
}

std::vector<double> missing_entity_vector(const EntityId& id, int dim, std::uint64_t seed) {
  Rng rng(seed ^ fnv1a64(id.str()));
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (auto& x : v) x = randn(rng, 0.1);
  return v;
}

EmbeddingTable train_embeddings(const KnowledgeBase& kb, const TransConfig& cfg, TrainTrace* trace) {
  cfg.validate();
  if (kb.triplets().empty()) throw ValidationError("cannot train embeddings on an empty knowledge base");
  std::vector<Triplet> triplets(kb.triplets().begin(), kb.triplets().end());
  std::vector<EntityId> proteins = kb.proteins();
  std::vector<EntityId> drugs = kb.drugs();
  std::vector<EntityId> entities;
  entities.insert(entities.end(), drugs.begin(), drugs.end());
  entities.insert(entities.end(), proteins.begin(), proteins.end());
  std::vector<std::string> relations = kb.actions();

  std::map<EntityId, int> erow;
  for (std::size_t i = 0; i < entities.size(); ++i) erow[entities[i]] = static_cast<int>(i);
  std::map<std::string, int> rrow;
  for (std::size_t i = 0; i < relations.size(); ++i) rrow[relations[i]] = static_cast<int>(i);

  Rng rng(cfg.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> uni(-bound, bound);
  auto uniform_init = [&](int rows) {
    Tensor t(rows, cfg.dim);
    for (auto& v : t.data) v = uni(rng);
    return t;
  };
  Tensor ent = uniform_init(static_cast<int>(entities.size()));
  Tensor rel = uniform_init(static_cast<int>(relations.size()));
  Tensor nrm = uniform_init(static_cast<int>(relations.size()));

  auto renorm_rows = [&](Tensor& t) {
    for (int i = 0; i < t.n_rows; ++i) {
      double s = 0;
      for (int j = 0; j < t.n_cols; ++j) s += t.at(i, j) * t.at(i, j);
      s = std::sqrt(s);
      if (s > 0)
        for (int j = 0; j < t.n_cols; ++j) t.at(i, j) /= s;
    }
  };
  renorm_rows(ent);
  if (cfg.model == TransModel::TransH) renorm_rows(nrm);

  const bool transh = cfg.model == TransModel::TransH;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!transh) renorm_rows(ent);
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Tape tape;
      Var E = tape.input(ent, true);
      Var R = tape.input(rel, true);
      Var Wn = transh ? tape.input(nrm, true) : Var{};
      auto dist = [&](const Triplet& t) {
        Var p = tape.row(E, erow.at(t.protein));
        Var l = tape.row(R, rrow.at(t.action));
        Var d = tape.row(E, erow.at(t.drug));
        Var diff;
        if (transh) {
          Var w = tape.row(Wn, rrow.at(t.action));
          Var pp = tape.sub(p, tape.mul(w, tape.sum(tape.mul(p, w))));
          Var dp = tape.sub(d, tape.mul(w, tape.sum(tape.mul(d, w))));
          diff = tape.sub(tape.add(pp, l), dp);
        } else {
          diff = tape.sub(tape.add(p, l), d);
        }
        return tape.sqrt_(tape.shift(tape.sum(tape.mul(diff, diff)), 1e-12));
      };
      std::vector<Var> hinges;
      for (std::size_t k = start; k < end; ++k) {
        const Triplet& pos = triplets[order[k]];
        Var dpos = dist(pos);
        for (int neg_i = 0; neg_i < cfg.negatives; ++neg_i) {
          Triplet neg = negative_sample(pos, proteins, drugs, kb, rng);
          hinges.push_back(tape.relu(tape.shift(tape.sub(dpos, dist(neg)), cfg.margin)));
        }
      }
      Var loss = tape.scale(tape.sum(tape.stack_scalars(hinges)), 1.0 / static_cast<double>(hinges.size()));
      epoch_loss += tape.value(loss).data[0] * static_cast<double>(hinges.size());
      tape.backward(loss);
      const Tensor& ge = tape.grad(E);
      for (std::size_t i = 0; i < ent.size(); ++i) ent.data[i] -= cfg.lr * ge.data[i];
      const Tensor& gr = tape.grad(R);
      for (std::size_t i = 0; i < rel.size(); ++i) rel.data[i] -= cfg.lr * gr.data[i];
      if (transh) {
        const Tensor& gn = tape.grad(Wn);
        for (std::size_t i = 0; i < nrm.size(); ++i) nrm.data[i] -= cfg.lr * gn.data[i];
        renorm_rows(nrm);
      }
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(triplets.size() * cfg.negatives));
  }
  if (!transh) renorm_rows(ent);

  EmbeddingTable table;
  table.model = cfg.model;
  table.dim = cfg.dim;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    auto& v = table.entities[entities[i]];
    v.assign(ent.data.begin() + static_cast<long>(i) * cfg.dim, ent.data.begin() + static_cast<long>(i + 1) * cfg.dim);
  }
  for (std::size_t i = 0; i < relations.size(); ++i) {
    auto& v = table.relations[relations[i]];
    v.assign(rel.data.begin() + static_cast<long>(i) * cfg.dim, rel.data.begin() + static_cast<long>(i + 1) * cfg.dim);
    if (transh) {
      auto& w = table.normals[relations[i]];
      w.assign(nrm.data.begin() + static_cast<long>(i) * cfg.dim, nrm.data.begin() + static_cast<long>(i + 1) * cfg.dim);
    }
  }
  return table;
}

LinkPredictionReport eval_link_prediction(const EmbeddingTable& table, const KnowledgeBase& kb,
                                          const std::vector<Triplet>& test, bool filtered) {
  std::vector<EntityId> proteins = kb.proteins();
  std::vector<EntityId> drugs = kb.drugs();
  std::vector<std::string> missing;
  for (const auto& e : proteins)
    if (!table.has_entity(e)) missing.push_back(e.str());
  for (const auto& e : drugs)
    if (!table.has_entity(e)) missing.push_back(e.str());
  if (!missing.empty()) {
    std::string msg = "entities missing from embedding table:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  auto score = [&](const Triplet& t) {
    const auto& p = table.entity(t.protein);
    const auto& l = table.relations.at(t.action);
    const auto& d = table.entity(t.drug);
    if (table.model == TransModel::TransH) return score_transh(p, l, d, table.normals.at(t.action));
    return score_transe(p, l, d);
  };

  std::vector<int> ranks;
  for (const Triplet& t : test) {
    double true_score = score(t);
    // tail replacement over drugs, then head replacement over proteins
    for (int dir = 0; dir < 2; ++dir) {
      int below = 0, tied = 0;
      const auto& pool = dir == 0 ? drugs : proteins;
      for (const auto& cand : pool) {
        Triplet alt = t;
        if (dir == 0)
          alt.drug = cand;
        else
          alt.protein = cand;
        if (alt == t) continue;
        if (filtered && kb.has_triplet(alt)) continue;
        double s = score(alt);
        if (s < true_score)
          ++below;
        else if (s == true_score)
          ++tied;  // pessimistic: equal scores rank ahead of the true entity
      }
      ranks.push_back(1 + below + tied);
    }
  }

  LinkPredictionReport rep;
  rep.filtered = filtered;
  if (ranks.empty()) return rep;
  double n = static_cast<double>(ranks.size());
  for (int r : ranks) {
    rep.mr += r;
    rep.mrr += 1.0 / r;
    rep.hits1 += r <= 1;
    rep.hits3 += r <= 3;
    rep.hits10 += r <= 10;
  }
  rep.mr /= n;
  rep.mrr /= n;
  rep.hits1 /= n;
  rep.hits3 /= n;
  rep.hits10 /= n;
  return rep;
}

std::string export_embeddings(const EmbeddingTable& table) {
  std::ostringstream out;
  out << "medkg-emb v1 model=" << (table.model == TransModel::TransE ? "transe" : "transh") << " dim=" << table.dim
      << " entities=" << table.entities.size() << " relations=" << table.relations.size() << "\n";
  auto emit = [&](const std::string& id, const std::vector<double>& v) {
    out << id << '\t';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ',';
      out << format_double(v[i]);
    }
    out << '\n';
  };
  for (const auto& [id, v] : table.entities) emit(id.str(), v);
  for (const auto& [name, v] : table.relations) emit("rel:" + name, v);
  for (const auto& [name, v] : table.normals) emit("norm:" + name, v);
  return out.str();
}

void export_embeddings(const EmbeddingTable& table, const std::string& path) {
  write_file(path, export_embeddings(table));
}

EmbeddingTable import_embeddings_text(const std::string& content) {
  std::istringstream in(content);
  std::string header;
  if (!std::getline(in, header)) throw ValidationError("embedding file is empty");
  auto fields = split(header, ' ');
  if (fields.size() != 6 || fields[0] != "medkg-emb")
    throw ValidationError("unrecognized embedding file header: " + header);
  if (fields[1] != "v1") throw ValidationError("unsupported embedding file version: " + fields[1]);
  auto kv = [&](std::size_t i, const std::string& key) {
    auto parts = split(fields[i], '=');
    if (parts.size() != 2 || parts[0] != key) throw ValidationError("bad embedding header field: " + fields[i]);
    return parts[1];
  };
  EmbeddingTable table;
  std::string model = kv(2, "model");
  if (model == "transe")
    table.model = TransModel::TransE;
  else if (model == "transh")
    table.model = TransModel::TransH;
  else
    throw ValidationError("unknown embedding model: " + model);
  table.dim = std::stoi(kv(3, "dim"));
  std::size_t n_entities = std::stoul(kv(4, "entities"));
  std::size_t n_relations = std::stoul(kv(5, "relations"));

  std::string line;
  std::size_t seen_entities = 0, seen_relations = 0, seen_normals = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 2) throw ValidationError("malformed embedding row: " + line);
    std::vector<double> v;
    for (const auto& tok : split(cols[1], ',')) v.push_back(std::stod(tok));
    if (static_cast<int>(v.size()) != table.dim)
      throw ValidationError("embedding row dim " + std::to_string(v.size()) + " disagrees with header dim " +
                            std::to_string(table.dim));
    const std::string& id = cols[0];
    if (id.rfind("drug:", 0) == 0) {
      table.entities[EntityId::drug(id.substr(5))] = v;
      ++seen_entities;
    } else if (id.rfind("protein:", 0) == 0) {
      table.entities[EntityId::protein(id.substr(8))] = v;
      ++seen_entities;
    } else if (id.rfind("rel:", 0) == 0) {
      table.relations[id.substr(4)] = v;
      ++seen_relations;
    } else if (id.rfind("norm:", 0) == 0) {
      table.normals[id.substr(5)] = v;
      ++seen_normals;
    } else {
      throw ValidationError("unknown embedding row id: " + id);
    }
  }
  if (seen_entities != n_entities || seen_relations != n_relations ||
      (table.model == TransModel::TransH && seen_normals != n_relations))
    throw ValidationError("embedding file truncated: row counts disagree with header");
  return table;
}

EmbeddingTable import_embeddings(const std::string& path) { return import_embeddings_text(read_file(path)); }

}  // namespace medkg
