#ifndef MEDKG_KG_EMBED_HPP
#define MEDKG_KG_EMBED_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medkg/kb.hpp"
#include "medkg/tensor.hpp"

namespace medkg {

enum class TransModel { TransE, TransH };

struct TransConfig {
  TransModel model = TransModel::TransE;
  double margin = 1.0;
  int dim = 200;
  int epochs = 1000;
  int negatives = 1;
  double lr = 0.01;
  int batch = 128;
  std::uint64_t seed = 1;

  void validate() const {
    if (margin <= 0) throw ValidationError("margin must be positive");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (dim < 1) throw ValidationError("embedding dim must be >= 1");
    if (negatives < 1) throw ValidationError("negatives per positive must be >= 1");
  }
};

// Trained entity/relation vectors. For TransH each relation also owns a
// unit hyperplane normal.
struct EmbeddingTable {
  TransModel model = TransModel::TransE;
  int dim = 0;
  std::map<EntityId, std::vector<double>> entities;
  std::map<std::string, std::vector<double>> relations;
  std::map<std::string, std::vector<double>> normals;  // TransH only

  const std::vector<double>& entity(const EntityId& id) const;
  bool has_entity(const EntityId& id) const { return entities.count(id) > 0; }
};

struct LinkPredictionReport {
  double mrr = 0, mr = 0, hits1 = 0, hits3 = 0, hits10 = 0;
  bool filtered = false;
};

double score_transe(const std::vector<double>& p, const std::vector<double>& l, const std::vector<double>& d);
// w must be unit-norm within 1e-6
double score_transh(const std::vector<double>& p, const std::vector<double>& l, const std::vector<double>& d,
                    const std::vector<double>& w);

// Corrupts exactly one endpoint (head protein or tail drug, coin flip);
// retries until the result is absent from the true set.
Triplet negative_sample(const Triplet& t, const std::vector<EntityId>& proteins, const std::vector<EntityId>& drugs,
                        const KnowledgeBase& kb, Rng& rng, int max_retries = 100);

struct TrainTrace {
  std::vector<double> epoch_loss;
};

EmbeddingTable train_embeddings(const KnowledgeBase& kb, const TransConfig& cfg, TrainTrace* trace = nullptr);

// Random vectors for entities missing from a table, deterministic in
// (seed, entity id).
std::vector<double> missing_entity_vector(const EntityId& id, int dim, std::uint64_t seed);

LinkPredictionReport eval_link_prediction(const EmbeddingTable& table, const KnowledgeBase& kb,
                                          const std::vector<Triplet>& test, bool filtered);
inline LinkPredictionReport eval_link_prediction(const EmbeddingTable& table, const KnowledgeBase& kb,
                                                 bool filtered) {
  std::vector<Triplet> test(kb.triplets().begin(), kb.triplets().end());
  return eval_link_prediction(table, kb, test, filtered);
}

std::string export_embeddings(const EmbeddingTable& table);
void export_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable import_embeddings_text(const std::string& content);
EmbeddingTable import_embeddings(const std::string& path);

}  // namespace medkg

#endif
