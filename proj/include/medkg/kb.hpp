#ifndef MEDKG_KB_HPP
#define MEDKG_KB_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "medkg/common.hpp"

namespace medkg {

enum class EntityKind { Drug, Protein };

struct EntityId {
  EntityKind kind;
  std::string accession;

  bool operator<(const EntityId& o) const {
    if (kind != o.kind) return kind < o.kind;
    return accession < o.accession;
  }
  bool operator==(const EntityId& o) const { return kind == o.kind && accession == o.accession; }

  static EntityId drug(std::string acc) { return {EntityKind::Drug, std::move(acc)}; }
  static EntityId protein(std::string acc) { return {EntityKind::Protein, std::move(acc)}; }
  std::string str() const { return (kind == EntityKind::Drug ? "drug:" : "protein:") + accession; }
};

// One (protein, action, drug) fact.
struct Triplet {
  EntityId protein;
  std::string action;
  EntityId drug;

  bool operator<(const Triplet& o) const {
    if (!(protein == o.protein)) return protein < o.protein;
    if (action != o.action) return action < o.action;
    return drug < o.drug;
  }
  bool operator==(const Triplet& o) const {
    return protein == o.protein && action == o.action && drug == o.drug;
  }
};

// Directed protein-protein pathway pair.
struct PathwayPair {
  EntityId from;
  EntityId to;
  bool operator<(const PathwayPair& o) const {
    if (!(from == o.from)) return from < o.from;
    return to < o.to;
  }
};

struct LoadReport {
  std::size_t rows = 0;        // rows kept
  std::size_t duplicates = 0;  // dropped as exact repeats
  std::vector<std::string> warnings;
};

class KnowledgeBase {
 public:
  // triplets TSV: <protein>\t<action>\t<drug>; '#' lines are comments
  LoadReport load_triplets(const std::string& path);
  // pathways TSV: <from_protein>\t<to_protein>; self-loops skipped with a warning
  LoadReport load_pathways(const std::string& path);

  void add_triplet(const Triplet& t);
  void add_pathway(const EntityId& from, const EntityId& to);

  // F(d): proteins appearing with drug d in any triplet. Unknown drug -> empty.
  std::set<EntityId> targets_of(const EntityId& drug) const;
  // G(p): pathway neighbors. Undirected query unions both arrow directions.
  std::set<EntityId> interactors_of(const EntityId& protein, bool directed = false) const;
  bool has_pathway_either(const EntityId& a, const EntityId& b) const;
  bool is_target(const EntityId& protein, const EntityId& drug) const;
  bool has_triplet(const Triplet& t) const { return triplets_.count(t) > 0; }

  const std::set<Triplet>& triplets() const { return triplets_; }
  const std::set<PathwayPair>& pathways() const { return pathways_; }
  std::vector<EntityId> drugs() const;
  std::vector<EntityId> proteins() const;
  std::vector<std::string> actions() const;

  // canonical form: sorted, deduped, one row per line
  std::string save_triplets() const;
  std::string save_pathways() const;

 private:
  std::set<Triplet> triplets_;
  std::set<PathwayPair> pathways_;
  std::map<EntityId, std::set<EntityId>> drug_targets_;
  std::map<EntityId, std::set<EntityId>> pathway_out_;
  std::map<EntityId, std::set<EntityId>> pathway_in_;
};

}  // namespace medkg

#endif
