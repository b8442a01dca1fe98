#ifndef MEDKG_CORPUS_HPP
#define MEDKG_CORPUS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medkg/kb.hpp"
#include "medkg/tensor.hpp"

namespace medkg {

inline const std::string kRelation = "interacts_with";

// One question instance: subject drug, the fixed relation, candidate drugs,
// support documents, and optionally the gold answer.
struct Sample {
  std::string id;
  EntityId subject = EntityId::drug("");
  std::vector<EntityId> candidates;
  std::vector<std::string> supports;
  std::optional<EntityId> answer;

  int answer_index() const;  // -1 when blind
};

struct EntitySpan {
  int begin = 0;
  int end = 0;  // exclusive
  EntityId entity = EntityId::drug("");
};

struct TokenizedDoc {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;
};

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  std::vector<std::string> tokens;  // tokens[0]="<pad>", tokens[1]="<unk>"
  std::map<std::string, int> index;

  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? kUnk : it->second;
  }
  int size() const { return static_cast<int>(tokens.size()); }
  std::uint64_t hash() const;
};

struct EntityCatalog {
  std::set<EntityId> entities;
  bool contains_token(const std::string& tok, EntityId* out) const;
  static EntityCatalog from_kb(const KnowledgeBase& kb);
};

struct SynthSpec {
  int n_drugs = 40;
  int n_proteins = 40;
  int n_actions = 57;
  int chain_min = 2;  // links in the planted chain (>= 2: at least one protein hop)
  int chain_max = 3;
  int n_samples = 100;
  int docs_min = 2;
  int docs_max = 4;
  int n_candidates = 9;
  double distractor_rate = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PlantedChain {
  std::string sample_id;
  EntityId subject = EntityId::drug("");
  std::vector<EntityId> proteins;
  EntityId answer = EntityId::drug("");
};

struct SynthResult {
  KnowledgeBase kb;
  std::vector<Sample> samples;
  std::vector<PlantedChain> chains;
};

std::vector<Sample> load_samples(const std::string& path);
std::vector<Sample> parse_samples(const std::string& json_text);
std::string save_samples(const std::vector<Sample>& samples);

TokenizedDoc tokenize(const std::string& doc, const EntityCatalog& catalog);

// Vocabulary over all sample tokens plus a trainable embedding matrix,
// rows drawn from N(0, 0.1^2) with the given seed.
std::pair<Vocabulary, Tensor> build_vocab(const std::vector<Sample>& samples, int dim, std::uint64_t seed);

// True when `drug` is reachable from `subject` through protein targets and
// pathway hops restricted to `in_text` proteins. This is the ground-truth
// solvability relation for generated samples.
bool kb_reachable(const KnowledgeBase& kb, const EntityId& subject, const EntityId& drug,
                  const std::set<EntityId>& in_text);

SynthResult synth_generate(const SynthSpec& spec);

std::string ground_truth_json(const SynthResult& result);

}  // namespace medkg

#endif
