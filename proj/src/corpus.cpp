#include "medkg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "json.hpp"

namespace medkg {

using nlohmann::json;

int Sample::answer_index() const {
  if (!answer) return -1;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i] == *answer) return static_cast<int>(i);
  return -1;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tokens) {
    h = fnv1a64(t.data(), t.size(), h);
    h = fnv1a64("\n", 1, h);
  }
  return h;
}

bool EntityCatalog::contains_token(const std::string& tok, EntityId* out) const {
  EntityId d = EntityId::drug(tok);
  if (entities.count(d)) {
    if (out) *out = d;
    return true;
  }
  EntityId p = EntityId::protein(tok);
  if (entities.count(p)) {
    if (out) *out = p;
    return true;
  }
  return false;
}

EntityCatalog EntityCatalog::from_kb(const KnowledgeBase& kb) {
  EntityCatalog c;
  for (const auto& d : kb.drugs()) c.entities.insert(d);
  for (const auto& p : kb.proteins()) c.entities.insert(p);
  return c;
}

void SynthSpec::validate() const {
  if (chain_min < 2 || chain_max < chain_min) throw ValidationError("chain length range invalid (need >= 2)");
  if (n_candidates < 2) throw ValidationError("candidates per sample must be >= 2");
  if (n_drugs < n_candidates + 1) throw ValidationError("not enough drugs for the candidate set");
  if (n_proteins < chain_max) throw ValidationError("not enough proteins for the longest chain");
  if (docs_min < 1 || docs_max < docs_min) throw ValidationError("docs per sample range invalid");
  if (distractor_rate < 0 || distractor_rate >= 1) throw ValidationError("distractor rate must be in [0,1)");
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (n_actions < 1) throw ValidationError("n_actions must be >= 1");
}

namespace {

Sample sample_from_json(const json& j) {
  Sample s;
  if (!j.contains("id") || !j.contains("query") || !j.contains("candidates") || !j.contains("supports"))
    throw ValidationError("sample missing required field (id/query/candidates/supports)");
  s.id = j.at("id").get<std::string>();
  auto query_parts = split(j.at("query").get<std::string>(), ' ');
  if (query_parts.size() != 2 || query_parts[0] != kRelation)
    throw ValidationError("sample " + s.id + ": query must be '" + kRelation + " <drug>'");
  s.subject = EntityId::drug(query_parts[1]);
  for (const auto& c : j.at("candidates")) s.candidates.push_back(EntityId::drug(c.get<std::string>()));
  if (s.candidates.size() < 2)
    throw ValidationError("sample " + s.id + ": fewer than 2 candidates, no decision to make");
  for (const auto& d : j.at("supports")) s.supports.push_back(d.get<std::string>());
  if (j.contains("answer")) {
    s.answer = EntityId::drug(j.at("answer").get<std::string>());
    if (s.answer_index() < 0) throw ValidationError("sample " + s.id + ": answer is not among the candidates");
  }
  return s;
}

json sample_to_json(const Sample& s) {
  json j;
  j["id"] = s.id;
  j["query"] = kRelation + " " + s.subject.accession;
  j["candidates"] = json::array();
  for (const auto& c : s.candidates) j["candidates"].push_back(c.accession);
  j["supports"] = s.supports;
  if (s.answer) j["answer"] = s.answer->accession;
  return j;
}

bool is_detachable_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string chunk;
  while (in >> chunk) {
    std::string tail;
    while (chunk.size() > 1 && is_detachable_punct(chunk.back())) {
      tail.insert(tail.begin(), chunk.back());
      chunk.pop_back();
    }
    tokens.push_back(chunk);
    for (char c : tail) tokens.push_back(std::string(1, c));
  }
  return tokens;
}

}  // namespace

std::vector<Sample> parse_samples(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("samples JSON malformed: ") + e.what());
  }
  if (!j.is_array()) throw ValidationError("samples JSON must be an array");
  std::vector<Sample> out;
  for (const auto& item : j) out.push_back(sample_from_json(item));
  return out;
}

std::vector<Sample> load_samples(const std::string& path) { return parse_samples(read_file(path)); }

std::string save_samples(const std::vector<Sample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) arr.push_back(sample_to_json(s));
  return arr.dump(2) + "\n";
}

TokenizedDoc tokenize(const std::string& doc, const EntityCatalog& catalog) {
  TokenizedDoc out;
  out.tokens = split_tokens(doc);
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    EntityId e = EntityId::drug("");
    if (catalog.contains_token(out.tokens[i], &e))
      out.spans.push_back({static_cast<int>(i), static_cast<int>(i) + 1, e});
  }
  return out;
}

std::pair<Vocabulary, Tensor> build_vocab(const std::vector<Sample>& samples, int dim, std::uint64_t seed) {
  if (dim < 1) throw ValidationError("embedding dim must be >= 1");
  Vocabulary v;
  v.tokens = {"<pad>", "<unk>"};
  v.index = {{"<pad>", Vocabulary::kPad}, {"<unk>", Vocabulary::kUnk}};
  auto add = [&](const std::string& tok) {
    if (!v.index.count(tok)) {
      v.index[tok] = v.size();
      v.tokens.push_back(tok);
    }
  };
  for (const auto& s : samples) {
    add(kRelation);
    add(s.subject.accession);
    for (const auto& c : s.candidates) add(c.accession);
    for (const auto& doc : s.supports)
      for (const auto& tok : split_tokens(doc)) add(tok);
  }
  Rng rng(seed);
  Tensor emb = Tensor::randn(v.size(), dim, 0.1, rng);
  for (int j = 0; j < dim; ++j) emb.at(Vocabulary::kPad, j) = 0.0;
  return {std::move(v), std::move(emb)};
}

bool kb_reachable(const KnowledgeBase& kb, const EntityId& subject, const EntityId& drug,
                  const std::set<EntityId>& in_text) {
  std::set<EntityId> visited;
  std::deque<EntityId> frontier;
  for (const auto& p : kb.targets_of(subject))
    if (in_text.count(p)) frontier.push_back(p);
  while (!frontier.empty()) {
    EntityId p = frontier.front();
    frontier.pop_front();
    if (!visited.insert(p).second) continue;
    for (const auto& q : kb.interactors_of(p, /*directed=*/false))
      if (in_text.count(q)) frontier.push_back(q);
  }
  for (const auto& p : visited)
    if (kb.is_target(p, drug)) return true;
  return false;
}

SynthResult synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  const std::vector<std::string> base_actions = {"inhibitor", "blocker",    "activator", "agonist",  "antagonist",
                                                 "cofactor",  "substrate",  "inducer",   "binder",   "modulator"};
  std::vector<std::string> actions;
  for (int i = 0; i < spec.n_actions; ++i) {
    if (i < static_cast<int>(base_actions.size()))
      actions.push_back(base_actions[static_cast<std::size_t>(i)]);
    else
      actions.push_back("action_" + std::to_string(i + 1));
  }
  auto rand_action = [&]() { return actions[rand_index(rng, actions.size())]; };

  std::vector<EntityId> drugs, proteins;
  for (int i = 0; i < spec.n_drugs; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "DB%05d", i + 1);
    drugs.push_back(EntityId::drug(buf));
  }
  for (int i = 0; i < spec.n_proteins; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "P%05d", i + 1);
    proteins.push_back(EntityId::protein(buf));
  }

  SynthResult result;
  KnowledgeBase& kb = result.kb;

  // background facts
  for (const auto& d : drugs) {
    int n = 1 + static_cast<int>(rand_index(rng, 3));
    for (int i = 0; i < n; ++i) kb.add_triplet({proteins[rand_index(rng, proteins.size())], rand_action(), d});
  }
  for (int i = 0; i < spec.n_proteins; ++i) {
    EntityId a = proteins[rand_index(rng, proteins.size())];
    EntityId b = proteins[rand_index(rng, proteins.size())];
    if (!(a == b)) kb.add_pathway(a, b);
  }

  // phase 1: plant every chain so the emitted KB is final before candidate
  // selection (reachability is judged against the final KB)
  struct Draft {
    PlantedChain chain;
    std::vector<std::string> chain_sentences;
  };
  std::vector<Draft> drafts;
  for (int s = 0; s < spec.n_samples; ++s) {
    Draft d;
    d.chain.sample_id = "synth_" + std::to_string(s + 1);
    d.chain.subject = drugs[rand_index(rng, drugs.size())];
    do {
      d.chain.answer = drugs[rand_index(rng, drugs.size())];
    } while (d.chain.answer == d.chain.subject);
    int links = spec.chain_min + static_cast<int>(rand_index(
                                     rng, static_cast<std::size_t>(spec.chain_max - spec.chain_min + 1)));
    int n_chain_proteins = links - 1;
    std::set<std::size_t> chosen;
    while (static_cast<int>(chosen.size()) < n_chain_proteins) chosen.insert(rand_index(rng, proteins.size()));
    std::vector<std::size_t> order(chosen.begin(), chosen.end());
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) d.chain.proteins.push_back(proteins[i]);

    const auto& cp = d.chain.proteins;
    kb.add_triplet({cp.front(), rand_action(), d.chain.subject});
    d.chain_sentences.push_back(d.chain.subject.accession + " targets " + cp.front().accession + " .");
    for (std::size_t i = 0; i + 1 < cp.size(); ++i) {
      if (!kb.has_pathway_either(cp[i], cp[i + 1])) {
        if (rand_index(rng, 2) == 0)
          kb.add_pathway(cp[i], cp[i + 1]);
        else
          kb.add_pathway(cp[i + 1], cp[i]);
      }
      d.chain_sentences.push_back(cp[i].accession + " interacts with " + cp[i + 1].accession + " .");
    }
    kb.add_triplet({cp.back(), rand_action(), d.chain.answer});
    d.chain_sentences.push_back(d.chain.answer.accession + " targets " + cp.back().accession + " .");
    drafts.push_back(std::move(d));
  }

  // phase 2: distractors, documents, candidates, validation
  std::vector<Triplet> all_triplets(kb.triplets().begin(), kb.triplets().end());
  std::vector<PathwayPair> all_pathways(kb.pathways().begin(), kb.pathways().end());
  for (auto& d : drafts) {
    std::set<EntityId> chain_entities(d.chain.proteins.begin(), d.chain.proteins.end());
    chain_entities.insert(d.chain.subject);
    chain_entities.insert(d.chain.answer);

    std::vector<std::string> sentences = d.chain_sentences;
    std::set<EntityId> in_text(d.chain.proteins.begin(), d.chain.proteins.end());
    int n_distract = static_cast<int>(
        std::lround(spec.distractor_rate * static_cast<double>(sentences.size()) / (1.0 - spec.distractor_rate)));
    for (int i = 0; i < n_distract; ++i) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        if (rand_index(rng, 2) == 0 && !all_triplets.empty()) {
          const Triplet& t = all_triplets[rand_index(rng, all_triplets.size())];
          if (chain_entities.count(t.protein) || chain_entities.count(t.drug)) continue;
          sentences.push_back(t.drug.accession + " targets " + t.protein.accession + " .");
          in_text.insert(t.protein);
        } else if (!all_pathways.empty()) {
          const PathwayPair& p = all_pathways[rand_index(rng, all_pathways.size())];
          if (chain_entities.count(p.from) || chain_entities.count(p.to)) continue;
          sentences.push_back(p.from.accession + " interacts with " + p.to.accession + " .");
          in_text.insert(p.from);
          in_text.insert(p.to);
        } else {
          continue;
        }
        break;
      }
    }

    std::shuffle(sentences.begin(), sentences.end(), rng);
    int n_docs = spec.docs_min + static_cast<int>(rand_index(
                                     rng, static_cast<std::size_t>(spec.docs_max - spec.docs_min + 1)));
    n_docs = std::min<int>(n_docs, static_cast<int>(sentences.size()));
    std::vector<std::string> docs(static_cast<std::size_t>(n_docs));
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      auto& doc = docs[i % static_cast<std::size_t>(n_docs)];
      if (!doc.empty()) doc += " ";
      doc += sentences[i];
    }

    if (!kb_reachable(kb, d.chain.subject, d.chain.answer, in_text))
      throw ContractError("internal: planted answer not reachable in sample " + d.chain.sample_id);
    std::vector<EntityId> decoys;
    for (const auto& dr : drugs)
      if (!(dr == d.chain.answer) && !(dr == d.chain.subject) && !kb_reachable(kb, d.chain.subject, dr, in_text))
        decoys.push_back(dr);
    if (static_cast<int>(decoys.size()) < spec.n_candidates - 1)
      throw ValidationError("synth spec infeasible: not enough non-reachable decoy drugs for sample " +
                            d.chain.sample_id);
    std::shuffle(decoys.begin(), decoys.end(), rng);

    Sample sample;
    sample.id = d.chain.sample_id;
    sample.subject = d.chain.subject;
    sample.supports = docs;
    sample.answer = d.chain.answer;
    sample.candidates.push_back(d.chain.answer);
    for (int i = 0; i < spec.n_candidates - 1; ++i) sample.candidates.push_back(decoys[static_cast<std::size_t>(i)]);
    std::shuffle(sample.candidates.begin(), sample.candidates.end(), rng);
    result.samples.push_back(std::move(sample));
    result.chains.push_back(d.chain);
  }
  return result;
}

std::string ground_truth_json(const SynthResult& result) {
  json arr = json::array();
  for (const auto& c : result.chains) {
    json j;
    j["id"] = c.sample_id;
    j["subject"] = c.subject.accession;
    j["proteins"] = json::array();
    for (const auto& p : c.proteins) j["proteins"].push_back(p.accession);
    j["answer"] = c.answer.accession;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace medkg
