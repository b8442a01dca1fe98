#ifndef MEDKG_MODEL_HPP
#define MEDKG_MODEL_HPP

#include "medkg/gat.hpp"
#include "medkg/reader.hpp"

namespace medkg {

struct ModelConfig {
  ReaderDims dims;
  int heads = 1;
  int hops = 5;
  bool finetune_knowledge = false;

  // ablation switches
  bool no_knowledge_fusion = false;
  bool no_graph_reasoning = false;
  bool merge_edge_types = false;
  bool drop_subject = false;
  bool drop_reasoning = false;
  bool drop_mention = false;
  bool drop_candidate = false;

  int rep_dim() const { return dims.rep_dim(); }
  void validate() const;
};

// A sample with everything the forward pass needs precomputed: tokenized
// documents, the reasoning graph (possibly with ablation node kinds removed),
// and vocabulary-indexed token sequences.
struct PreparedSample {
  Sample sample;
  std::vector<TokenizedDoc> docs;
  ReasoningGraph graph;
  std::vector<int> question_tokens;
  std::vector<std::vector<int>> doc_tokens;
  std::vector<std::vector<int>> candidate_tokens;  // parallel to graph.candidate_order
  int gold = -1;  // index into graph.candidate_order, -1 when blind or truncated away
};

struct ForwardResult {
  std::vector<Var> scores;  // parallel to graph.candidate_order
  Var loss;                 // valid only when gold >= 0
  int predicted = -1;       // argmax with lowest-index tie rule
  GraphScores graph_scores;
  std::vector<std::string> warnings;
};

class Model {
 public:
  ModelConfig config;
  Vocabulary vocab;
  EmbeddingTable transe;
  EmbeddingTable transh;
  std::uint64_t knowledge_seed = 0;
  ParamStore params;

  static Model init(const ModelConfig& cfg, const Vocabulary& vocab, EmbeddingTable transe, EmbeddingTable transh,
                    std::uint64_t seed);

  PreparedSample prepare(const Sample& sample, const KnowledgeBase& kb, const GraphCaps& caps, bool training) const;

  ForwardResult forward(BoundParams& bp, const PreparedSample& ps, bool want_loss, bool want_trace = false) const;

  std::string save_json() const;
  static Model load_json(const std::string& text);
};

int argmax_score(const std::vector<double>& scores);  // lowest index wins ties

}  // namespace medkg

#endif
