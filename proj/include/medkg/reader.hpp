#ifndef MEDKG_READER_HPP
#define MEDKG_READER_HPP

#include <optional>

#include "medkg/corpus.hpp"
#include "medkg/graph.hpp"
#include "medkg/kg_embed.hpp"
#include "medkg/params.hpp"

namespace medkg {

struct ReaderDims {
  int hidden = 64;    // h, even
  int word_dim = 64;
  int know_dim = 32;  // d_k
  int rep_dim() const { return 2 * hidden + 2 * know_dim; }
};

// Registers the word embedding and the document/question/candidate encoders
// plus the co-attention encoder f. The three sequence encoders share no
// parameters.
void init_reader(ParamStore& store, const ReaderDims& dims, int vocab_size, Rng& rng);

struct EncodedSample {
  Var question;                          // l_q x h
  std::vector<std::optional<Var>> docs;  // per document, empty when the doc had no tokens
  std::vector<Var> candidates;           // per candidate, 1 x h
  std::vector<std::string> warnings;
};

EncodedSample encode(BoundParams& bp, const ReaderDims& dims, const std::vector<int>& question_tokens,
                     const std::vector<std::vector<int>>& doc_tokens,
                     const std::vector<std::vector<int>>& candidate_tokens);

// Mean-pool of the document states across the node's span -> 1 x h.
Var node_states(BoundParams& bp, const GraphNode& node, const EncodedSample& enc);

struct CoattendOut {
  Var context;  // C_node, 1 x h
  Var summary;  // D_node, 1 x h
};

CoattendOut coattend(BoundParams& bp, const ReaderDims& dims, Var h_node, Var h_question);

// [C || D || K_transe || K_transh] -> 1 x (2h + 2 d_k)
Var fuse(BoundParams& bp, const ReaderDims& dims, const CoattendOut& co, Var k_transe, Var k_transh);

// Knowledge lookup as a tape constant (or trainable when finetune is set);
// entities absent from a table get a vector deterministic in (seed, id).
Var knowledge_vector(Tape& tape, const EmbeddingTable& table, const EntityId& id, int dim, std::uint64_t seed,
                     bool zero, bool finetune = false);

}  // namespace medkg

#endif
