#include "medkg/reader.hpp"

namespace medkg {

void init_reader(ParamStore& store, const ReaderDims& dims, int vocab_size, Rng& rng) {
  if (dims.hidden % 2 != 0) throw ContractError("encoder hidden size must be even");
  store.create("word_emb", vocab_size, dims.word_dim, 0.1, rng);
  init_bilstm(store, "enc.doc", dims.word_dim, dims.hidden, rng);
  init_bilstm(store, "enc.question", dims.word_dim, dims.hidden, rng);
  init_bilstm(store, "enc.candidate", dims.word_dim, dims.hidden, rng);
  init_bilstm(store, "enc.coattend", dims.hidden, dims.hidden, rng);
}

EncodedSample encode(BoundParams& bp, const ReaderDims& dims, const std::vector<int>& question_tokens,
                     const std::vector<std::vector<int>>& doc_tokens,
                     const std::vector<std::vector<int>>& candidate_tokens) {
  Tape& tape = bp.tape();
  if (question_tokens.empty()) throw ValidationError("cannot encode an empty question");
  Var emb = bp("word_emb");
  EncodedSample out;
  out.question = bilstm(bp, "enc.question", tape.rows(emb, question_tokens), dims.hidden);
  for (std::size_t i = 0; i < doc_tokens.size(); ++i) {
    if (doc_tokens[i].empty()) {
      out.warnings.push_back("document " + std::to_string(i) + " is empty, skipped");
      out.docs.emplace_back();
      continue;
    }
    out.docs.emplace_back(bilstm(bp, "enc.doc", tape.rows(emb, doc_tokens[i]), dims.hidden));
  }
  for (const auto& toks : candidate_tokens) {
    if (toks.empty()) throw ContractError("candidate with no tokens");
    Var states = bilstm(bp, "enc.candidate", tape.rows(emb, toks), dims.hidden);
    out.candidates.push_back(tape.value(states).n_rows == 1 ? states : tape.mean_rows(states));
  }
  return out;
}

Var node_states(BoundParams& bp, const GraphNode& node, const EncodedSample& enc) {
  Tape& tape = bp.tape();
  if (node.doc < 0) throw ContractError("node_states needs a document span");
  const auto& doc = enc.docs.at(static_cast<std::size_t>(node.doc));
  if (!doc) throw ContractError("node refers to an empty document");
  const Tensor& states = tape.value(*doc);
  if (node.span_begin < 0 || node.span_end > states.n_rows || node.span_begin >= node.span_end)
    throw ContractError("node span out of document bounds");
  std::vector<int> idx;
  for (int t = node.span_begin; t < node.span_end; ++t) idx.push_back(t);
  Var span = tape.rows(*doc, idx);
  return idx.size() == 1 ? span : tape.mean_rows(span);
}

CoattendOut coattend(BoundParams& bp, const ReaderDims& dims, Var h_node, Var h_question) {
  Tape& tape = bp.tape();
  const Tensor& hn = tape.value(h_node);
  const Tensor& hq = tape.value(h_question);
  if (hn.n_rows != 1 || hn.n_cols != hq.n_cols)
    throw ShapeError("coattend expects 1xh node state vs l_q x h question, got " + hn.shape_str() + " and " +
                     hq.shape_str());
  Var affinity = tape.matmul(h_node, tape.transpose(h_question));          // 1 x l_q
  Var ctx_q = tape.matmul(tape.softmax(tape.transpose(affinity), 1), h_node);  // l_q x h
  Var attn = tape.softmax(affinity, 1);                                    // 1 x l_q
  CoattendOut out;
  out.context = tape.matmul(attn, h_question);                             // 1 x h
  out.summary = bilstm(bp, "enc.coattend", tape.matmul(attn, ctx_q), dims.hidden);
  return out;
}

Var fuse(BoundParams& bp, const ReaderDims& dims, const CoattendOut& co, Var k_transe, Var k_transh) {
  Tape& tape = bp.tape();
  if (tape.value(k_transe).n_cols != dims.know_dim || tape.value(k_transh).n_cols != dims.know_dim)
    throw ShapeError("knowledge vector dim mismatch");
  return tape.concat({co.context, co.summary, k_transe, k_transh}, 1);
}

Var knowledge_vector(Tape& tape, const EmbeddingTable& table, const EntityId& id, int dim, std::uint64_t seed,
                     bool zero, bool finetune) {
  Tensor t(1, dim);
  if (!zero) {
    std::vector<double> v;
    if (table.dim == dim && table.has_entity(id))
      v = table.entity(id);
    else
      v = missing_entity_vector(id, dim, seed);
    t = Tensor(1, dim, std::move(v));
  }
  return tape.input(std::move(t), finetune && !zero);
}

}  // namespace medkg
