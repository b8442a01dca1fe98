#include "medkg/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace medkg {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch < 1) throw ValidationError("batch must be >= 1");
  if (lr < 0) throw ValidationError("learning rate must be >= 0");
  if (patience < 0) throw ValidationError("patience must be >= 0");
  model.validate();
}

std::string doc_bucket_label(int n_docs) {
  if (n_docs < 1) throw ContractError("sample with no documents");
  int lo = (n_docs / 10) * 10;
  int hi = lo + 9;
  if (lo == 0) lo = 1;
  return std::to_string(lo) + "-" + std::to_string(hi);
}

namespace {

EvalReport run_eval(const Model& model, const std::vector<PreparedSample>& prepared) {
  EvalReport r;
  for (const PreparedSample& ps : prepared) {
    if (!ps.sample.answer) throw ValidationError("cannot evaluate sample without an answer: " + ps.sample.id);
    Tape tape;
    ParamStore& store = const_cast<Model&>(model).params;
    BoundParams bp(tape, store);
    ForwardResult fr = model.forward(bp, ps, /*want_loss=*/false);
    SamplePrediction p;
    p.id = ps.sample.id;
    p.predicted = fr.predicted;
    p.gold = ps.gold;
    p.n_docs = static_cast<int>(ps.sample.supports.size());
    p.correct = ps.gold >= 0 && fr.predicted == ps.gold;
    if (ps.gold < 0) ++r.gold_truncated;
    ++r.total;
    if (p.correct) ++r.correct;
    BucketStat& b = r.doc_buckets[doc_bucket_label(p.n_docs)];
    ++b.total;
    if (p.correct) ++b.correct;
    r.predictions.push_back(std::move(p));
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / r.total;
  return r;
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<Sample>& samples, const KnowledgeBase& kb,
                    const GraphCaps& caps) {
  std::vector<PreparedSample> prepared;
  for (const Sample& s : samples) prepared.push_back(model.prepare(s, kb, caps, /*training=*/false));
  return run_eval(model, prepared);
}

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ValidationError("empty training set");
  for (const Sample& s : train_set)
    if (!s.answer) throw ValidationError("training sample without an answer: " + s.id);

  std::vector<Sample> all = train_set;
  all.insert(all.end(), dev_set.begin(), dev_set.end());
  auto [vocab, emb0] = build_vocab(all, cfg.model.dims.word_dim, cfg.seed);
  (void)emb0;

  Model model = Model::init(cfg.model, vocab, transe, transh, cfg.seed);

  std::vector<PreparedSample> prepared_train;
  for (const Sample& s : train_set) prepared_train.push_back(model.prepare(s, kb, cfg.caps, /*training=*/true));
  std::vector<PreparedSample> prepared_dev;
  for (const Sample& s : dev_set) prepared_dev.push_back(model.prepare(s, kb, cfg.caps, /*training=*/false));

  OptimConfig oc;
  oc.lr = cfg.lr;
  Optimizer opt(oc);

  TrainResult result;
  result.model = model;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(prepared_train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.seed * 1000003ull + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      std::size_t end = std::min(pos + static_cast<std::size_t>(cfg.batch), order.size());
      std::map<std::string, Tensor> grad_acc;
      for (std::size_t k = pos; k < end; ++k) {
        const PreparedSample& ps = prepared_train[order[k]];
        if (ps.gold < 0) throw ContractError("training sample lost its gold candidate: " + ps.sample.id);
        Tape tape;
        BoundParams bp(tape, model.params);
        ForwardResult fr = model.forward(bp, ps, /*want_loss=*/true);
        epoch_loss += tape.value(fr.loss).at(0, 0);
        tape.backward(fr.loss);
        for (const auto& [name, var] : bp.used()) {
          const Tensor& g = tape.grad(var);
          auto it = grad_acc.find(name);
          if (it == grad_acc.end())
            grad_acc.emplace(name, g);
          else
            for (std::size_t i = 0; i < g.data.size(); ++i) it->second.data[i] += g.data[i];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - pos);
      std::vector<std::pair<std::string, Tensor*>> params;
      std::vector<std::pair<std::string, const Tensor*>> grads;
      for (auto& [name, g] : grad_acc) {
        for (double& v : g.data) v *= inv;
        params.emplace_back(name, &model.params.at(name));
        grads.emplace_back(name, &g);
      }
      opt.step(params, grads);
      pos = end;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));

    EvalReport dev = prepared_dev.empty() ? EvalReport{} : run_eval(model, prepared_dev);
    result.dev_accuracy.push_back(dev.accuracy);
    if (result.best_epoch < 0 || dev.accuracy > result.best_dev) {
      result.best_epoch = epoch;
      result.best_dev = dev.accuracy;
      result.best_report = dev;
      result.model = model;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      break;
    }
  }
  return result;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 1) throw ValidationError("fold count must be >= 1");
  if (static_cast<std::size_t>(folds) > n)
    throw ValidationError("more folds (" + std::to_string(folds) + ") than samples (" + std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) out[i * static_cast<std::size_t>(folds) / n].push_back(order[i]);
  return out;
}

CvResult cross_validate(const std::vector<Sample>& pool, const KnowledgeBase& kb, const EmbeddingTable& transe,
                        const EmbeddingTable& transh, const TrainConfig& cfg) {
  cfg.validate();
  auto folds = make_folds(pool.size(), cfg.cv_folds, cfg.seed);
  CvResult result;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> in_eval(pool.size(), false);
    for (std::size_t i : folds[f]) in_eval[i] = true;
    std::vector<Sample> train_set, eval_set;
    for (std::size_t i = 0; i < pool.size(); ++i) (in_eval[i] ? eval_set : train_set).push_back(pool[i]);
    TrainResult tr = train(train_set, eval_set, kb, transe, transh, cfg);
    FoldResult fr;
    fr.fold = static_cast<int>(f);
    fr.accuracy = tr.best_dev;
    fr.eval_size = static_cast<int>(eval_set.size());
    result.folds.push_back(fr);
    result.checkpoints.push_back(std::move(tr.model));
    result.mean_accuracy += fr.accuracy;
  }
  result.mean_accuracy /= static_cast<double>(folds.size());
  return result;
}

std::vector<SweepRow> hop_sweep(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                                const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                                TrainConfig cfg, const std::vector<int>& hops) {
  if (hops.empty()) throw ValidationError("empty hop list");
  std::vector<SweepRow> out;
  for (int h : hops) {
    if (h < 1) throw ValidationError("hop count must be >= 1");
    cfg.model.hops = h;
    TrainResult tr = train(train_set, dev_set, kb, transe, transh, cfg);
    out.push_back({h, tr.best_dev});
  }
  return out;
}

ModelConfig apply_ablation_flag(ModelConfig cfg, const std::string& flag) {
  if (flag == "none")
    ;
  else if (flag == "no_knowledge_fusion")
    cfg.no_knowledge_fusion = true;
  else if (flag == "no_graph_reasoning")
    cfg.no_graph_reasoning = true;
  else if (flag == "merge_edge_types")
    cfg.merge_edge_types = true;
  else if (flag == "drop_subject_nodes")
    cfg.drop_subject = true;
  else if (flag == "drop_reasoning_nodes")
    cfg.drop_reasoning = true;
  else if (flag == "drop_mention_nodes")
    cfg.drop_mention = true;
  else if (flag == "drop_candidate_nodes")
    cfg.drop_candidate = true;
  else
    throw ValidationError("unknown ablation flag: " + flag);
  cfg.validate();
  return cfg;
}

std::vector<AblationRow> ablate(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                                const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                                TrainConfig cfg, const std::vector<std::string>& flags) {
  if (flags.empty()) throw ValidationError("no ablation flags requested");
  std::vector<AblationRow> out;
  for (const std::string& flag : flags) {
    TrainConfig c = cfg;
    c.model = apply_ablation_flag(cfg.model, flag);
    TrainResult tr = train(train_set, dev_set, kb, transe, transh, c);
    out.push_back({flag, tr.best_dev});
  }
  return out;
}

std::string eval_report_json(const EvalReport& r, const TrainConfig& cfg) {
  json j;
  j["accuracy"] = r.accuracy;
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["gold_truncated"] = r.gold_truncated;
  json buckets = json::object();
  for (const auto& [label, b] : r.doc_buckets) {
    buckets[label]["correct"] = b.correct;
    buckets[label]["total"] = b.total;
    buckets[label]["accuracy"] = b.total == 0 ? 0.0 : static_cast<double>(b.correct) / b.total;
  }
  j["doc_buckets"] = std::move(buckets);
  json preds = json::array();
  for (const SamplePrediction& p : r.predictions)
    preds.push_back({{"id", p.id}, {"predicted", p.predicted}, {"gold", p.gold}, {"correct", p.correct},
                     {"n_docs", p.n_docs}});
  j["predictions"] = std::move(preds);
  json& c = j["config"];
  c["epochs"] = cfg.epochs;
  c["batch"] = cfg.batch;
  c["lr"] = cfg.lr;
  c["seed"] = cfg.seed;
  c["patience"] = cfg.patience;
  c["hops"] = cfg.model.hops;
  c["heads"] = cfg.model.heads;
  c["hidden"] = cfg.model.dims.hidden;
  c["word_dim"] = cfg.model.dims.word_dim;
  c["know_dim"] = cfg.model.dims.know_dim;
  c["optimizer"] = "adam";
  return j.dump(2);
}

std::string eval_report_text(const EvalReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %10s\n", "bucket", "correct", "total", "accuracy");
  out += line;
  for (const auto& [label, b] : r.doc_buckets) {
    std::snprintf(line, sizeof line, "%-12s %8d %8d %10.4f\n", label.c_str(), b.correct, b.total,
                  b.total == 0 ? 0.0 : static_cast<double>(b.correct) / b.total);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-12s %8d %8d %10.4f\n", "overall", r.correct, r.total, r.accuracy);
  out += line;
  return out;
}

}  // namespace medkg
