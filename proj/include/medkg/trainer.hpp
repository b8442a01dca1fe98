#ifndef MEDKG_TRAINER_HPP
#define MEDKG_TRAINER_HPP

#include "medkg/model.hpp"

namespace medkg {

struct TrainConfig {
  int epochs = 10;
  int batch = 8;  // gradient accumulation window
  double lr = 1e-3;
  std::uint64_t seed = 1;
  int patience = 2;  // epochs without a new best dev accuracy
  GraphCaps caps;
  ModelConfig model;
  int cv_folds = 9;  // used by cross_validate only

  void validate() const;
};

struct SamplePrediction {
  std::string id;
  int predicted = -1;
  int gold = -1;
  bool correct = false;
  int n_docs = 0;
};

struct BucketStat {
  int correct = 0;
  int total = 0;
};

struct EvalReport {
  int total = 0;
  int correct = 0;
  int gold_truncated = 0;  // gold answer cut by candidate truncation; counted wrong
  double accuracy = 0.0;
  std::vector<SamplePrediction> predictions;
  std::map<std::string, BucketStat> doc_buckets;  // "1-9", "10-19", ...
};

std::string doc_bucket_label(int n_docs);

struct TrainResult {
  Model model;  // best-dev checkpoint
  std::vector<double> epoch_loss;
  std::vector<double> dev_accuracy;
  int best_epoch = -1;
  double best_dev = 0.0;
  EvalReport best_report;
};

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                  const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                  const TrainConfig& cfg);

EvalReport evaluate(const Model& model, const std::vector<Sample>& samples, const KnowledgeBase& kb,
                    const GraphCaps& caps);

// Seeded shuffle split into contiguous chunks; disjoint cover of 0..n-1.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int folds, std::uint64_t seed);

struct FoldResult {
  int fold = 0;
  double accuracy = 0.0;
  int eval_size = 0;
};

struct CvResult {
  std::vector<FoldResult> folds;
  std::vector<Model> checkpoints;  // per fold
  double mean_accuracy = 0.0;
};

CvResult cross_validate(const std::vector<Sample>& pool, const KnowledgeBase& kb, const EmbeddingTable& transe,
                        const EmbeddingTable& transh, const TrainConfig& cfg);

struct SweepRow {
  int hops = 0;
  double dev_accuracy = 0.0;
};

std::vector<SweepRow> hop_sweep(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                                const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                                TrainConfig cfg, const std::vector<int>& hops);

struct AblationRow {
  std::string flag;  // "none" for the unablated run
  double dev_accuracy = 0.0;
};

// One flag per row; "none" allowed. Unknown or contradictory flags -> error.
std::vector<AblationRow> ablate(const std::vector<Sample>& train_set, const std::vector<Sample>& dev_set,
                                const KnowledgeBase& kb, const EmbeddingTable& transe, const EmbeddingTable& transh,
                                TrainConfig cfg, const std::vector<std::string>& flags);

ModelConfig apply_ablation_flag(ModelConfig cfg, const std::string& flag);

std::string eval_report_json(const EvalReport& r, const TrainConfig& cfg);
std::string eval_report_text(const EvalReport& r);

}  // namespace medkg

#endif
