#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "medkg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace medkg;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t default_seed() {
  if (const char* env = std::getenv("MEDKG_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("MEDKG_SEED is not a number: ") + env);
    }
  }
  return 1;
}

void ensure_out_dir(const std::string& dir, bool force) {
  fs::path p(dir);
  if (fs::exists(p)) {
    if (!fs::is_directory(p)) throw ValidationError("--out exists and is not a directory: " + dir);
    if (!fs::is_empty(p) && !force)
      throw ValidationError("--out directory is not empty (use --force to overwrite): " + dir);
  } else {
    fs::create_directories(p);
  }
}

void ensure_out_file(const std::string& path, bool force) {
  if (fs::exists(path) && !force)
    throw ValidationError("--out file already exists (use --force to overwrite): " + path);
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

struct ManifestWriter {
  std::string subcommand;
  json config = json::object();
  json inputs = json::object();
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add_input(const std::string& path) { inputs[path] = to_hex(hash_file(path)); }
  void write(const std::string& path) const {
    json j;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["inputs"] = inputs;
    j["seed"] = seed;
    j["version"] = kVersion;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(path, j.dump(2) + "\n");
  }
};

KnowledgeBase load_kb(const std::string& dir, ManifestWriter& mf) {
  std::string triplets = (fs::path(dir) / "triplets.tsv").string();
  std::string pathways = (fs::path(dir) / "pathways.tsv").string();
  if (!fs::exists(triplets)) throw ValidationError("missing KB file: " + triplets);
  if (!fs::exists(pathways)) throw ValidationError("missing KB file: " + pathways);
  KnowledgeBase kb;
  LoadReport tr = kb.load_triplets(triplets);
  LoadReport pr = kb.load_pathways(pathways);
  for (const std::string& w : tr.warnings) std::cerr << "warning: " << w << "\n";
  for (const std::string& w : pr.warnings) std::cerr << "warning: " << w << "\n";
  mf.add_input(triplets);
  mf.add_input(pathways);
  return kb;
}

EmbeddingTable load_table_opt(const std::string& path, ManifestWriter& mf) {
  if (path.empty()) return {};
  EmbeddingTable t = import_embeddings(path);
  mf.add_input(path);
  return t;
}

std::vector<Sample> load_sample_file(const std::string& path, ManifestWriter& mf) {
  if (!fs::exists(path)) throw ValidationError("missing sample file: " + path);
  mf.add_input(path);
  return load_samples(path);
}

struct ReaderArgs {
  std::string kb_dir, transe_path, transh_path, out_dir;
  bool force = false;
  TrainConfig cfg;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--kb", kb_dir, "KB directory with triplets.tsv and pathways.tsv")->required();
    cmd->add_option("--transe", transe_path, "TransE embedding file (optional)");
    cmd->add_option("--transh", transh_path, "TransH embedding file (optional)");
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_flag("--force", force, "overwrite a non-empty output directory");
    cmd->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch", cfg.batch, "gradient accumulation size")->capture_default_str();
    cmd->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "random seed (falls back to MEDKG_SEED)")->capture_default_str();
    cmd->add_option("--patience", cfg.patience, "early-stopping patience in epochs")->capture_default_str();
    cmd->add_option("--hops", cfg.model.hops, "graph reasoning hops")->capture_default_str();
    cmd->add_option("--heads", cfg.model.heads, "attention heads")->capture_default_str();
    cmd->add_option("--hidden", cfg.model.dims.hidden, "encoder hidden size")->capture_default_str();
    cmd->add_option("--word-dim", cfg.model.dims.word_dim, "word embedding size")->capture_default_str();
    cmd->add_option("--know-dim", cfg.model.dims.know_dim, "knowledge embedding size")->capture_default_str();
    cmd->add_option("--cap-subject", cfg.caps.subject, "subject node cap")->capture_default_str();
    cmd->add_option("--cap-reasoning", cfg.caps.reasoning, "reasoning node cap")->capture_default_str();
    cmd->add_option("--cap-mention", cfg.caps.mention, "mention node cap")->capture_default_str();
    cmd->add_option("--cap-candidate", cfg.caps.candidate, "candidate node cap")->capture_default_str();
    cmd->add_flag("--finetune-knowledge", cfg.model.finetune_knowledge, "fine-tune knowledge vectors");
    cmd->add_flag("--no-knowledge-fusion", cfg.model.no_knowledge_fusion, "zero out knowledge slices");
    cmd->add_flag("--no-graph-reasoning", cfg.model.no_graph_reasoning, "score from encoder features only");
    cmd->add_flag("--merge-edge-types", cfg.model.merge_edge_types, "share one transform across edge kinds");
    cmd->add_flag("--drop-subject-nodes", cfg.model.drop_subject, "remove subject nodes");
    cmd->add_flag("--drop-reasoning-nodes", cfg.model.drop_reasoning, "remove reasoning nodes");
    cmd->add_flag("--drop-mention-nodes", cfg.model.drop_mention, "remove mention nodes");
    cmd->add_flag("--drop-candidate-nodes", cfg.model.drop_candidate, "remove candidate nodes");
  }

  void echo_config(json& c) const {
    c["kb"] = kb_dir;
    c["transe"] = transe_path;
    c["transh"] = transh_path;
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
  }
};

SynthSpec parse_synth_spec(const std::string& path) {
  SynthSpec spec;
  if (path.empty()) return spec;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("spec file is not valid JSON: " + std::string(e.what()));
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_drugs", spec.n_drugs);
  get("n_proteins", spec.n_proteins);
  get("n_actions", spec.n_actions);
  get("chain_min", spec.chain_min);
  get("chain_max", spec.chain_max);
  get("n_samples", spec.n_samples);
  get("docs_min", spec.docs_min);
  get("docs_max", spec.docs_max);
  get("n_candidates", spec.n_candidates);
  get("distractor_rate", spec.distractor_rate);
  get("seed", spec.seed);
  return spec;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed, bool seed_given,
              bool force) {
  ManifestWriter mf;
  mf.subcommand = "synth";
  SynthSpec spec = parse_synth_spec(spec_path);
  if (!spec_path.empty()) mf.add_input(spec_path);
  if (seed_given) spec.seed = seed;
  spec.validate();
  mf.seed = spec.seed;
  mf.config = {{"n_drugs", spec.n_drugs},       {"n_proteins", spec.n_proteins},
               {"n_actions", spec.n_actions},   {"chain_min", spec.chain_min},
               {"chain_max", spec.chain_max},   {"n_samples", spec.n_samples},
               {"docs_min", spec.docs_min},     {"docs_max", spec.docs_max},
               {"n_candidates", spec.n_candidates}, {"distractor_rate", spec.distractor_rate},
               {"seed", spec.seed}};
  ensure_out_dir(out_dir, force);
  SynthResult result = synth_generate(spec);
  fs::path out(out_dir);
  write_file((out / "samples.json").string(), save_samples(result.samples));
  write_file((out / "triplets.tsv").string(), result.kb.save_triplets());
  write_file((out / "pathways.tsv").string(), result.kb.save_pathways());
  write_file((out / "ground_truth.json").string(), ground_truth_json(result));
  mf.write((out / "manifest.json").string());
  std::cout << "wrote " << result.samples.size() << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train_kg(const std::string& kb_dir, const std::string& model_name, TransConfig cfg,
                 const std::string& out_path, bool force) {
  ManifestWriter mf;
  mf.subcommand = "train-kg";
  if (model_name == "transe")
    cfg.model = TransModel::TransE;
  else if (model_name == "transh")
    cfg.model = TransModel::TransH;
  else
    throw ValidationError("--model must be transe or transh, got: " + model_name);
  cfg.validate();
  KnowledgeBase kb = load_kb(kb_dir, mf);
  if (kb.triplets().empty()) throw ValidationError("KB has no triplets to train on");
  ensure_out_file(out_path, force);
  mf.seed = cfg.seed;
  mf.config = {{"model", model_name}, {"dim", cfg.dim},       {"epochs", cfg.epochs}, {"margin", cfg.margin},
               {"lr", cfg.lr},        {"batch", cfg.batch},   {"negatives", cfg.negatives}, {"seed", cfg.seed}};
  TrainTrace trace;
  EmbeddingTable table = train_embeddings(kb, cfg, &trace);
  export_embeddings(table, out_path);
  LinkPredictionReport raw = eval_link_prediction(table, kb, false);
  LinkPredictionReport filtered = eval_link_prediction(table, kb, true);
  json report;
  for (auto [name, r] : {std::pair<const char*, const LinkPredictionReport*>{"raw", &raw}, {"filtered", &filtered}}) {
    report[name] = {{"mrr", r->mrr}, {"mr", r->mr}, {"hits1", r->hits1}, {"hits3", r->hits3}, {"hits10", r->hits10}};
  }
  report["final_epoch_loss"] = trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.back();
  write_file(out_path + ".report.json", report.dump(2) + "\n");
  mf.write(out_path + ".manifest.json");
  std::cout << "filtered hits@10 " << filtered.hits10 << ", raw hits@10 " << raw.hits10 << "\n";
  return 0;
}

int cmd_build_graph(const std::string& sample_id, const std::string& data_dir, const std::string& kb_dir,
                    const std::string& ckpt_path, const std::string& out_path, const std::string& format,
                    bool training, bool force) {
  ManifestWriter mf;
  mf.subcommand = "build-graph";
  if (format != "dot" && format != "json") throw ValidationError("--format must be dot or json, got: " + format);
  KnowledgeBase kb = load_kb(kb_dir, mf);
  std::string samples_path = (fs::path(data_dir) / "samples.json").string();
  std::vector<Sample> samples = load_sample_file(samples_path, mf);
  const Sample* sample = nullptr;
  for (const Sample& s : samples)
    if (s.id == sample_id) sample = &s;
  if (!sample) throw ValidationError("unknown sample id: " + sample_id);
  ensure_out_file(out_path, force);
  mf.config = {{"sample", sample_id}, {"format", format}, {"training", training}, {"ckpt", ckpt_path}};

  std::string text;
  if (ckpt_path.empty()) {
    EntityCatalog catalog = EntityCatalog::from_kb(kb);
    catalog.entities.insert(sample->subject);
    for (const EntityId& c : sample->candidates) catalog.entities.insert(c);
    if (sample->answer) catalog.entities.insert(*sample->answer);
    std::vector<TokenizedDoc> docs;
    for (const std::string& d : sample->supports) docs.push_back(tokenize(d, catalog));
    ReasoningGraph g = build_graph(*sample, docs, kb, {}, training);
    text = format == "dot" ? export_dot(g) : export_json(g);
  } else {
    mf.add_input(ckpt_path);
    Model model = Model::load_json(read_file(ckpt_path));
    PreparedSample ps = model.prepare(*sample, kb, {}, training);
    Tape tape;
    BoundParams bp(tape, model.params);
    ForwardResult fr = model.forward(bp, ps, /*want_loss=*/false, /*want_trace=*/true);
    text = format == "dot" ? export_dot(ps.graph, &fr.graph_scores) : export_json(ps.graph, &fr.graph_scores);
  }
  write_file(out_path, text);
  mf.write(out_path + ".manifest.json");
  return 0;
}

int cmd_train_reader(ReaderArgs& a, const std::string& train_path, const std::string& dev_path) {
  ManifestWriter mf;
  mf.subcommand = "train-reader";
  mf.seed = a.cfg.seed;
  KnowledgeBase kb = load_kb(a.kb_dir, mf);
  std::vector<Sample> train_set = load_sample_file(train_path, mf);
  std::vector<Sample> dev_set = dev_path.empty() ? std::vector<Sample>{} : load_sample_file(dev_path, mf);
  EmbeddingTable transe = load_table_opt(a.transe_path, mf);
  EmbeddingTable transh = load_table_opt(a.transh_path, mf);
  ensure_out_dir(a.out_dir, a.force);
  a.echo_config(mf.config);
  mf.config["train"] = train_path;
  mf.config["dev"] = dev_path;

  TrainResult tr = train(train_set, dev_set, kb, transe, transh, a.cfg);
  fs::path out(a.out_dir);
  write_file((out / "checkpoint.json").string(), tr.model.save_json());
  write_file((out / "report.json").string(), eval_report_json(tr.best_report, a.cfg) + "\n");
  write_file((out / "report.txt").string(), eval_report_text(tr.best_report));
  json curves;
  curves["epoch_loss"] = tr.epoch_loss;
  curves["dev_accuracy"] = tr.dev_accuracy;
  curves["best_epoch"] = tr.best_epoch;
  curves["best_dev_accuracy"] = tr.best_dev;
  write_file((out / "curves.json").string(), curves.dump(2) + "\n");
  mf.write((out / "manifest.json").string());
  std::cout << "best dev accuracy " << tr.best_dev << " at epoch " << tr.best_epoch << "\n";
  return 0;
}

int cmd_eval_reader(const std::string& ckpt_path, const std::string& samples_path, const std::string& kb_dir,
                    const std::string& out_dir, bool force) {
  ManifestWriter mf;
  mf.subcommand = "eval-reader";
  KnowledgeBase kb = load_kb(kb_dir, mf);
  std::vector<Sample> samples = load_sample_file(samples_path, mf);
  if (!fs::exists(ckpt_path)) throw ValidationError("missing checkpoint: " + ckpt_path);
  mf.add_input(ckpt_path);
  Model model = Model::load_json(read_file(ckpt_path));
  ensure_out_dir(out_dir, force);
  mf.config = {{"ckpt", ckpt_path}, {"samples", samples_path}};
  TrainConfig echo;
  echo.model = model.config;
  echo.seed = model.knowledge_seed;
  EvalReport r = evaluate(model, samples, kb, {});
  fs::path out(out_dir);
  write_file((out / "report.json").string(), eval_report_json(r, echo) + "\n");
  write_file((out / "report.txt").string(), eval_report_text(r));
  mf.write((out / "manifest.json").string());
  std::cout << "accuracy " << r.accuracy << " (" << r.correct << "/" << r.total << ")\n";
  return 0;
}

int cmd_sweep(ReaderArgs& a, const std::string& train_path, const std::string& dev_path,
              const std::vector<int>& hops) {
  ManifestWriter mf;
  mf.subcommand = "sweep";
  mf.seed = a.cfg.seed;
  KnowledgeBase kb = load_kb(a.kb_dir, mf);
  std::vector<Sample> train_set = load_sample_file(train_path, mf);
  std::vector<Sample> dev_set = load_sample_file(dev_path, mf);
  EmbeddingTable transe = load_table_opt(a.transe_path, mf);
  EmbeddingTable transh = load_table_opt(a.transh_path, mf);
  ensure_out_dir(a.out_dir, a.force);
  a.echo_config(mf.config);
  mf.config["hops_list"] = hops;

  std::vector<SweepRow> rows = hop_sweep(train_set, dev_set, kb, transe, transh, a.cfg, hops);
  json j = json::array();
  std::string table = "hops  dev_accuracy\n";
  for (const SweepRow& r : rows) {
    j.push_back({{"hops", r.hops}, {"dev_accuracy", r.dev_accuracy}});
    char line[64];
    std::snprintf(line, sizeof line, "%-5d %12.4f\n", r.hops, r.dev_accuracy);
    table += line;
  }
  fs::path out(a.out_dir);
  write_file((out / "sweep.json").string(), j.dump(2) + "\n");
  write_file((out / "sweep.txt").string(), table);
  mf.write((out / "manifest.json").string());
  std::cout << table;
  return 0;
}

int cmd_ablate(ReaderArgs& a, const std::string& train_path, const std::string& dev_path,
               const std::vector<std::string>& flags) {
  ManifestWriter mf;
  mf.subcommand = "ablate";
  mf.seed = a.cfg.seed;
  KnowledgeBase kb = load_kb(a.kb_dir, mf);
  std::vector<Sample> train_set = load_sample_file(train_path, mf);
  std::vector<Sample> dev_set = load_sample_file(dev_path, mf);
  EmbeddingTable transe = load_table_opt(a.transe_path, mf);
  EmbeddingTable transh = load_table_opt(a.transh_path, mf);
  ensure_out_dir(a.out_dir, a.force);
  a.echo_config(mf.config);
  mf.config["flags"] = flags;

  std::vector<AblationRow> rows = ablate(train_set, dev_set, kb, transe, transh, a.cfg, flags);
  json j = json::array();
  std::string table = "flag                      dev_accuracy\n";
  for (const AblationRow& r : rows) {
    j.push_back({{"flag", r.flag}, {"dev_accuracy", r.dev_accuracy}});
    char line[80];
    std::snprintf(line, sizeof line, "%-25s %12.4f\n", r.flag.c_str(), r.dev_accuracy);
    table += line;
  }
  fs::path out(a.out_dir);
  write_file((out / "ablate.json").string(), j.dump(2) + "\n");
  write_file((out / "ablate.txt").string(), table);
  mf.write((out / "manifest.json").string());
  std::cout << table;
  return 0;
}

int cmd_cv(ReaderArgs& a, const std::string& pool_path, int folds, int keep) {
  ManifestWriter mf;
  mf.subcommand = "cv";
  mf.seed = a.cfg.seed;
  a.cfg.cv_folds = folds;
  KnowledgeBase kb = load_kb(a.kb_dir, mf);
  std::vector<Sample> pool = load_sample_file(pool_path, mf);
  EmbeddingTable transe = load_table_opt(a.transe_path, mf);
  EmbeddingTable transh = load_table_opt(a.transh_path, mf);
  ensure_out_dir(a.out_dir, a.force);
  a.echo_config(mf.config);
  mf.config["pool"] = pool_path;
  mf.config["folds"] = folds;

  CvResult cv = cross_validate(pool, kb, transe, transh, a.cfg);
  json j;
  json fold_rows = json::array();
  std::string table = "fold  eval_size  accuracy\n";
  for (const FoldResult& f : cv.folds) {
    fold_rows.push_back({{"fold", f.fold}, {"eval_size", f.eval_size}, {"accuracy", f.accuracy}});
    char line[64];
    std::snprintf(line, sizeof line, "%-5d %9d %9.4f\n", f.fold, f.eval_size, f.accuracy);
    table += line;
  }
  j["folds"] = std::move(fold_rows);
  j["mean_accuracy"] = cv.mean_accuracy;
  fs::path out(a.out_dir);
  write_file((out / "cv.json").string(), j.dump(2) + "\n");
  write_file((out / "cv.txt").string(), table);

  // keep the best checkpoints by fold accuracy (stable on ties)
  std::vector<int> order(cv.folds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return cv.folds[static_cast<std::size_t>(x)].accuracy > cv.folds[static_cast<std::size_t>(y)].accuracy;
  });
  for (int k = 0; k < std::min<int>(keep, static_cast<int>(order.size())); ++k) {
    int f = order[static_cast<std::size_t>(k)];
    write_file((out / ("checkpoint_fold" + std::to_string(f) + ".json")).string(),
               cv.checkpoints[static_cast<std::size_t>(f)].save_json());
  }
  mf.write((out / "manifest.json").string());
  std::cout << table << "mean " << cv.mean_accuracy << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drug-interaction QA pipeline: synthetic corpora, KG embeddings, reasoning graphs, reader training"};
  app.set_config("--config", "", "read defaults from a config file");
  app.require_subcommand(1);
  std::uint64_t env_seed;
  try {
    env_seed = default_seed();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted reasoning chains");
  std::string synth_spec, synth_out;
  std::uint64_t synth_seed = env_seed;
  bool synth_force = false;
  synth->add_option("--spec", synth_spec, "JSON spec file (defaults used when omitted)");
  synth->add_option("--out", synth_out, "output directory")->required();
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();
  synth->add_flag("--force", synth_force, "overwrite a non-empty output directory");

  // train-kg
  auto* tkg = app.add_subcommand("train-kg", "train TransE/TransH embeddings on the KB");
  std::string tkg_kb, tkg_model = "transe", tkg_out;
  bool tkg_force = false;
  TransConfig tkg_cfg;
  tkg_cfg.seed = env_seed;
  tkg->add_option("--kb", tkg_kb, "KB directory")->required();
  tkg->add_option("--model", tkg_model, "transe|transh")->capture_default_str();
  tkg->add_option("--dim", tkg_cfg.dim, "embedding dimension")->capture_default_str();
  tkg->add_option("--epochs", tkg_cfg.epochs, "training epochs")->capture_default_str();
  tkg->add_option("--margin", tkg_cfg.margin, "ranking margin")->capture_default_str();
  tkg->add_option("--lr", tkg_cfg.lr, "learning rate")->capture_default_str();
  tkg->add_option("--batch", tkg_cfg.batch, "batch size")->capture_default_str();
  tkg->add_option("--negatives", tkg_cfg.negatives, "negatives per positive")->capture_default_str();
  tkg->add_option("--seed", tkg_cfg.seed, "random seed")->capture_default_str();
  tkg->add_option("--out", tkg_out, "embedding output file")->required();
  tkg->add_flag("--force", tkg_force, "overwrite an existing output file");

  // build-graph
  auto* bg = app.add_subcommand("build-graph", "build and export one sample's reasoning graph");
  std::string bg_sample, bg_data, bg_kb, bg_ckpt, bg_out, bg_format = "dot";
  bool bg_training = false, bg_force = false;
  bg->add_option("--sample", bg_sample, "sample id")->required();
  bg->add_option("--data", bg_data, "data directory with samples.json")->required();
  bg->add_option("--kb", bg_kb, "KB directory")->required();
  bg->add_option("--ckpt", bg_ckpt, "checkpoint for attention weights and node scores (optional)");
  bg->add_option("--out", bg_out, "output file")->required();
  bg->add_option("--format", bg_format, "dot|json")->capture_default_str();
  bg->add_flag("--training", bg_training, "apply training-mode truncation (gold swap-in)");
  bg->add_flag("--force", bg_force, "overwrite an existing output file");

  // train-reader / eval-reader / sweep / ablate / cv
  ReaderArgs tr_args, sweep_args, abl_args, cv_args;
  tr_args.cfg.seed = sweep_args.cfg.seed = abl_args.cfg.seed = cv_args.cfg.seed = env_seed;
  std::string tr_train, tr_dev;
  auto* trr = app.add_subcommand("train-reader", "train the graph reader");
  trr->add_option("--train", tr_train, "training samples JSON")->required();
  trr->add_option("--dev", tr_dev, "development samples JSON");
  tr_args.add_common(trr);

  auto* evr = app.add_subcommand("eval-reader", "evaluate a checkpoint");
  std::string ev_ckpt, ev_samples, ev_kb, ev_out;
  bool ev_force = false;
  evr->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  evr->add_option("--samples", ev_samples, "samples JSON")->required();
  evr->add_option("--kb", ev_kb, "KB directory")->required();
  evr->add_option("--out", ev_out, "output directory")->required();
  evr->add_flag("--force", ev_force, "overwrite a non-empty output directory");

  auto* swp = app.add_subcommand("sweep", "retrain across hop counts");
  std::string sw_train, sw_dev;
  std::vector<int> sw_hops{3, 4, 5, 6};
  swp->add_option("--train", sw_train, "training samples JSON")->required();
  swp->add_option("--dev", sw_dev, "development samples JSON")->required();
  swp->add_option("--hops-list", sw_hops, "hop counts to sweep")->delimiter(',')->capture_default_str();
  sweep_args.add_common(swp);

  auto* abl = app.add_subcommand("ablate", "train ablation arms");
  std::string ab_train, ab_dev;
  std::vector<std::string> ab_flags{"none"};
  abl->add_option("--train", ab_train, "training samples JSON")->required();
  abl->add_option("--dev", ab_dev, "development samples JSON")->required();
  abl->add_option("--flags", ab_flags, "ablation flags, one arm per entry")->delimiter(',')->capture_default_str();
  abl_args.add_common(abl);

  auto* cvc = app.add_subcommand("cv", "k-fold cross-validation over a sample pool");
  std::string cv_pool;
  int cv_folds = 9, cv_keep = 3;
  cvc->add_option("--pool", cv_pool, "pooled samples JSON")->required();
  cvc->add_option("--folds", cv_folds, "number of folds")->capture_default_str();
  cvc->add_option("--keep", cv_keep, "checkpoints to keep (best folds)")->capture_default_str();
  cv_args.add_common(cvc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out, synth_seed, synth_seed_opt->count() > 0, synth_force);
    if (tkg->parsed()) return cmd_train_kg(tkg_kb, tkg_model, tkg_cfg, tkg_out, tkg_force);
    if (bg->parsed())
      return cmd_build_graph(bg_sample, bg_data, bg_kb, bg_ckpt, bg_out, bg_format, bg_training, bg_force);
    if (trr->parsed()) return cmd_train_reader(tr_args, tr_train, tr_dev);
    if (evr->parsed()) return cmd_eval_reader(ev_ckpt, ev_samples, ev_kb, ev_out, ev_force);
    if (swp->parsed()) return cmd_sweep(sweep_args, sw_train, sw_dev, sw_hops);
    if (abl->parsed()) return cmd_ablate(abl_args, ab_train, ab_dev, ab_flags);
    if (cvc->parsed()) return cmd_cv(cv_args, cv_pool, cv_folds, cv_keep);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
