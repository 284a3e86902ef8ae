// Command-line front end: data generation, training, prediction, evaluation,
// and analysis export for the outage-duration models.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "outage/evalreport.hpp"
#include "outage/modelio.hpp"
#include "outage/timeutil.hpp"

using namespace outage;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)num::fnv1a(bytes));
  return buf;
}

struct Manifest {
  std::string subcommand;
  json config = json::object();
  json data_hashes = json::object();
  uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void add_data_dir(const std::string& dir) {
    for (const char* f : {"outages.jsonl", "logs.jsonl", "weather.jsonl"})
      data_hashes[f] = file_hash(dir + "/" + f);
  }

  // written atomically: tmp file then rename
  void write(const std::string& dir, const std::string& outcome) const {
    json j;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["data_hashes"] = data_hashes;
    j["seed"] = seed;
    j["artifacts"] = artifacts;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - started)
                  .count();
    j["wall_ms"] = ms;
    j["outcome"] = outcome;
    fs::create_directories(dir);
    std::string tmp = dir + "/manifest.json.tmp";
    {
      std::ofstream out(tmp);
      out << j.dump(2) << "\n";
    }
    fs::rename(tmp, dir + "/manifest.json");
  }
};

data::Corpus load_corpus(const std::string& dir, Manifest& manifest) {
  manifest.add_data_dir(dir);
  for (const char* f : {"outages.jsonl", "logs.jsonl", "weather.jsonl"})
    if (!fs::exists(dir + "/" + f))
      throw DataError("missing data file: " + dir + "/" + f);
  data::LoadReport report;
  data::Corpus c = data::load(dir + "/outages.jsonl", dir + "/logs.jsonl",
                              dir + "/weather.jsonl", &report);
  for (const auto& e : report.errors)
    std::cerr << "warning: " << e.file << ":" << e.line << " " << e.field << ": "
              << e.reason << "\n";
  return c;
}

io::LoadedModel load_model(const std::string& dir) {
  if (!fs::exists(dir + "/config.txt"))
    throw DataError("no trained model at " + dir + " (missing config.txt)");
  return io::load_model_dir(dir);
}

net::InitialPredictor require_initial(const std::string& dir, const io::LoadedModel& m) {
  if (!fs::exists(dir + "/initial.ckpt"))
    throw DataError("no trained initial model at " + dir + " (missing initial.ckpt)");
  return io::load_initial(dir, m.config);
}

net::RealtimeModel require_realtime(const std::string& dir, const io::LoadedModel& m,
                                    text::Vocab& vocab) {
  if (!io::has_realtime(dir))
    throw DataError("no trained realtime model at " + dir + " (missing realtime.ckpt)");
  return io::load_realtime(dir, m.config, vocab);
}

const data::OutageRecord& find_outage(const data::Corpus& c, const std::string& id) {
  for (const auto& r : c.outages)
    if (r.id == id) return r;
  throw DataError("outage id not found: " + id);
}

// "elapsed_hours<TAB>text" per line
std::vector<std::pair<double, std::string>> read_stdin_logs() {
  std::vector<std::pair<double, std::string>> out;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("stdin log line needs 'elapsed<TAB>text': " + line);
    out.emplace_back(std::stod(line.substr(0, tab)), line.substr(tab + 1));
  }
  return out;
}

std::vector<double> standardized_onset(const io::LoadedModel& m, const data::Corpus& c,
                                       const data::OutageRecord& rec) {
  std::vector<int64_t> starts;
  for (const auto& r : data::filter_outages(c.outages)) starts.push_back(r.start);
  std::sort(starts.begin(), starts.end());
  const data::WeatherRow& wx = data::nearest_weather(c.weather, rec.start);
  auto raw = feat::extract(rec, wx, starts, m.feeder, false);
  return feat::standardize(raw, m.stats);
}

std::vector<double> onehot_for(const data::OutageRecord& rec) {
  std::vector<double> oh(feat::cause_taxonomy().size(), 0.0);
  oh[feat::cause_index(rec.cause)] = 1.0;
  return oh;
}

struct PredictInputs {
  std::vector<double> onset19;
  std::vector<double> f_initial;
  std::vector<net::EncodedLog> logs;
  std::vector<double> elapsed;
};

PredictInputs build_predict_inputs(const std::string& model_dir,
                                   const io::LoadedModel& m, const data::Corpus& corpus,
                                   const data::OutageRecord& rec, bool logs_stdin) {
  PredictInputs in;
  in.onset19 = standardized_onset(m, corpus, rec);
  in.f_initial = io::select_features(m.config.initial_features, in.onset19,
                                     onehot_for(rec));
  if (!io::has_realtime(model_dir)) return in;
  text::Vocab vocab = text::Vocab::load(model_dir + "/vocab.txt");
  text::Patterns patterns = text::Patterns::load(model_dir + "/patterns.txt");
  std::vector<std::pair<double, std::string>> raw_logs;
  if (logs_stdin) {
    raw_logs = read_stdin_logs();
  } else {
    auto aligned = data::align_logs({rec}, corpus.logs);
    if (!aligned.empty())
      for (const auto& lg : aligned[0].logs)
        raw_logs.emplace_back(timeutil::hours_between(rec.start, lg.t), lg.text);
  }
  for (const auto& [elapsed, txt] : raw_logs) {
    net::EncodedLog el;
    el.tokens = vocab.encode(text::normalize(txt, patterns));
    el.elapsed_hours = elapsed;
    in.logs.push_back(std::move(el));
    in.elapsed.push_back(elapsed);
  }
  return in;
}

// ---- subcommand implementations ----

struct GenArgs {
  std::string out, config_path;
  uint64_t seed = 7;
  int outages = -1;
};

int run_gen(const GenArgs& a) {
  Manifest man;
  man.subcommand = "gen-data";
  man.seed = a.seed;
  data::GenConfig cfg =
      a.config_path.empty() ? data::GenConfig::defaults() : data::GenConfig::load(a.config_path);
  if (a.outages > 0) cfg.n_outages = a.outages;
  man.config["n_outages"] = cfg.n_outages;
  man.config["n_feeders"] = cfg.n_feeders;
  data::Corpus c = data::generate_synthetic(cfg, a.seed);
  fs::create_directories(a.out);
  data::save(c, a.out);
  cfg.save(a.out + "/gen.cfg");
  man.add_data_dir(a.out);
  man.artifacts = {a.out + "/outages.jsonl", a.out + "/logs.jsonl",
                   a.out + "/weather.jsonl", a.out + "/gen.cfg"};
  man.write(a.out, "ok");
  std::cout << "wrote " << c.outages.size() << " outages, " << c.logs.size()
            << " logs, " << c.weather.size() << " weather rows to " << a.out << "\n";
  return 0;
}

struct TrainInitialArgs {
  std::string data_dir, out, features = "onset";
  uint64_t seed = 1;
  int epochs = 30, patience = 5;
  double lr = 0.001;
};

int run_train_initial(const TrainInitialArgs& a) {
  Manifest man;
  man.subcommand = "train-initial";
  man.seed = a.seed;
  man.config = {{"features", a.features}, {"epochs", a.epochs},
                {"patience", a.patience}, {"lr", a.lr}};
  io::FeatureSet fs_set = io::feature_set_from_string(a.features);
  data::Corpus corpus = load_corpus(a.data_dir, man);
  io::PreparedData prep = io::prepare(corpus);
  if (prep.val.empty() || prep.test.empty())
    throw DataError("validation or test split is empty; corpus period too short");

  net::InitialPredictor model(io::feature_dim(fs_set), 32, 32, a.seed);
  train::TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.seed = a.seed;
  train::History h = train::train_initial(model, io::initial_examples(prep.train, fs_set),
                                          io::initial_examples(prep.val, fs_set), cfg);
  std::cout << train::history_table(h);

  io::ModelConfig mc;
  mc.initial_features = fs_set;
  mc.seed = a.seed;
  io::save_model_dir(a.out, mc, prep.stats, prep.feeder);
  io::save_initial(a.out, model);
  man.artifacts = {a.out + "/config.txt", a.out + "/stats.txt", a.out + "/initial.ckpt"};

  // quick test-split summary
  auto test_ex = io::initial_examples(prep.test, fs_set);
  std::vector<gamma::GammaParams> preds;
  std::vector<double> truths;
  for (const auto& ex : test_ex) {
    preds.push_back(model.predict(ex.f));
    truths.push_back(ex.duration_hours);
  }
  std::cout << eval::metric_table({eval::metrics(preds, truths, "test", a.features)});
  man.write(a.out, "ok");
  return 0;
}

struct TrainRealtimeArgs {
  std::string data_dir, model_dir, target = "remaining";
  uint64_t seed = 2;
  int epochs = 30, patience = 5, cutoff = 1, heads = 2;
  int embed = 32, cell = 32, state = 64;
  double lr = 0.001, dropout = 0.0;
  bool no_layer_norm = false;
};

int run_train_realtime(const TrainRealtimeArgs& a) {
  Manifest man;
  man.subcommand = "train-realtime";
  man.seed = a.seed;
  man.config = {{"epochs", a.epochs},   {"patience", a.patience},
                {"cutoff", a.cutoff},   {"heads", a.heads},
                {"embed", a.embed},     {"cell", a.cell},
                {"state", a.state},     {"dropout", a.dropout},
                {"target", a.target},   {"layer_norm", !a.no_layer_norm}};
  if (a.target != "remaining" && a.target != "total")
    throw CLI::ValidationError("--target must be 'remaining' or 'total'");
  io::LoadedModel m = load_model(a.model_dir);
  data::Corpus corpus = load_corpus(a.data_dir, man);
  io::PreparedData prep = io::prepare(corpus);
  io::RealtimePrepared rt = io::prepare_realtime(prep, corpus, a.cutoff);
  if (rt.train.empty() || rt.val.empty())
    throw DataError("no aligned repair logs in train/validation splits");

  net::ModelSizes sizes;
  sizes.embed = a.embed;
  sizes.bi_cell = a.cell;
  sizes.state = a.state;
  sizes.heads = a.heads;
  sizes.layer_norm = !a.no_layer_norm;
  net::RealtimeModel model(feat::kOnsetDim, rt.vocab.size(), sizes, a.seed);

  train::TrainConfig cfg;
  cfg.lr = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.dropout = a.dropout;
  cfg.vocab_cutoff = a.cutoff;
  cfg.sizes = sizes;
  cfg.target_remaining = a.target == "remaining";
  cfg.seed = a.seed;
  train::History h = train::train_realtime(model, rt.train, rt.val, cfg);
  std::cout << train::history_table(h);

  io::ModelConfig mc = m.config;
  mc.sizes = sizes;
  mc.vocab_cutoff = a.cutoff;
  mc.target_remaining = cfg.target_remaining;
  mc.seed = m.config.seed;  // initial model construction seed stays
  io::save_model_dir(a.model_dir, mc, m.stats, m.feeder);
  io::save_realtime(a.model_dir, model, rt.vocab, text::Patterns::defaults());
  man.artifacts = {a.model_dir + "/realtime.ckpt", a.model_dir + "/vocab.txt",
                   a.model_dir + "/patterns.txt", a.model_dir + "/config.txt"};
  double test_nll = rt.test.empty()
                        ? 0.0
                        : train::realtime_nll(model, rt.test, cfg.target_remaining);
  std::cout << "test mean per-report NLL: " << test_nll << "\n";
  man.write(a.model_dir, "ok");
  return 0;
}

struct SearchArgs {
  std::string data_dir, out;
  uint64_t seed = 3;
  int trials = 5, epochs = 6;
};

int run_search(const SearchArgs& a) {
  Manifest man;
  man.subcommand = "search";
  man.seed = a.seed;
  man.config = {{"trials", a.trials}, {"epochs", a.epochs}};
  data::Corpus corpus = load_corpus(a.data_dir, man);
  io::PreparedData prep = io::prepare(corpus);

  train::TrainConfig base;
  base.max_epochs = a.epochs;
  base.patience = 3;
  base.seed = a.seed;
  train::SearchSpace space;
  space.max_epochs = {a.epochs};
  space.embed = {16, 32};
  space.state = {32, 64};
  space.bi_cell = {16, 32};

  auto evaluate = [&](const train::TrainConfig& cfg) {
    io::RealtimePrepared rt = io::prepare_realtime(prep, corpus, cfg.vocab_cutoff);
    if (rt.train.empty() || rt.val.empty())
      throw DataError("no aligned repair logs in train/validation splits");
    net::RealtimeModel model(feat::kOnsetDim, rt.vocab.size(), cfg.sizes, cfg.seed);
    train::History h = train::train_realtime(model, rt.train, rt.val, cfg);
    return h.best_val_nll;
  };
  num::Rng rng(a.seed);
  auto board = train::random_search(space, a.trials, base, rng, evaluate);
  std::string table = train::leaderboard_table(board);
  std::cout << table;
  fs::create_directories(a.out);
  {
    std::ofstream f(a.out + "/leaderboard.tsv");
    f << table;
  }
  man.artifacts = {a.out + "/leaderboard.tsv"};
  man.write(a.out, "ok");
  return 0;
}

struct PredictArgs {
  std::string data_dir, model_dir, id;
  bool logs_stdin = false;
  bool table_iii = false;  // report-style output
};

int run_predict(const PredictArgs& a) {
  Manifest man;
  man.subcommand = a.table_iii ? "report" : "predict";
  io::LoadedModel m = load_model(a.model_dir);
  man.seed = m.config.seed;
  man.config = {{"id", a.id}};
  data::Corpus corpus = load_corpus(a.data_dir, man);
  const data::OutageRecord& rec = find_outage(corpus, a.id);
  net::InitialPredictor initial = require_initial(a.model_dir, m);
  PredictInputs in = build_predict_inputs(a.model_dir, m, corpus, rec, a.logs_stdin);

  std::vector<gamma::GammaParams> dists;
  dists.push_back(initial.predict(in.f_initial));
  if (!in.logs.empty()) {
    text::Vocab vocab;
    net::RealtimeModel model = require_realtime(a.model_dir, m, vocab);
    auto steps = model.forward(in.onset19, in.logs);
    for (const auto& s : steps) dists.emplace_back(s.k.scalar(), s.theta.scalar());
  }
  if (a.table_iii) {
    std::vector<eval::ReportRow> rows;
    rows.push_back(eval::report_row(dists[0], 0.0));
    for (size_t i = 1; i < dists.size(); ++i)
      rows.push_back(eval::report_row(dists[i], in.elapsed[i - 1]));
    std::cout << eval::report_table(rows);
  } else {
    std::cout << "stage\telapsed\tk\ttheta\tmode\tmean\tq80\n";
    for (size_t i = 0; i < dists.size(); ++i) {
      double elapsed = i == 0 ? 0.0 : in.elapsed[i - 1];
      eval::ReportRow r = eval::report_row(dists[i], elapsed);
      std::cout << (i == 0 ? std::string("initial") : "report" + std::to_string(i))
                << "\t" << elapsed << "\t" << dists[i].k << "\t" << dists[i].theta
                << "\t" << r.mode << "\t" << r.mean << "\t" << r.q80 << "\n";
    }
  }
  man.write(a.model_dir, "ok");
  return 0;
}

struct EvaluateArgs {
  std::string data_dir, model_dir;
};

int run_evaluate(const EvaluateArgs& a) {
  Manifest man;
  man.subcommand = "evaluate";
  io::LoadedModel m = load_model(a.model_dir);
  man.seed = m.config.seed;
  data::Corpus corpus = load_corpus(a.data_dir, man);
  io::PreparedData prep = io::prepare(corpus);
  if (prep.test.empty()) throw DataError("test split is empty");
  net::InitialPredictor initial = require_initial(a.model_dir, m);

  auto test_ex = io::initial_examples(prep.test, m.config.initial_features);
  std::vector<gamma::GammaParams> preds;
  std::vector<double> truths;
  for (const auto& ex : test_ex) {
    preds.push_back(initial.predict(ex.f));
    truths.push_back(ex.duration_hours);
  }
  std::vector<eval::MetricRow> rows = {
      eval::metrics(preds, truths, "test", io::to_string(m.config.initial_features))};
  std::cout << eval::metric_table(rows);

  // linear baseline on the full onset features
  std::vector<std::vector<double>> xtr, xte;
  std::vector<double> ytr, yte;
  for (const auto& ex : prep.train) {
    xtr.push_back(ex.onset19);
    ytr.push_back(ex.duration_hours);
  }
  for (const auto& ex : prep.test) {
    xte.push_back(ex.onset19);
    yte.push_back(ex.duration_hours);
  }
  eval::BaselineResult base = eval::linear_baseline(xtr, ytr, xte, yte);
  std::cout << "linear baseline rmse " << base.rmse << " corr " << base.corr100 << "\n";

  if (io::has_realtime(a.model_dir)) {
    text::Vocab vocab;
    net::RealtimeModel model = require_realtime(a.model_dir, m, vocab);
    io::RealtimePrepared rt =
        io::prepare_realtime(prep, corpus, m.config.vocab_cutoff);
    if (!rt.test.empty()) {
      bool remaining = m.config.target_remaining;
      std::cout << "realtime test mean per-report NLL: "
                << train::realtime_nll(model, rt.test, remaining) << "\n";
      std::vector<eval::SequenceEval> seqs;
      for (size_t i = 0; i < rt.test.size(); ++i) {
        const auto& ex = rt.test[i];
        if (ex.logs.size() < 3) continue;
        eval::SequenceEval se;
        auto f_init = io::select_features(
            m.config.initial_features, ex.f,
            onehot_for(find_outage(corpus, rt.test_ids[i])));
        se.dists.push_back(initial.predict(f_init));
        se.truths.push_back(ex.duration_hours);
        auto steps = model.forward(ex.f, ex.logs);
        for (size_t t = 0; t < steps.size() && t < 3; ++t) {
          se.dists.emplace_back(steps[t].k.scalar(), steps[t].theta.scalar());
          se.truths.push_back(train::realtime_target(ex, t, remaining));
        }
        seqs.push_back(std::move(se));
      }
      if (!seqs.empty()) std::cout << eval::per_report_table(eval::per_report_metrics(seqs));
    }
  }
  man.write(a.model_dir, "ok");
  return 0;
}

struct ExportArgs {
  std::string data_dir, model_dir, out;
  int limit = 0;  // 0 = all
};

std::vector<eval::AttentionExport> collect_exports(const ExportArgs& a, Manifest& man) {
  io::LoadedModel m = load_model(a.model_dir);
  man.seed = m.config.seed;
  data::Corpus corpus = load_corpus(a.data_dir, man);
  io::PreparedData prep = io::prepare(corpus);
  text::Vocab vocab;
  net::RealtimeModel model = require_realtime(a.model_dir, m, vocab);
  io::RealtimePrepared rt = io::prepare_realtime(prep, corpus, m.config.vocab_cutoff);
  std::vector<eval::AttentionExport> exports;
  for (size_t i = 0; i < rt.test.size(); ++i) {
    if (a.limit > 0 && int(exports.size()) >= a.limit) break;
    auto steps = model.forward(rt.test[i].f, rt.test[i].logs);
    for (size_t t = 0; t < steps.size(); ++t) {
      const text::NormalizedLog& norm = rt.test_norm[i][t];
      exports.push_back(eval::attention_export(rt.test_ids[i], int(t), norm.tokens,
                                               norm.spans, steps[t].attn));
    }
  }
  if (exports.empty()) throw DataError("no test outages with repair logs");
  return exports;
}

int run_attention(const ExportArgs& a) {
  Manifest man;
  man.subcommand = "attention";
  auto exports = collect_exports(a, man);
  std::string records = eval::attention_records(exports);
  if (a.out.empty()) {
    std::cout << records;
    man.write(a.model_dir, "ok");
  } else {
    fs::create_directories(fs::path(a.out).parent_path().empty()
                               ? "."
                               : fs::path(a.out).parent_path().string());
    std::ofstream f(a.out);
    f << records;
    man.artifacts = {a.out};
    man.write(a.model_dir, "ok");
  }
  return 0;
}

int run_bigrams(const ExportArgs& a) {
  Manifest man;
  man.subcommand = "bigrams";
  auto exports = collect_exports(a, man);
  std::cout << eval::bigram_table(eval::top_bigrams(exports));
  man.write(a.model_dir, "ok");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma-distributed outage-duration prediction pipeline"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen-data", "Generate a seeded synthetic corpus");
  cgen->add_option("--out", gen.out, "output directory")->required();
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--config", gen.config_path, "generator config file");
  cgen->add_option("--outages", gen.outages, "override outage count");

  TrainInitialArgs ti;
  auto* cti = app.add_subcommand("train-initial", "Train the onset feedforward model");
  cti->add_option("--data-dir", ti.data_dir, "corpus directory")->required();
  cti->add_option("--out", ti.out, "model directory to create")->required();
  cti->add_option("--features", ti.features,
                  "none|time|time-weather|onset|cause-onset");
  cti->add_option("--seed", ti.seed, "RNG seed");
  cti->add_option("--epochs", ti.epochs, "max epochs");
  cti->add_option("--patience", ti.patience, "early-stop patience (epochs)");
  cti->add_option("--lr", ti.lr, "Adam learning rate");

  TrainRealtimeArgs tr;
  auto* ctr = app.add_subcommand("train-realtime",
                                 "Train the repair-log update model into a model dir");
  ctr->add_option("--data-dir", tr.data_dir, "corpus directory")->required();
  ctr->add_option("--model-dir", tr.model_dir, "existing model directory")->required();
  ctr->add_option("--seed", tr.seed, "RNG seed");
  ctr->add_option("--epochs", tr.epochs, "max epochs");
  ctr->add_option("--patience", tr.patience, "early-stop patience (epochs)");
  ctr->add_option("--lr", tr.lr, "Adam learning rate");
  ctr->add_option("--dropout", tr.dropout, "variational dropout rate");
  ctr->add_option("--cutoff", tr.cutoff, "vocabulary count cutoff");
  ctr->add_option("--heads", tr.heads, "attention heads (1 or 2)");
  ctr->add_option("--embed", tr.embed, "embedding width");
  ctr->add_option("--cell", tr.cell, "bi-GRU cell size");
  ctr->add_option("--state", tr.state, "update-GRU state size");
  ctr->add_option("--target", tr.target, "remaining|total duration target");
  ctr->add_flag("--no-layer-norm", tr.no_layer_norm, "disable GRU layer norm");

  SearchArgs se;
  auto* cse = app.add_subcommand("search", "Random hyperparameter search (realtime)");
  cse->add_option("--data-dir", se.data_dir, "corpus directory")->required();
  cse->add_option("--out", se.out, "output directory")->required();
  cse->add_option("--seed", se.seed, "RNG seed");
  cse->add_option("--trials", se.trials, "number of sampled configs");
  cse->add_option("--epochs", se.epochs, "epochs per trial");

  PredictArgs pr;
  auto* cpr = app.add_subcommand("predict", "Predict one outage (initial + per report)");
  cpr->add_option("--data-dir", pr.data_dir, "corpus directory")->required();
  cpr->add_option("--model-dir", pr.model_dir, "trained model directory")->required();
  cpr->add_option("--id", pr.id, "outage id")->required();
  cpr->add_flag("--logs-stdin", pr.logs_stdin,
                "read logs from stdin as 'elapsed_hours<TAB>text'");

  PredictArgs rp;
  rp.table_iii = true;
  auto* crp = app.add_subcommand("report", "Mode/mean/80% table for one outage");
  crp->add_option("--data-dir", rp.data_dir, "corpus directory")->required();
  crp->add_option("--model-dir", rp.model_dir, "trained model directory")->required();
  crp->add_option("--id", rp.id, "outage id")->required();
  crp->add_flag("--logs-stdin", rp.logs_stdin,
                "read logs from stdin as 'elapsed_hours<TAB>text'");

  EvaluateArgs ev;
  auto* cev = app.add_subcommand("evaluate", "Metrics on the test split");
  cev->add_option("--data-dir", ev.data_dir, "corpus directory")->required();
  cev->add_option("--model-dir", ev.model_dir, "trained model directory")->required();

  ExportArgs at;
  auto* cat = app.add_subcommand("attention", "Export attention weights (test split)");
  cat->add_option("--data-dir", at.data_dir, "corpus directory")->required();
  cat->add_option("--model-dir", at.model_dir, "trained model directory")->required();
  cat->add_option("--out", at.out, "output file (default stdout)");
  cat->add_option("--limit", at.limit, "max reports to export (0 = all)");

  ExportArgs bg;
  auto* cbg = app.add_subcommand("bigrams", "Top attended bigrams (test split)");
  cbg->add_option("--data-dir", bg.data_dir, "corpus directory")->required();
  cbg->add_option("--model-dir", bg.model_dir, "trained model directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (cgen->parsed()) return run_gen(gen);
    if (cti->parsed()) return run_train_initial(ti);
    if (ctr->parsed()) return run_train_realtime(tr);
    if (cse->parsed()) return run_search(se);
    if (cpr->parsed()) return run_predict(pr);
    if (crp->parsed()) return run_predict(rp);
    if (cev->parsed()) return run_evaluate(ev);
    if (cat->parsed()) return run_attention(at);
    if (cbg->parsed()) return run_bigrams(bg);
  } catch (const num::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
