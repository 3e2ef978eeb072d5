// Command-line front end: one subcommand per pipeline stage.
//
// Every subcommand accepts `--config FILE` with `key = value` lines naming
// its long options; flags given on the command line take precedence.
// Runs that write into `--out` leave the resolved configuration there as
// `config.txt`, which can be passed back through `--config`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pcl/analysis/cca.hpp"
#include "pcl/analysis/export.hpp"
#include "pcl/analysis/stats.hpp"
#include "pcl/data/feature_csv.hpp"
#include "pcl/data/mvf.hpp"
#include "pcl/data/synth.hpp"
#include "pcl/dsp/audio.hpp"
#include "pcl/train/experiments.hpp"

namespace fs = std::filesystem;
using namespace pcl;

namespace {

constexpr int kUsageError = 2;

/// Raised for option combinations that parse but make no sense together.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

/// Options of `sub` as `key = value` lines, keyed by long name.
std::string resolved_config(const CLI::App& sub) {
  std::ostringstream os;
  os << "# " << sub.get_name() << '\n';
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string key = opt->get_single_name();
    if (key == "help" || key == "config") continue;
    std::string value;
    if (opt->get_expected_min() == 0) {
      value = opt->count() > 0 ? "true" : "false";
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
    } else {
      value = opt->get_default_str();
    }
    os << key << " = " << value << '\n';
  }
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << text;
}

std::vector<int> parse_folds(const std::string& spec, const data::Manifest& m) {
  const int n = static_cast<int>(m.sessions().size());
  std::vector<int> out;
  if (spec == "all") {
    out.resize(static_cast<std::size_t>(n));
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (const auto& f : split(spec)) {
    const int k = std::stoi(f);
    if (k < 0 || k >= n) throw UsageError("fold " + f + " outside [0, " + std::to_string(n) + ")");
    out.push_back(k);
  }
  if (out.empty()) throw UsageError("no folds selected");
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split(s)) out.push_back(std::stod(x));
  return out;
}

fs::path fold_dir(const std::string& run, int fold) { return fs::path(run) / ("fold" + std::to_string(fold)); }

std::map<int, models::Checkpoint> load_pretrained(const std::string& run, const std::vector<int>& folds) {
  std::map<int, models::Checkpoint> out;
  for (int f : folds) {
    const fs::path p = fold_dir(run, f) / "pretrain.ckpt";
    if (!fs::exists(p)) throw UsageError("missing pre-trained checkpoint " + p.string());
    out[f] = models::load_checkpoint(p.string());
  }
  return out;
}

std::vector<fs::path> wav_files(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Options {
  std::string config;
  std::string manifest;
  std::string out;
  std::string views = "w2v2,spec,egemaps";
  std::string view;
  std::string folds = "all";
  std::string from;
  std::string checkpoint;
  std::string fractions = "0.02,0.05,0.10,0.25";
  std::string taus = "0.1,0.25,0.5,1.0";
  std::string freeze_options = "false,true";
  std::string input;
  std::string csv;
  std::string a, b, name_a = "a", name_b = "b";
  double tau = 0.5;
  double p = 1.0;
  double lr = 1e-3;
  Index batch = 128;
  Index ft_batch = 32;
  Index epochs = 100;
  Index patience = 30;
  Index ft_epochs = 100;
  Index ft_patience = 20;
  Index repeats = 1;
  Index columns = data::kEgemapsColumns;
  std::uint64_t seed = 0;
  bool freeze = false;
  bool normalize = false;
  bool supervised = true;
  // synth
  Index per_class = 200;
  Index classes = 4;
  Index sessions = 5;
  Index speakers = 10;
};

template <typename Config>
const Config& checked(const Config& cfg) {
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

train::FinetuneConfig finetune_config(const Options& o) {
  train::FinetuneConfig fc;
  fc.view = o.view;
  fc.freeze = o.freeze;
  fc.lr = o.lr;
  fc.max_epochs = o.ft_epochs;
  fc.patience = o.ft_patience;
  fc.batch_size = o.ft_batch;
  fc.label_fraction = o.p;
  fc.seed = o.seed;
  fc.label_seed = derive_seed(o.seed, {0x5A});
  return checked(fc);
}

train::PretrainConfig pretrain_config(const Options& o) {
  train::PretrainConfig pc;
  pc.views = split(o.views);
  pc.tau = o.tau;
  pc.batch_size = o.batch;
  pc.max_epochs = o.epochs;
  pc.patience = o.patience;
  pc.lr = o.lr;
  pc.seed = o.seed;
  return checked(pc);
}

int cmd_synth(const Options& o) {
  data::SynthConfig cfg;
  cfg.n_per_class = o.per_class;
  cfg.n_classes = o.classes;
  cfg.n_sessions = o.sessions;
  cfg.n_speakers = o.speakers;
  const data::Manifest m = data::synth_generate(cfg, o.seed, o.out);
  std::cout << "wrote " << m.records.size() << " records, " << m.views.size() << " views to "
            << (fs::path(o.out) / "manifest.txt").string() << '\n';
  return 0;
}

int cmd_extract_mel(const Options& o) {
  dsp::MelConfig mc;
  mc.normalize = o.normalize;
  std::ostringstream index;
  for (const auto& wav : wav_files(o.input)) {
    const dsp::Waveform w = dsp::pad_or_trim(dsp::read_audio(wav.string()));
    const dsp::MelSpec spec = dsp::mel_spectrogram(w, mc);
    const fs::path out = fs::path(o.out) / (wav.stem().string() + ".mvf");
    fs::create_directories(out.parent_path());
    data::mvf_write(out.string(), spec.values);
    index << wav.stem().string() << ' ' << out.filename().string() << '\n';
  }
  write_text(fs::path(o.out) / "index.txt", index.str());
  return 0;
}

int cmd_extract_para(const Options& o) {
  std::vector<std::pair<std::string, std::array<float, dsp::kParaDim>>> rows;
  for (const auto& wav : wav_files(o.input)) {
    const auto v = dsp::paralinguistic_vector(dsp::read_audio(wav.string()));
    const fs::path out = fs::path(o.out) / (wav.stem().string() + ".mvf");
    fs::create_directories(out.parent_path());
    data::mvf_write(out.string(), TensorF({dsp::kParaDim}, std::vector<float>(v.begin(), v.end())));
    rows.emplace_back(wav.stem().string(), v);
  }
  fs::create_directories(o.out);
  dsp::write_para_csv(o.csv.empty() ? (fs::path(o.out) / "para.csv").string() : o.csv, rows);
  return 0;
}

int cmd_import_csv(const Options& o) {
  const data::FeatureTable t = data::read_feature_csv(o.csv, o.columns);
  data::write_feature_vectors(t, o.out);
  std::cout << "imported " << t.ids.size() << " rows of " << t.columns.size() << " values\n";
  return 0;
}

int cmd_pretrain(const Options& o) {
  const data::Manifest m = data::load_manifest(o.manifest);
  const train::PretrainConfig pc = pretrain_config(o);
  const std::vector<int> folds = parse_folds(o.folds, m);
  const train::Dataset d = train::load_dataset(m, pc.views);
  const auto results = train::pretrain(d, folds, pc);
  std::ostringstream summary;
  summary << "fold,best_epoch,stop_epoch,best_val_loss\n";
  for (const auto& r : results) {
    const fs::path dir = fold_dir(o.out, r.fold);
    fs::create_directories(dir);
    models::save_checkpoint((dir / "pretrain.ckpt").string(), r.checkpoint);
    train::save_history((dir / "history.txt").string(), r.history);
    summary << r.fold << ',' << r.history.best_epoch << ',' << r.history.stop_epoch << ','
            << num(r.checkpoint.meta_double("best_val_loss")) << '\n';
  }
  write_text(fs::path(o.out) / "pretrain.csv", summary.str());
  std::cout << summary.str();
  return 0;
}

int run_sparse(const Options& o, std::vector<double> fractions) {
  if (o.from.empty()) throw UsageError("sparse experiments need --from <pretrain run>");
  const data::Manifest m = data::load_manifest(o.manifest);
  train::SparseConfig sc;
  sc.fractions = std::move(fractions);
  sc.repeats = o.repeats;
  sc.folds = parse_folds(o.folds, m);
  sc.finetune = finetune_config(o);
  sc.seed = o.seed;
  checked(sc);
  const train::Dataset d = train::load_dataset(m, {o.view});
  const auto result = train::run_sparse_experiment(d, sc, load_pretrained(o.from, sc.folds));
  fs::create_directories(o.out);
  train::write_sparse_csv((fs::path(o.out) / "sparse.csv").string(), result);
  std::cout << train::sparse_csv_header() << '\n';
  for (const auto& r : result.rows) std::cout << train::sparse_csv_row(r) << '\n';
  return 0;
}

int cmd_finetune(const Options& o) {
  if (o.freeze && o.from.empty()) throw UsageError("--freeze needs --from: a frozen random encoder is not a baseline");
  if (o.repeats > 1) return run_sparse(o, {o.p});
  const data::Manifest m = data::load_manifest(o.manifest);
  const std::vector<int> folds = parse_folds(o.folds, m);
  const train::Dataset d = train::load_dataset(m, {o.view});
  const train::FinetuneConfig fc = finetune_config(o);
  std::map<int, models::Checkpoint> init;
  if (!o.from.empty()) init = load_pretrained(o.from, folds);
  std::vector<train::FinetuneResult> results(folds.size());
  train::parallel_for(static_cast<Index>(folds.size()), [&](Index i) {
    const int f = folds[static_cast<std::size_t>(i)];
    results[static_cast<std::size_t>(i)] = train::finetune(d, f, fc, init.empty() ? nullptr : &init.at(f));
  });
  std::ostringstream metrics;
  metrics << "split," << train::metrics_csv_header() << '\n';
  for (std::size_t i = 0; i < folds.size(); ++i) {
    auto& r = results[i];
    const fs::path dir = fold_dir(o.out, folds[i]);
    fs::create_directories(dir);
    models::save_checkpoint((dir / "finetune.ckpt").string(), r.checkpoint());
    train::save_history((dir / "finetune_history.txt").string(), r.history);
    metrics << "val," << train::metrics_csv_row(r.val) << '\n' << "test," << train::metrics_csv_row(r.test) << '\n';
  }
  write_text(fs::path(o.out) / "metrics.csv", metrics.str());
  std::cout << metrics.str();
  return 0;
}

int cmd_eval(const Options& o) {
  const data::Manifest m = data::load_manifest(o.manifest);
  const models::Checkpoint ckpt = models::load_checkpoint(o.checkpoint);
  const std::string view = o.view.empty() ? ckpt.encoders.at(0).view : o.view;
  models::Encoder<float> enc(models::find_encoder_spec(ckpt, view), 0);
  models::restore_encoder(ckpt, enc);
  Rng rng(0);
  models::ClassifierHead<float> clf(enc.spec().output_dim, static_cast<Index>(m.labels.size()), rng);
  models::restore_classifier(ckpt, view, clf);
  const train::Dataset d = train::load_dataset(m, {view});
  std::ostringstream out;
  out << "split," << train::metrics_csv_header() << '\n';
  for (int f : parse_folds(o.folds, m)) {
    const data::CvSplit split = data::make_cv_splits(m, f);
    train::MetricsReport r = train::evaluate(enc, clf, d, d.indices_in_sessions({split.test}));
    r.fold = f;
    out << "test," << train::metrics_csv_row(r) << '\n';
  }
  if (!o.out.empty()) write_text(fs::path(o.out) / "eval.csv", out.str());
  std::cout << out.str();
  return 0;
}

int cmd_grid(const Options& o) {
  const data::Manifest m = data::load_manifest(o.manifest);
  train::GridConfig gc;
  gc.taus = parse_doubles(o.taus);
  gc.freeze_options.clear();
  for (const auto& f : split(o.freeze_options)) {
    if (f != "true" && f != "false") throw UsageError("freeze options must be true/false, got '" + f + "'");
    gc.freeze_options.push_back(f == "true");
  }
  gc.folds = parse_folds(o.folds, m);
  gc.pretrain = pretrain_config(o);
  gc.views = o.view.empty() ? gc.pretrain.views : split(o.view);
  gc.include_supervised = o.supervised;
  gc.finetune = finetune_config(o);
  checked(gc);
  const train::Dataset d = train::load_dataset(m, gc.pretrain.views);
  const auto rows = train::run_temperature_grid(d, gc);
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "grid.csv";
  train::write_grid_csv(path.string(), rows, gc.views);
  std::ifstream is(path);
  std::cout << is.rdbuf();
  return 0;
}

int cmd_pwcca(const Options& o) {
  const TensorF a = data::mvf_read(o.a);
  const TensorF b = data::mvf_read(o.b);
  const analysis::AlignmentReport r = analysis::pwcca(analysis::to_matrix(a), analysis::to_matrix(b));
  const std::string text =
      analysis::alignment_csv_header() + ",method\n" + analysis::alignment_csv_row(o.name_a, o.name_b, r) + ",pwcca\n";
  if (!o.out.empty()) write_text(fs::path(o.out) / "pwcca.csv", text);
  std::cout << text;
  return 0;
}

int cmd_export_reps(const Options& o) {
  const data::Manifest m = data::load_manifest(o.manifest);
  models::Encoder<float> enc;
  if (!o.checkpoint.empty()) {
    const models::Checkpoint ckpt = models::load_checkpoint(o.checkpoint);
    enc = models::Encoder<float>(models::find_encoder_spec(ckpt, o.view), 0);
    models::restore_encoder(ckpt, enc);
  } else {
    enc = models::Encoder<float>(train::default_encoder_spec(m.view(o.view)), o.seed);
  }
  fs::create_directories(fs::path(o.out).parent_path().empty() ? fs::path(".") : fs::path(o.out).parent_path());
  const TensorF reps = analysis::export_representations(enc, m, o.out);
  std::cout << "wrote " << shape_str(reps.shape()) << " to " << o.out << '\n';
  return 0;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

int cmd_report(const Options& o) {
  const fs::path run(o.input);
  const std::vector<std::string> known = {"grid.csv", "sparse.csv", "metrics.csv", "pretrain.csv"};
  std::vector<std::string> present;
  for (const auto& k : known) {
    if (fs::exists(run / k)) present.push_back(k);
  }
  if (present.empty()) {
    std::cerr << "report: no run artifacts in '" << run.string() << "'; absent:";
    for (const auto& k : known) std::cerr << ' ' << (run / k).string();
    std::cerr << '\n';
    return 1;
  }
  const fs::path out_dir = o.out.empty() ? run : fs::path(o.out);
  for (const auto& k : present) {
    const auto rows = read_csv(run / k);
    std::ostringstream os;
    if (k == "metrics.csv" && rows.size() > 1) {
      // Fold means per split.
      std::map<std::string, std::array<double, 3>> acc;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        auto& a = acc[rows[i].at(0)];
        a[0] += std::stod(rows[i].at(3));
        a[1] += std::stod(rows[i].at(4));
        a[2] += 1.0;
      }
      os << "split,mean_uar,mean_wa,folds\n";
      for (const auto& [split_name, a] : acc) os << split_name << ',' << num(a[0] / a[2]) << ',' << num(a[1] / a[2]) << ',' << a[2] << '\n';
    } else {
      for (const auto& r : rows) os << csv_line(r) << '\n';
    }
    write_text(out_dir / ("report_" + k), os.str());
    std::cout << "== " << k << '\n' << os.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise multi-view contrastive pre-training for speech emotion recognition"};
  app.require_subcommand(1);
  Options o;
  std::map<std::string, std::function<int(const Options&)>> handlers;

  auto add = [&](const std::string& name, const std::string& help, std::function<int(const Options&)> fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "key = value file; command-line flags win");
    handlers[name] = std::move(fn);
    return sub;
  };
  auto manifest = [&](CLI::App* s) { s->add_option("--manifest", o.manifest, "dataset manifest")->required(); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "run seed")->capture_default_str(); };
  auto folds = [&](CLI::App* s) { s->add_option("--fold", o.folds, "'all' or comma-separated fold indices")->capture_default_str(); };
  auto finetune_opts = [&](CLI::App* s) {
    s->add_option("--view", o.view, "view to fine-tune")->required();
    s->add_option("--from", o.from, "pre-training run directory");
    s->add_flag("--freeze", o.freeze, "keep encoder parameters fixed");
    s->add_option("--lr", o.lr, "learning rate")->capture_default_str();
    s->add_option("--ft-epochs", o.ft_epochs, "maximum fine-tuning epochs")->capture_default_str();
    s->add_option("--ft-patience", o.ft_patience, "early-stopping patience on validation UAR")->capture_default_str();
    s->add_option("--ft-batch", o.ft_batch, "fine-tuning batch size")->capture_default_str();
  };
  auto pretrain_opts = [&](CLI::App* s) {
    s->add_option("--views", o.views, "comma-separated views")->capture_default_str();
    s->add_option("--tau", o.tau, "temperature")->capture_default_str();
    s->add_option("--batch", o.batch, "pre-training batch size")->capture_default_str();
    s->add_option("--epochs", o.epochs, "maximum pre-training epochs")->capture_default_str();
    s->add_option("--patience", o.patience, "early-stopping patience on validation loss")->capture_default_str();
  };

  CLI::App* s = add("synth", "generate the synthetic multi-view corpus", cmd_synth);
  s->add_option("--out", o.out, "output directory")->required();
  seed(s);
  s->add_option("--per-class", o.per_class, "utterances per class")->capture_default_str();
  s->add_option("--classes", o.classes, "number of classes")->capture_default_str();
  s->add_option("--sessions", o.sessions, "number of sessions")->capture_default_str();
  s->add_option("--speakers", o.speakers, "number of speakers")->capture_default_str();

  s = add("extract-mel", "log-mel spectrograms of a WAV directory", cmd_extract_mel);
  s->add_option("--input", o.input, "directory of .wav files")->required()->check(CLI::ExistingDirectory);
  s->add_option("--out", o.out, "output directory")->required();
  s->add_flag("--normalize", o.normalize, "per-utterance mean/variance normalization");

  s = add("extract-para", "42-feature paralinguistic vectors of a WAV directory", cmd_extract_para);
  s->add_option("--input", o.input, "directory of .wav files")->required()->check(CLI::ExistingDirectory);
  s->add_option("--out", o.out, "output directory")->required();
  s->add_option("--csv", o.csv, "CSV path (default <out>/para.csv)");

  s = add("import-csv", "convert an utterance-level feature CSV into MVF vectors", cmd_import_csv);
  s->add_option("--csv", o.csv, "feature CSV with an id column")->required()->check(CLI::ExistingFile);
  s->add_option("--out", o.out, "output directory")->required();
  s->add_option("--columns", o.columns, "required value columns (0 = any)")->capture_default_str();

  s = add("pretrain", "contrastive pre-training per fold", cmd_pretrain);
  manifest(s);
  pretrain_opts(s);
  s->add_option("--lr", o.lr, "learning rate")->capture_default_str();
  folds(s);
  seed(s);
  s->add_option("--out", o.out, "run directory")->required();

  s = add("finetune", "supervised fine-tuning; with --repeats > 1 a paired sparse-label run", cmd_finetune);
  manifest(s);
  finetune_opts(s);
  s->add_option("--p", o.p, "per-class label fraction")->capture_default_str();
  s->add_option("--repeats", o.repeats, "paired repeats")->capture_default_str();
  folds(s);
  seed(s);
  s->add_option("--out", o.out, "run directory")->required();

  s = add("eval", "test-session metrics of a fine-tuned checkpoint", cmd_eval);
  manifest(s);
  s->add_option("--checkpoint", o.checkpoint, "fine-tuned checkpoint")->required()->check(CLI::ExistingFile);
  s->add_option("--view", o.view, "view (default: first encoder in the checkpoint)");
  folds(s);
  s->add_option("--out", o.out, "directory for eval.csv");

  s = add("sparse", "paired sparse-annotation experiment", [&](const Options& opt) {
    return run_sparse(opt, parse_doubles(opt.fractions));
  });
  manifest(s);
  finetune_opts(s);
  s->add_option("--fractions", o.fractions, "per-class label fractions")->capture_default_str();
  s->add_option("--repeats", o.repeats, "paired repeats")->capture_default_str();
  folds(s);
  seed(s);
  s->add_option("--out", o.out, "run directory")->required();

  s = add("grid", "temperature x freeze grid with average ranks", cmd_grid);
  manifest(s);
  pretrain_opts(s);
  s->add_option("--view", o.view, "views to fine-tune (default: all pre-trained views)");
  s->add_option("--taus", o.taus, "temperatures")->capture_default_str();
  s->add_option("--freeze-options", o.freeze_options, "subset of true,false")->capture_default_str();
  s->add_option("--supervised", o.supervised, "include the supervised reference row")->capture_default_str();
  s->add_option("--lr", o.lr, "learning rate")->capture_default_str();
  s->add_option("--ft-epochs", o.ft_epochs, "maximum fine-tuning epochs")->capture_default_str();
  s->add_option("--ft-patience", o.ft_patience, "fine-tuning patience")->capture_default_str();
  folds(s);
  seed(s);
  s->add_option("--out", o.out, "run directory")->required();

  s = add("pwcca", "PWCCA alignment of two representation files", cmd_pwcca);
  s->add_option("--a", o.a, "[N, d1] MVF; the weighting view")->required()->check(CLI::ExistingFile);
  s->add_option("--b", o.b, "[N, d2] MVF")->required()->check(CLI::ExistingFile);
  s->add_option("--name-a", o.name_a, "label of a")->capture_default_str();
  s->add_option("--name-b", o.name_b, "label of b")->capture_default_str();
  s->add_option("--out", o.out, "directory for pwcca.csv");

  s = add("export-reps", "encode all manifest records into an [N, 128] MVF", cmd_export_reps);
  manifest(s);
  s->add_option("--view", o.view, "view")->required();
  s->add_option("--checkpoint", o.checkpoint, "checkpoint holding the encoder (default: random init)");
  seed(s);
  s->add_option("--out", o.out, "output MVF path")->required();

  s = add("report", "aggregate run artifacts into summary tables", cmd_report);
  s->add_option("--run", o.input, "run directory")->required();
  s->add_option("--out", o.out, "output directory (default: the run directory)");

  // Config values are injected as flags that the command line did not set.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string config_path;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") config_path = args[i + 1];
    }
    if (!config_path.empty() && !args.empty()) {
      CLI::App* sub = app.get_subcommand(args.front());
      const std::set<std::string> given(args.begin(), args.end());
      for (const auto& [key, value] : read_config(config_path)) {
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw UsageError("config key '" + key + "' is not an option of '" + sub->get_name() + "'");
        if (given.count("--" + key)) continue;
        if (opt->get_expected_min() == 0) {
          if (value == "true") args.push_back("--" + key);
        } else {
          args.push_back("--" + key);
          args.push_back(value);
        }
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    try {
      if (!o.out.empty() && sub->get_name() != "export-reps" && sub->get_name() != "report") {
        write_text(fs::path(o.out) / "config.txt", resolved_config(*sub));
      }
      return handlers.at(sub->get_name())(o);
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return kUsageError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return kUsageError;
}
