// SPDX-License-Identifier: Apache-2.0
// qsurv: command-line front end for simulation, training, evaluation,
// prediction, node-count sweeps and random hyperparameter search.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsurv/qsurv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qsurv;

namespace {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw ContractError("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return sha256_hex(os.str());
}

/// Collects what a run read and wrote. Directory outputs get dir/manifest.json;
/// single-file outputs get <file>.manifest.json next to the file.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& path) { inputs_.push_back({{"path", path}, {"sha256", file_sha256(path)}}); }
  void output(const fs::path& path) { outputs_.push_back(path.string()); }
  void config(const json& j) { config_hash_ = sha256_hex(j.dump()); }
  void seed(std::uint64_t s) { seed_ = s; }

  void write(const fs::path& path) const {
    json j;
    j["schema_version"] = 1;
    j["command"] = command_;
    j["argv"] = argv_;
    j["config_hash"] = config_hash_.empty() ? json(nullptr) : json(config_hash_);
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["version"] = kVersion;
    std::ofstream(path) << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::string config_hash_;
  std::optional<std::uint64_t> seed_;
};

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  return out;
}

/// Comma-separated unsigned integers.
template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw ConfigError("invalid " + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + " must be a nonempty comma-separated list");
  return out;
}

/// "lo:hi:n" -> n equally spaced points on [lo, hi].
std::vector<double> parse_grid(const std::string& text) {
  double lo = 0.0, hi = 0.0;
  unsigned long n = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lu%c", &lo, &hi, &n, &tail) != 3) {
    throw ConfigError("grid must look like lo:hi:n, got '" + text + "'");
  }
  if (!(lo >= 0.0) || !(hi >= lo) || n < 1 || !std::isfinite(hi)) {
    throw ConfigError("grid needs 0 <= lo <= hi and n >= 1");
  }
  return linspace(lo, hi, n);
}

struct TrainOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k_nodes;
  std::string conditioning;
  std::optional<std::size_t> epochs;
};

void add_override_flags(CLI::App* cmd, TrainOverrides& o) {
  cmd->add_option("--config", o.config_path, "training config JSON");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--k-nodes", o.k_nodes, "Gauss-Legendre nodes K");
  cmd->add_option("--conditioning", o.conditioning, "time conditioning head")
      ->check(CLI::IsMember({"concat", "film", "lora"}));
  cmd->add_option("--epochs", o.epochs, "maximum epochs");
}

TrainingConfig resolve_config(const TrainOverrides& o, Manifest& manifest) {
  TrainingConfig c;
  if (!o.config_path.empty()) {
    manifest.input(o.config_path);
    json j;
    try {
      j = read_json_file(o.config_path);
    } catch (const IngestionError& e) {
      throw ConfigError(e.what());
    }
    c = training_config_from_json(j);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.k_nodes) c.quadrature_order = *o.k_nodes;
  if (!o.conditioning.empty()) c.conditioning = conditioning_from_string(o.conditioning);
  if (o.epochs) c.max_epochs = *o.epochs;
  c.validate();
  manifest.config(to_json(c));
  manifest.seed(c.seed);
  return c;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string family, out;
  std::uint64_t seed = 0;
  std::size_t n_train = 2000, n_test = 2000;
  double censoring = 0.20;
};

int cmd_simulate(const SimulateArgs& a, Manifest& m) {
  GeneratorSpec spec = make_spec(family_from_string(a.family));
  spec.n_train = a.n_train;
  spec.n_test = a.n_test;
  spec.target_censoring = a.censoring;
  const fs::path dir = prepare_dir(a.out);
  m.seed(a.seed);
  m.config({{"family", a.family}, {"n_train", a.n_train}, {"n_test", a.n_test}, {"censoring", a.censoring}});
  const SimulatedData data = simulate(spec, a.seed);
  write_csv_file((dir / "train.csv").string(), data.train);
  write_csv_file((dir / "test.csv").string(), data.test);
  {
    auto out = open_out(dir / "truth.csv");
    write_truth_csv(out, GroundTruth(spec), evaluation_grid(data.train), data.train.covariates());
  }
  for (const char* f : {"train.csv", "test.csv", "truth.csv"}) m.output(dir / f);
  std::cout << "simulated " << to_string(spec.family) << ": " << data.train.size() << " train / " << data.test.size()
            << " test rows, train censoring " << std::fixed << std::setprecision(3)
            << data.train.censoring_rate() << '\n';
  return 0;
}

struct TrainArgs {
  TrainOverrides overrides;
  std::string train, out;
};

void write_log(const fs::path& dir, const std::vector<EpochRecord>& log, Manifest& m) {
  auto jl = open_out(dir / "training_log.jsonl");
  auto csv = open_out(dir / "training_log.csv");
  csv << "epoch,train_loss,val_loss,val_ctd,val_ibs,lr,clip_events\n";
  for (const auto& r : log) {
    jl << to_json(r).dump() << '\n';
    csv << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
        << optional_cell(r.val_ctd) << ',' << optional_cell(r.val_ibs) << ',' << format_double(r.lr) << ','
        << r.clip_events << '\n';
  }
  m.output(dir / "training_log.jsonl");
  m.output(dir / "training_log.csv");
}

int cmd_train(const TrainArgs& a, Manifest& m) {
  const TrainingConfig config = resolve_config(a.overrides, m);
  m.input(a.train);
  const Dataset data = read_csv_file(a.train);
  const fs::path dir = prepare_dir(a.out);
  const TrainingResult r = train(config, data);
  save_model(dir, r.model);
  std::ofstream(dir / "config.json") << to_json(config).dump(2) << '\n';
  write_log(dir, r.log, m);
  for (const char* f : {kCheckpointFile, kArchitectureFile, "config.json"}) m.output(dir / f);
  std::cout << "trained " << r.log.size() << " epochs, best epoch " << r.best_epoch;
  if (r.best_val_ctd) std::cout << ", val C_td " << std::setprecision(4) << *r.best_val_ctd;
  std::cout << '\n';
  if (r.diverged) std::cerr << "warning: training diverged: " << r.divergence_message << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string model, test, train, out;
};

int cmd_evaluate(const EvaluateArgs& a, Manifest& m) {
  const HazardModel model = load_model(a.model);
  m.input((fs::path(a.model) / kCheckpointFile).string());
  m.input(a.test);
  m.input(a.train);
  const Dataset test = read_csv_file(a.test);
  const Dataset train = read_csv_file(a.train);
  if (train.dim() != model.input_dim()) {
    throw ShapeError("training file has " + std::to_string(train.dim()) + " covariates, model expects " +
                     std::to_string(model.input_dim()));
  }
  const EvaluationReport report = evaluate_model(model, train, test);
  const fs::path out(a.out);
  if (out.has_parent_path()) prepare_dir(out.parent_path().string());
  open_out(out) << to_json(report).dump(2) << '\n';
  m.output(out);
  std::cout << "C_td(full) " << (report.full.ctd ? format_double(*report.full.ctd) : "undefined") << ", IBS(full) "
            << format_double(report.full.ibs) << ", D-cal p " << format_double(report.dcal.p_value) << '\n';
  return 0;
}

struct PredictArgs {
  std::string model, covariates, grid, out;
};

int cmd_predict(const PredictArgs& a, Manifest& m) {
  const HazardModel model = load_model(a.model);
  m.input((fs::path(a.model) / kCheckpointFile).string());
  m.input(a.covariates);
  const Dataset cov = read_csv_file(a.covariates, false);
  if (cov.dim() != model.input_dim()) {
    throw ShapeError("covariate file has " + std::to_string(cov.dim()) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
  const auto grid = parse_grid(a.grid);
  const QuadratureRule& rule = gauss_legendre(model.architecture().quadrature_order);
  const CurveTable table = predict_curves(model, rule, cov.covariates(), cov.size(), grid);
  const fs::path out(a.out);
  if (out.has_parent_path()) prepare_dir(out.parent_path().string());
  auto csv = open_out(out);
  csv << "subject_id,t,hazard,cumhaz,survival\n";
  const std::size_t G = grid.size();
  for (std::size_t i = 0; i < cov.size(); ++i)
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t idx = i * G + g;
      csv << i << ',' << format_double(grid[g]) << ',' << format_double(table.hazard[idx]) << ','
          << format_double(table.cumhaz[idx]) << ',' << format_double(table.survival[idx]) << '\n';
    }
  m.output(out);
  return 0;
}

struct SweepArgs {
  TrainOverrides overrides;
  std::string family, k_list = "1,2,3,5,7,10", seeds = "0,1,2,3,4", out;
  std::size_t n_train = 2000, n_test = 2000, threads = 1;
  bool hazard_only = false;
};

int cmd_sweep(const SweepArgs& a, Manifest& m) {
  GeneratorSpec spec = make_spec(family_from_string(a.family));
  spec.n_train = a.n_train;
  spec.n_test = a.n_test;
  SweepOptions opt;
  opt.k_values = parse_list<std::size_t>(a.k_list, "K list");
  opt.seeds = parse_list<std::uint64_t>(a.seeds, "seed list");
  opt.threads = a.threads;
  opt.hazard_only = a.hazard_only;
  const TrainingConfig base = resolve_config(a.overrides, m);
  const auto cells = sweep_nodes(spec, base, opt);
  const fs::path out(a.out);
  if (out.has_parent_path()) prepare_dir(out.parent_path().string());
  auto csv = open_out(out);
  csv << "k,seed,iae_survival,iae_cumhaz,iae_hazard,train_seconds,best_epoch,status\n";
  for (const auto& c : cells) {
    csv << c.k << ',' << c.seed << ',' << format_double(c.iae_survival) << ',' << format_double(c.iae_cumhaz) << ','
        << format_double(c.iae_hazard) << ',' << format_double(c.train_seconds) << ',' << c.best_epoch << ",\""
        << c.status << "\"\n";
  }
  m.output(out);
  std::cout << "K  mean_iae_hazard  mean_seconds\n";
  std::vector<double> ks, secs;
  for (std::size_t k : opt.k_values) {
    double iae = 0.0, s = 0.0;
    std::size_t ok = 0;
    for (const auto& c : cells) {
      if (c.k != k) continue;
      ks.push_back(static_cast<double>(k));
      secs.push_back(c.train_seconds);
      if (c.status != "ok") continue;
      iae += c.iae_hazard;
      s += c.train_seconds;
      ++ok;
    }
    if (ok > 0) std::cout << k << "  " << iae / ok << "  " << s / ok << '\n';
  }
  if (ks.size() >= 2) std::cout << "spearman(K, seconds) = " << spearman(ks, secs) << '\n';
  return 0;
}

struct HpoArgs {
  TrainOverrides overrides;
  std::string space, train, out;
  std::size_t trials = 30, threads = 1;
};

int cmd_hpo(const HpoArgs& a, Manifest& m) {
  SearchSpace space;
  if (!a.space.empty()) {
    m.input(a.space);
    json j;
    try {
      j = read_json_file(a.space);
    } catch (const IngestionError& e) {
      throw ConfigError(e.what());
    }
    space = search_space_from_json(j);
  }
  const TrainingConfig base = resolve_config(a.overrides, m);
  m.config({{"base", to_json(base)}, {"space", to_json(space)}, {"trials", a.trials}});
  m.input(a.train);
  const Dataset data = read_csv_file(a.train);
  const fs::path dir = prepare_dir(a.out);
  const SearchResult r = random_search(space, a.trials, data, base, {}, a.threads);
  {
    auto csv = open_out(dir / "trials.csv");
    csv << "trial,layers,hidden,learning_rate,weight_decay,dropout,batch_size,batch_norm,seed,val_ctd,val_ibs,status\n";
    for (const auto& t : r.trials) {
      csv << t.trial << ',' << t.config.hidden.size() << ',' << t.config.hidden.front() << ','
          << format_double(t.config.learning_rate) << ',' << format_double(t.config.weight_decay) << ','
          << format_double(t.config.dropout) << ',' << t.config.batch_size << ',' << (t.config.batch_norm ? 1 : 0)
          << ',' << t.config.seed << ',' << optional_cell(t.val_ctd) << ',' << optional_cell(t.val_ibs) << ",\""
          << t.status << "\"\n";
    }
  }
  save_model(dir / "best", r.best_model);
  std::ofstream(dir / "best" / "config.json") << to_json(r.best_config).dump(2) << '\n';
  m.output(dir / "trials.csv");
  m.output(dir / "best" / kCheckpointFile);
  m.output(dir / "best" / kArchitectureFile);
  m.output(dir / "best" / "config.json");
  std::cout << "best trial " << r.best_trial;
  if (r.trials[r.best_trial].val_ctd) std::cout << ", val C_td " << *r.trials[r.best_trial].val_ctd;
  std::cout << '\n';
  return 0;
}

int cmd_dump_rule(std::size_t k, const std::string& out) {
  const QuadratureRule& rule = gauss_legendre(k);
  const json j = {{"K", rule.order}, {"nodes", rule.canonical_nodes}, {"weights", rule.weights}};
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    open_out(out) << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QSurv: quadrature-based continuous-time deep survival model"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::vector<std::string> args(argv, argv + argc);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "draw a synthetic train/test pair and its true curves");
  c_sim->add_option("--family", sim.family, "generator family or scenario1/scenario2")->required();
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--n-train", sim.n_train, "training rows");
  c_sim->add_option("--n-test", sim.n_test, "test rows");
  c_sim->add_option("--censoring", sim.censoring, "target censoring rate (parametric families)");
  c_sim->add_option("--out", sim.out, "output directory")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "fit a model to a survival CSV");
  add_override_flags(c_train, tr.overrides);
  c_train->add_option("--train", tr.train, "training CSV")->required();
  c_train->add_option("--out", tr.out, "output directory")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "score a model on a test CSV");
  c_eval->add_option("--model", ev.model, "model directory")->required();
  c_eval->add_option("--test", ev.test, "test CSV")->required();
  c_eval->add_option("--train", ev.train, "training CSV (censoring distribution)")->required();
  c_eval->add_option("--out", ev.out, "report JSON path")->required();

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "per-subject hazard, cumulative hazard and survival curves");
  c_pred->add_option("--model", pr.model, "model directory")->required();
  c_pred->add_option("--covariates", pr.covariates, "covariate CSV")->required();
  c_pred->add_option("--grid", pr.grid, "time grid lo:hi:n")->required();
  c_pred->add_option("--out", pr.out, "output CSV path")->required();

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep-nodes", "integrated absolute error versus K on simulated data");
  add_override_flags(c_sweep, sw.overrides);
  c_sweep->add_option("--family", sw.family, "generator family or scenario")->required();
  c_sweep->add_option("--k-list", sw.k_list, "comma-separated K values");
  c_sweep->add_option("--seeds", sw.seeds, "comma-separated seeds");
  c_sweep->add_option("--n-train", sw.n_train, "training rows per cell");
  c_sweep->add_option("--n-test", sw.n_test, "test rows per cell");
  c_sweep->add_option("--threads", sw.threads, "worker threads")->check(CLI::PositiveNumber);
  c_sweep->add_flag("--hazard-only", sw.hazard_only, "score the hazard curve only");
  c_sweep->add_option("--out", sw.out, "output CSV path")->required();

  HpoArgs hp;
  auto* c_hpo = app.add_subcommand("hpo", "random hyperparameter search");
  add_override_flags(c_hpo, hp.overrides);
  c_hpo->add_option("--space", hp.space, "search space JSON");
  c_hpo->add_option("--trials", hp.trials, "number of trials");
  c_hpo->add_option("--train", hp.train, "training CSV")->required();
  c_hpo->add_option("--threads", hp.threads, "worker threads")->check(CLI::PositiveNumber);
  c_hpo->add_option("--out", hp.out, "output directory")->required();

  std::size_t rule_k = 0;
  std::string rule_out;
  auto* c_rule = app.add_subcommand("dump-rule", "print a Gauss-Legendre rule as JSON");
  c_rule->add_option("--k-nodes", rule_k, "number of nodes")->required();
  c_rule->add_option("--out", rule_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    if (*c_rule) return cmd_dump_rule(rule_k, rule_out);
    const std::string name = app.get_subcommands().front()->get_name();
    Manifest manifest(name, args);
    int code = 0;
    fs::path manifest_path;
    auto beside = [](const std::string& file) { return fs::path(file + ".manifest.json"); };
    if (*c_sim) {
      code = cmd_simulate(sim, manifest);
      manifest_path = fs::path(sim.out) / "manifest.json";
    } else if (*c_train) {
      code = cmd_train(tr, manifest);
      manifest_path = fs::path(tr.out) / "manifest.json";
    } else if (*c_eval) {
      code = cmd_evaluate(ev, manifest);
      manifest_path = beside(ev.out);
    } else if (*c_pred) {
      code = cmd_predict(pr, manifest);
      manifest_path = beside(pr.out);
    } else if (*c_sweep) {
      code = cmd_sweep(sw, manifest);
      manifest_path = beside(sw.out);
    } else if (*c_hpo) {
      code = cmd_hpo(hp, manifest);
      manifest_path = fs::path(hp.out) / "manifest.json";
    }
    manifest.write(manifest_path);
    return code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::internal);
  }
}
