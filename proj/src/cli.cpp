#include "topic_compose/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <charconv>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>

#include "topic_compose/estimators.hpp"
#include "topic_compose/eval.hpp"
#include "topic_compose/io.hpp"
#include "topic_compose/padd.hpp"
#include "topic_compose/synth.hpp"

namespace topic_compose {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Bad option values found after parsing; reported like CLI11's own errors.
class UsageError : public Error {
 public:
  using Error::Error;
};

template <typename Config, typename... Args>
void validate_as_usage(const Config& config, Args&&... args) {
  try {
    config.validate(std::forward<Args>(args)...);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw UsageError(fmt::format("{}: cannot parse '{}' as a number", what, text));
  return value;
}

DocLength parse_length(const std::string& text) {
  static constexpr std::string_view kPoisson = "poisson:";
  if (text.rfind(kPoisson, 0) == 0) {
    return PoissonLength{parse_double(text.substr(kPoisson.size()), "--len")};
  }
  std::int64_t n = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, n);
  if (ec != std::errc() || ptr != end) throw UsageError(fmt::format("--len: expected <n> or poisson:<mean>, got '{}'", text));
  return FixedLength{n};
}

json digest(const fs::path& path) {
  return json{{"path", path.string()}, {"sha256", file_sha256(path)}};
}

class Manifest {
 public:
  Manifest(std::string subcommand, const std::vector<std::string>& argv)
      : start_(std::chrono::steady_clock::now()) {
    doc_["software"] = {{"name", "topic_compose"}, {"version", kVersion}};
    doc_["subcommand"] = std::move(subcommand);
    doc_["argv"] = argv;
    doc_["config"] = json::object();
    doc_["seed"] = nullptr;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  json& config() { return doc_["config"]; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const fs::path& path) { doc_["inputs"].push_back(digest(path)); }
  void output(const fs::path& path) { doc_["outputs"].push_back(digest(path)); }
  void extra(const std::string& key, json value) { doc_[key] = std::move(value); }

  void write(const fs::path& path) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["timing"] = {{"wall_seconds", seconds}};
    write_file_atomic(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

int resolve_threads(int threads) { return threads > 0 ? threads : default_threads(); }

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string model;
  std::string prior = "dirichlet";
  double alpha_scale = 5.0;
  std::string mu;
  std::string sigma;
  Index docs = 0;
  std::string len;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

void run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  Manifest manifest("synth", argv);
  const fs::path model_dir(a.model);
  const TopicModel model = load_model(model_dir);
  manifest.input(model_dir / "B.tsv");
  manifest.input(model_dir / "A.tsv");
  const Index k = model.num_topics();

  SynthConfig config;
  config.num_docs = a.docs;
  config.length = parse_length(a.len);
  config.seed = a.seed;
  json& cfg = manifest.config();
  cfg["model"] = a.model;
  cfg["prior"] = a.prior;
  if (a.prior == "dirichlet") {
    if (!a.mu.empty() || !a.sigma.empty()) throw UsageError("--mu/--sigma require --prior logistic-normal");
    if (!(a.alpha_scale > 0.0)) throw UsageError("--alpha-scale must be > 0");
    config.prior = DirichletPrior{Vector::Constant(k, a.alpha_scale / static_cast<double>(k))};
    cfg["alpha_scale"] = a.alpha_scale;
  } else {
    if (a.mu.empty() || a.sigma.empty()) throw UsageError("--prior logistic-normal requires --mu and --sigma");
    const Matrix mu = read_dense_tsv(a.mu);
    if (mu.cols() != 1 && mu.rows() != 1) throw ValidationError(fmt::format("{}: mu must be a vector", a.mu));
    const Vector mu_vec = mu.reshaped();
    config.prior = LogisticNormalPrior{mu_vec, read_dense_tsv(a.sigma)};
    manifest.input(a.mu);
    manifest.input(a.sigma);
    cfg["mu"] = a.mu;
    cfg["sigma"] = a.sigma;
  }
  validate_as_usage(config, k);
  cfg["docs"] = a.docs;
  if (const auto* fixed = std::get_if<FixedLength>(&config.length)) {
    cfg["len"] = {{"kind", "fixed"}, {"n", fixed->n}};
  } else {
    cfg["len"] = {{"kind", "poisson"}, {"mean", std::get<PoissonLength>(config.length).mean}};
  }
  const int threads = resolve_threads(a.threads);
  cfg["threads"] = threads;
  manifest.seed(a.seed);

  const SynthOutput result = synthesize(model, config, threads);
  const fs::path out(a.out);
  ensure_directory(out);
  write_corpus(out / "corpus.tsv", result.corpus);
  write_dense_tsv(out / "Wstar.tsv", result.wstar.weights());
  write_dense_tsv(out / "Astar.tsv", result.astar);
  for (const char* name : {"corpus.tsv", "Wstar.tsv", "Astar.tsv"}) manifest.output(out / name);
  manifest.write(out / "manifest.json");
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string method;
  std::string model;
  std::string corpus;
  std::string prior;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  TliConfig tli;
  std::string tli_solver = "lp";
  PaddConfig padd;
  std::string tau_schedule = "inv_sqrt";
  std::string diagnostics;
};

std::string format_diagnostics(const PaddDiagnostics& diagnostics) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf),
                 "round\tconstraint_violation\tmean_loss\tlambda_norm\tmean_final_step\tmean_slave_iters\ttau\tridge\n");
  Index t = 0;
  for (const PaddRound& r : diagnostics.rounds) {
    fmt::format_to(std::back_inserter(buf), "{}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\n", ++t,
                   r.constraint_violation, r.mean_loss, r.lambda_norm, r.mean_final_step, r.mean_slave_iters, r.tau,
                   r.ridge);
  }
  return fmt::to_string(buf);
}

void run_infer(InferArgs a, const std::vector<std::string>& argv) {
  Manifest manifest("infer", argv);
  json& cfg = manifest.config();
  cfg["method"] = a.method;

  if (a.method == "tli") {
    a.tli.solver = parse_tli_solver(a.tli_solver);
    validate_as_usage(a.tli);
  } else if (a.method == "padd") {
    a.padd.tau_schedule = parse_tau_schedule(a.tau_schedule);
    validate_as_usage(a.padd);
  } else if (!a.diagnostics.empty()) {
    throw UsageError("--diagnostics applies to --method padd only");
  }

  const fs::path model_dir(a.model);
  TopicModel model = load_model(model_dir);
  manifest.input(model_dir / "B.tsv");
  manifest.input(model_dir / "A.tsv");
  if (!a.prior.empty()) {
    model = TopicModel(model.word_topic(), read_dense_tsv(a.prior));
    manifest.input(a.prior);
  }
  const Corpus corpus = read_corpus(a.corpus);
  manifest.input(a.corpus);
  check_compatible(model, corpus);

  const int threads = resolve_threads(a.threads);
  cfg["model"] = a.model;
  cfg["corpus"] = a.corpus;
  cfg["prior"] = a.prior.empty() ? json(nullptr) : json(a.prior);
  cfg["threads"] = threads;

  const fs::path out(a.out);
  std::optional<CompositionMatrix> w;
  std::optional<PaddDiagnostics> diagnostics;
  try {
    if (a.method == "spi") {
      w = spi_infer(model, corpus, threads);
    } else if (a.method == "tli") {
      cfg["delta"] = a.tli.delta;
      cfg["threshold_divisor"] = a.tli.threshold_divisor;
      cfg["tli_solver"] = std::string(to_string(a.tli.solver));
      const TliInverse inverse = tli_compute_inverse(model, a.tli, threads);
      manifest.extra("tli", {{"solver", std::string(to_string(inverse.solver))},
                             {"delta", inverse.delta},
                             {"lambda_delta", inverse.lambda_delta}});
      w = tli_infer(inverse, model, corpus, a.tli, threads);
    } else if (a.method == "padd") {
      const PaddConfig& p = a.padd;
      cfg["gamma"] = p.gamma;
      cfg["lambda"] = p.lambda;
      cfg["master_iters"] = p.master_iters;
      cfg["slave_iters"] = p.slave_iters;
      cfg["slave_tol"] = p.slave_tol;
      cfg["tau0"] = p.tau0;
      cfg["tau_schedule"] = std::string(to_string(p.tau_schedule));
      cfg["ridge_eps"] = p.ridge_eps;
      cfg["dual_stop_tol"] = p.dual_stop_tol;
      cfg["warm_start_previous"] = p.warm_start_previous;
      PaddResult result = padd_infer(model, corpus, p, threads);
      w = std::move(result.compositions);
      diagnostics = std::move(result.diagnostics);
    } else {
      manifest.seed(a.seed);
      w = random_baseline(model.num_topics(), corpus.num_docs(), a.seed);
    }
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", a.method, e.what()));
  }
  if (!w->weights().allFinite()) throw NumericalError(fmt::format("{}: non-finite compositions", a.method));

  ensure_directory(out);
  write_dense_tsv(out / "W.tsv", w->weights());
  manifest.output(out / "W.tsv");
  if (diagnostics) {
    const fs::path path = a.diagnostics.empty() ? out / "diagnostics.tsv" : fs::path(a.diagnostics);
    cfg["diagnostics"] = path.string();
    write_file_atomic(path, format_diagnostics(*diagnostics));
    manifest.output(path);
  }
  manifest.write(out / "manifest.json");
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string truth;
  std::string pred;
  std::string prior;
  double prominent_mass = 0.8;
  std::string out;
  std::string per_doc;
  int threads = 0;
};

void run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  if (!(a.prominent_mass > 0.0 && a.prominent_mass <= 1.0)) throw UsageError("--prominent-mass must lie in (0, 1]");
  Manifest manifest("eval", argv);
  const CompositionMatrix truth(read_dense_tsv(a.truth));
  const CompositionMatrix pred(read_dense_tsv(a.pred));
  const Matrix prior = read_dense_tsv(a.prior);
  for (const auto& path : {a.truth, a.pred, a.prior}) manifest.input(path);

  const int threads = resolve_threads(a.threads);
  json& cfg = manifest.config();
  cfg["truth"] = a.truth;
  cfg["pred"] = a.pred;
  cfg["prior"] = a.prior;
  cfg["prominent_mass"] = a.prominent_mass;
  cfg["per_doc"] = a.per_doc.empty() ? json(nullptr) : json(a.per_doc);
  cfg["threads"] = threads;

  const EvalReport report = evaluate(truth, pred, prior, a.prominent_mass, threads);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  write_file_atomic(out, format_report(report));
  manifest.output(out);
  if (!a.per_doc.empty()) {
    const fs::path per_doc(a.per_doc);
    if (per_doc.has_parent_path()) ensure_directory(per_doc.parent_path());
    write_file_atomic(per_doc, format_per_doc(report));
    manifest.output(per_doc);
  }
  manifest.write(fs::path(out.string() + ".manifest.json"));
}

// ---------------------------------------------------------------- make-model

struct MakeModelArgs {
  Index vocab = 0;
  Index topics = 0;
  double beta = 0.1;
  double alpha_scale = 5.0;
  std::uint64_t seed = 0;
  std::string out;
};

void run_make_model(const MakeModelArgs& a, const std::vector<std::string>& argv) {
  if (a.vocab < 1 || a.topics < 1) throw UsageError("--vocab and --topics must be >= 1");
  if (a.topics > a.vocab) throw UsageError("--topics must not exceed --vocab");
  if (!(a.beta > 0.0) || !(a.alpha_scale > 0.0)) throw UsageError("--beta and --alpha-scale must be > 0");
  Manifest manifest("make-model", argv);
  manifest.config() = {{"vocab", a.vocab}, {"topics", a.topics}, {"beta", a.beta}, {"alpha_scale", a.alpha_scale}};
  manifest.seed(a.seed);
  const TopicModel model = random_topic_model(a.vocab, a.topics, a.beta, a.alpha_scale, a.seed);
  const fs::path out(a.out);
  save_model(model, out);
  manifest.output(out / "B.tsv");
  manifest.output(out / "A.tsv");
  manifest.write(out / "manifest.json");
}

void add_threads(CLI::App* app, int& threads) {
  app->add_option("--threads", threads, "Worker threads (0 = all cores)")
      ->envname("TOPIC_COMPOSE_THREADS")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic composition inference for spectral topic models.", "topic_compose"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Sample a corpus and its true compositions from a model");
  synth->add_option("--model", synth_args.model, "Model directory with B.tsv and A.tsv")->required();
  synth->add_option("--prior", synth_args.prior, "Composition prior")
      ->check(CLI::IsMember({"dirichlet", "logistic-normal"}))
      ->capture_default_str();
  synth->add_option("--alpha-scale", synth_args.alpha_scale, "Dirichlet alpha = (scale / K) 1")->capture_default_str();
  synth->add_option("--mu", synth_args.mu, "Logistic-normal mean (dense TSV, K entries)");
  synth->add_option("--sigma", synth_args.sigma, "Logistic-normal covariance (dense TSV, K x K)");
  synth->add_option("--docs", synth_args.docs, "Number of documents M")->required();
  synth->add_option("--len", synth_args.len, "Document length: <n> or poisson:<mean>")->required();
  synth->add_option("--seed", synth_args.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  add_threads(synth, synth_args.threads);

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Infer document compositions W");
  infer->add_option("--method", infer_args.method, "Estimator")
      ->required()
      ->check(CLI::IsMember({"spi", "tli", "padd", "rand"}));
  infer->add_option("--model", infer_args.model, "Model directory with B.tsv and A.tsv")->required();
  infer->add_option("--corpus", infer_args.corpus, "Sparse corpus TSV")->required();
  infer->add_option("--prior", infer_args.prior, "Topic-topic matrix replacing the model's A.tsv");
  infer->add_option("--out", infer_args.out, "Output directory")->required();
  infer->add_option("--seed", infer_args.seed, "Random seed (rand)")->capture_default_str();
  infer->add_option("--delta", infer_args.tli.delta, "TLI identity tolerance")->capture_default_str();
  infer->add_option("--threshold-divisor", infer_args.tli.threshold_divisor, "TLI threshold divisor")
      ->capture_default_str();
  infer->add_option("--tli-solver", infer_args.tli_solver, "TLI inverse")
      ->check(CLI::IsMember({"lp", "pseudoinverse"}))
      ->capture_default_str();
  infer->add_option("--gamma", infer_args.padd.gamma, "PADD loss weight")->capture_default_str();
  infer->add_option("--lambda", infer_args.padd.lambda, "PADD relaxation in (0, 2)")->capture_default_str();
  infer->add_option("--master-iters", infer_args.padd.master_iters, "PADD dual rounds (>= 1)")->capture_default_str();
  infer->add_option("--slave-iters", infer_args.padd.slave_iters, "PADD ADMM-DR iterations per round")
      ->capture_default_str();
  infer->add_option("--slave-tol", infer_args.padd.slave_tol, "PADD ADMM-DR stopping tolerance")
      ->capture_default_str();
  infer->add_option("--tau0", infer_args.padd.tau0, "PADD initial dual step")->capture_default_str();
  infer->add_option("--tau-schedule", infer_args.tau_schedule, "PADD dual step schedule")
      ->check(CLI::IsMember({"constant", "inv_sqrt"}))
      ->capture_default_str();
  infer->add_option("--ridge-eps", infer_args.padd.ridge_eps, "PADD first ridge")->capture_default_str();
  infer->add_flag("--warm-start-previous", infer_args.padd.warm_start_previous,
                  "Start each round's slaves from the previous round");
  infer->add_option("--diagnostics", infer_args.diagnostics, "PADD per-round TSV (default <out>/diagnostics.tsv)");
  add_threads(infer, infer_args.threads);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score predicted compositions against the truth");
  eval->add_option("--truth", eval_args.truth, "True compositions (dense TSV, K x M)")->required();
  eval->add_option("--pred", eval_args.pred, "Predicted compositions (dense TSV, K x M)")->required();
  eval->add_option("--prior", eval_args.prior, "Topic-topic matrix for prior_dist (dense TSV, K x K)")->required();
  eval->add_option("--prominent-mass", eval_args.prominent_mass, "Mass defining prominent topics")
      ->capture_default_str();
  eval->add_option("--out", eval_args.out, "Report TSV")->required();
  eval->add_option("--per-doc", eval_args.per_doc, "Per-document TSV");
  add_threads(eval, eval_args.threads);

  MakeModelArgs model_args;
  auto* make_model = app.add_subcommand("make-model", "Write a random model for experiments");
  make_model->add_option("--vocab", model_args.vocab, "Vocabulary size N")->required();
  make_model->add_option("--topics", model_args.topics, "Number of topics K")->required();
  make_model->add_option("--beta", model_args.beta, "Dirichlet concentration of each topic")->capture_default_str();
  make_model->add_option("--alpha-scale", model_args.alpha_scale, "A is the second moment of Dir((scale / K) 1)")
      ->capture_default_str();
  make_model->add_option("--seed", model_args.seed, "Random seed")->capture_default_str();
  make_model->add_option("--out", model_args.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n";
    err << "Run with --help for more information.\n";
    return kExitUsage;
  }

  std::string name = "topic_compose";
  try {
    if (synth->parsed()) {
      name = "synth";
      run_synth(synth_args, args);
    } else if (infer->parsed()) {
      name = "infer";
      run_infer(infer_args, args);
    } else if (eval->parsed()) {
      name = "eval";
      run_eval(eval_args, args);
    } else if (make_model->parsed()) {
      name = "make-model";
      run_make_model(model_args, args);
    }
  } catch (const UsageError& e) {
    err << "error: usage: " << name << ": " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << one_line(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace topic_compose
