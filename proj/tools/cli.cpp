// cli.cpp

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "gmmdiag/gmmdiag.hpp"

namespace gmmdiag::cli {

namespace {

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

const std::map<std::string, DistKind> kDistNames = {
    {"eucl", DistKind::kEuclSq},
    {"maha", DistKind::kMahaDiag},
};

const std::map<std::string, SeedMode> kSeedNames = {
    {"keep-existing", SeedMode::kKeepExisting},
    {"static-subset", SeedMode::kStaticSubset},
    {"random-subset", SeedMode::kRandomSubset},
    {"static-spread", SeedMode::kStaticSpread},
    {"random-spread", SeedMode::kRandomSpread},
};

const std::map<std::string, AssignMode> kAssignNames = {
    {"eucl", AssignMode::kEuclDist},
    {"prob", AssignMode::kProbDist},
};

// Writes to the named file, or to `fallback` when the name is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw DataError("cannot open '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw DataError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

struct FitOptions {
  std::string input;
  std::string output;
  std::string init_model;
  std::size_t gaussians = 0;
  DistKind dist = DistKind::kMahaDiag;
  SeedMode seed_mode = SeedMode::kRandomSubset;
  std::size_t km_iters = 10;
  std::size_t em_iters = 5;
  double var_floor = 1e-10;
  double em_tol = 1e-10;
  std::uint64_t seed = 0;
  std::size_t threads = default_thread_count();
  bool print_progress = false;
};

struct ModelDataOptions {
  std::string model;
  std::string input;
  std::string output;
  std::optional<std::size_t> gaussian;
  AssignMode mode = AssignMode::kEuclDist;
  std::size_t threads = default_thread_count();
};

struct GenerateOptions {
  std::string model;
  std::string output;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct SynthOptions {
  std::string preset;
  std::string spec;
  std::string output;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct BenchOptions {
  std::string input;
  std::string preset = "desk";
  std::size_t samples = 100000;
  std::size_t dims = 32;
  std::size_t gaussians = 20;
  std::string thread_list = "1,2,4";
  std::size_t km_iters = 10;
  std::size_t em_iters = 10;
  DistKind dist = DistKind::kMahaDiag;
  SeedMode seed_mode = SeedMode::kRandomSubset;
  double var_floor = 1e-10;
  std::uint64_t seed = 0;
};

FitConfig make_config(const FitOptions& o, std::ostream& err) {
  FitConfig c;
  c.n_gaus = o.gaussians;
  c.dist_mode = o.dist;
  c.seed_mode = o.seed_mode;
  c.km_iter = o.km_iters;
  c.em_iter = o.em_iters;
  c.var_floor = o.var_floor;
  c.em_rel_tol = o.em_tol;
  c.rng_seed = o.seed;
  c.n_threads = o.threads;
  c.print_mode = o.print_progress;
  c.progress = &err;
  return c;
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const Dataset data = read_csv(o.input);
  const FitConfig config = make_config(o, err);
  GmmModel existing;
  if (o.seed_mode == SeedMode::kKeepExisting) {
    if (o.init_model.empty()) throw std::invalid_argument("keep-existing requires --init-model");
    existing = load(o.init_model);
  }
  const FitResult result = learn(data, config, existing);
  for (const auto& w : result.report.warnings) err << "warning: " << w << '\n';
  save(result.model, o.output);

  const FitReport& r = result.report;
  out << "avg_log_p " << format_real(r.final_avg_log_p) << '\n'
      << "km_iterations " << r.km_iterations << '\n'
      << "em_iterations " << r.em_iterations << '\n'
      << "km_seconds " << format_fixed(r.km_seconds, 6) << '\n'
      << "em_seconds " << format_fixed(r.em_seconds, 6) << '\n';
  return kExitOk;
}

GmmModel load_matching(const ModelDataOptions& o, const Dataset& data) {
  GmmModel model = load(o.model);
  if (model.n_dims() != data.n_dims()) {
    throw std::invalid_argument("model has " + std::to_string(model.n_dims()) +
                                " dimensions, dataset has " + std::to_string(data.n_dims()));
  }
  return model;
}

int cmd_eval(const ModelDataOptions& o, std::ostream& out) {
  const Dataset data = read_csv(o.input);
  const GmmModel model = load_matching(o, data);
  const double v = o.gaussian ? avg_log_p(data, *o.gaussian, model, o.threads)
                              : avg_log_p(data, model, o.threads);
  out << format_real(v) << '\n';
  return kExitOk;
}

int cmd_assign(const ModelDataOptions& o, std::ostream& out) {
  const Dataset data = read_csv(o.input);
  const GmmModel model = load_matching(o, data);
  const auto ids = assign(data, model, o.mode, o.threads);
  Sink sink(o.output, out);
  std::string text;
  for (std::size_t g : ids) {
    text += std::to_string(g);
    text.push_back('\n');
  }
  sink.stream() << text;
  sink.finish();
  return kExitOk;
}

int cmd_hist(const ModelDataOptions& o, std::ostream& out) {
  const Dataset data = read_csv(o.input);
  const GmmModel model = load_matching(o, data);
  const auto raw = raw_hist(data, model, o.mode, o.threads);
  const auto norm = norm_hist(data, model, o.mode, o.threads);
  Sink sink(o.output, out);
  for (std::size_t g = 0; g < raw.size(); ++g) {
    sink.stream() << g << ',' << raw[g] << ',' << format_real(norm[g]) << '\n';
  }
  sink.finish();
  return kExitOk;
}

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  const GmmModel model = load(o.model);
  const Dataset data = generate(model, o.n, o.seed);
  Sink sink(o.output, out);
  write_csv(sink.stream(), data);
  sink.finish();
  return kExitOk;
}

std::vector<MixtureComponent> read_mixture_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<MixtureComponent> components;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& c : doc.at("components")) {
      MixtureComponent mc;
      mc.weight = c.at("weight").get<double>();
      mc.mean = c.at("mean").get<std::vector<double>>();
      mc.stddev = c.at("stddev").get<std::vector<double>>();
      components.push_back(std::move(mc));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed mixture spec '" + path + "': " + e.what());
  }
  return components;
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  if (o.n == 0) throw std::invalid_argument("-n must be positive");
  Dataset data;
  if (!o.preset.empty()) {
    data = make_fig1_dataset(o.n, o.seed);
  } else {
    data = sample_mixture(read_mixture_spec(o.spec), o.n, o.seed);
  }
  Sink sink(o.output, out);
  write_csv(sink.stream(), data);
  sink.finish();
  return kExitOk;
}

std::vector<std::size_t> parse_thread_list(const std::string& text) {
  std::vector<std::size_t> threads;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || v == 0) {
      throw CLI::ValidationError("--threads-list", "'" + item + "' is not a positive integer");
    }
    threads.push_back(v);
  }
  if (threads.empty()) throw CLI::ValidationError("--threads-list", "empty thread list");
  if (std::find(threads.begin(), threads.end(), std::size_t{1}) == threads.end()) {
    throw CLI::ValidationError("--threads-list", "the list must include 1");
  }
  return threads;
}

int cmd_bench(const BenchOptions& o, const std::vector<std::size_t>& thread_list,
              std::ostream& out, std::ostream& err) {
  const Dataset data = o.input.empty()
                           ? make_bench_dataset(o.samples, o.dims, o.gaussians, o.seed)
                           : read_csv(o.input);
  FitConfig config;
  config.n_gaus = o.gaussians;
  config.dist_mode = o.dist;
  config.seed_mode = o.seed_mode;
  config.km_iter = o.km_iters;
  config.em_iter = o.em_iters;
  config.var_floor = o.var_floor;
  config.rng_seed = o.seed;
  // Fixed iteration counts for timing.
  config.em_rel_tol = 0.0;

  struct Run {
    std::size_t threads;
    double seconds;
    FitResult fit;
  };
  std::vector<Run> runs;
  for (std::size_t t : thread_list) {
    config.n_threads = t;
    const auto start = std::chrono::steady_clock::now();
    FitResult fit = learn(data, config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    runs.push_back({t, seconds, std::move(fit)});
  }

  double base = 0.0;
  for (const auto& r : runs) {
    if (r.threads == 1) {
      base = r.seconds;
      break;
    }
  }

  out << "threads,seconds,speedup\n";
  bool identical = true;
  for (const auto& r : runs) {
    const double speedup = base / r.seconds;
    out << r.threads << ',' << format_fixed(r.seconds, 6) << ','
        << format_fixed(r.threads == 1 ? 1.0 : speedup, 4) << '\n';
    const double total = r.fit.report.km_seconds + r.fit.report.em_seconds;
    err << "threads=" << r.threads
        << " km_share=" << format_fixed(total > 0.0 ? r.fit.report.km_seconds / total : 0.0, 3)
        << " avg_log_p=" << format_real(r.fit.report.final_avg_log_p) << '\n';
    if (!(r.fit.model == runs.front().fit.model) ||
        r.fit.report.final_avg_log_p != runs.front().fit.report.final_avg_log_p) {
      identical = false;
    }
  }
  if (!identical) {
    err << "error: results differ across thread counts\n";
    return kExitFit;
  }
  return kExitOk;
}

void add_dist_option(CLI::App* cmd, DistKind& dist) {
  cmd->add_option("--dist", dist, "Distance for seeding and k-means: eucl or maha")
      ->transform(CLI::CheckedTransformer(kDistNames, CLI::ignore_case))
      ->capture_default_str();
}

void add_seed_mode_option(CLI::App* cmd, SeedMode& mode) {
  cmd->add_option("--seed-mode", mode,
                  "keep-existing, static-subset, random-subset, static-spread or random-spread")
      ->transform(CLI::CheckedTransformer(kSeedNames, CLI::ignore_case));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diagonal-covariance Gaussian mixture models: k-means + EM training and inference",
               args.empty() ? "gmmdiag" : args.front()};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Train a model on a CSV dataset");
  fit_cmd->add_option("--input", fit.input, "Training data (headerless CSV)")->required();
  fit_cmd->add_option("--output", fit.output, "Model file to write")->required();
  fit_cmd->add_option("--gaussians", fit.gaussians, "Number of Gaussians")
      ->required()
      ->check(CLI::PositiveNumber);
  add_dist_option(fit_cmd, fit.dist);
  add_seed_mode_option(fit_cmd, fit.seed_mode);
  fit_cmd->add_option("--init-model", fit.init_model, "Starting model for keep-existing");
  fit_cmd->add_option("--km-iters", fit.km_iters, "Maximum k-means iterations")
      ->capture_default_str();
  fit_cmd->add_option("--em-iters", fit.em_iters, "Maximum EM iterations")->capture_default_str();
  fit_cmd->add_option("--var-floor", fit.var_floor, "Variance floor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit_cmd->add_option("--em-tol", fit.em_tol, "Relative log-likelihood increase to stop EM")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--print-progress", fit.print_progress, "Per-iteration progress on stderr");

  ModelDataOptions md;
  auto add_model_data = [&](CLI::App* cmd) {
    cmd->add_option("--model", md.model, "Model file")->required();
    cmd->add_option("--input", md.input, "Dataset (headerless CSV)")->required();
    cmd->add_option("--threads", md.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* eval_cmd = app.add_subcommand("eval", "Print the average log-likelihood of a dataset");
  add_model_data(eval_cmd);
  eval_cmd->add_option("--gaussian", md.gaussian, "Score against a single Gaussian");

  auto* assign_cmd = app.add_subcommand("assign", "Write the closest Gaussian index per sample");
  auto* hist_cmd = app.add_subcommand("hist", "Write g,count,frac histogram lines");
  for (auto* cmd : {assign_cmd, hist_cmd}) {
    add_model_data(cmd);
    cmd->add_option("--mode", md.mode, "eucl or prob")
        ->transform(CLI::CheckedTransformer(kAssignNames, CLI::ignore_case));
    cmd->add_option("--output", md.output, "Output file (default stdout)");
  }

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a dataset from a model");
  gen_cmd->add_option("--model", gen.model, "Model file")->required();
  gen_cmd->add_option("-n,--samples", gen.n, "Number of samples")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--output", gen.output, "Output CSV (default stdout)");

  SynthOptions syn;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  auto* preset = synth_cmd->add_option("--preset", syn.preset, "Built-in generator")
                     ->check(CLI::IsMember({"fig1"}));
  auto* spec = synth_cmd->add_option("--spec", syn.spec,
                                     "JSON mixture: {\"components\": [{\"weight\", \"mean\", "
                                     "\"stddev\"}]}");
  preset->excludes(spec);
  synth_cmd->add_option("-n,--samples", syn.n, "Number of samples")->required();
  synth_cmd->add_option("--seed", syn.seed, "Random seed");
  synth_cmd->add_option("--output", syn.output, "Output CSV (default stdout)");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time identical fits across thread counts");
  auto* bench_input = bench_cmd->add_option("--input", bench.input, "Dataset (default: preset)");
  bench_cmd->add_option("--preset", bench.preset, "Synthetic preset")
      ->check(CLI::IsMember({"desk"}))
      ->excludes(bench_input);
  bench_cmd->add_option("--samples", bench.samples, "Preset sample count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--dims", bench.dims, "Preset dimensionality")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--gaussians", bench.gaussians, "Number of Gaussians")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--threads-list", bench.thread_list, "Comma-separated thread counts")
      ->capture_default_str();
  bench_cmd->add_option("--km-iters", bench.km_iters, "k-means iterations")->capture_default_str();
  bench_cmd->add_option("--em-iters", bench.em_iters, "EM iterations")->capture_default_str();
  add_dist_option(bench_cmd, bench.dist);
  add_seed_mode_option(bench_cmd, bench.seed_mode);
  bench_cmd->add_option("--var-floor", bench.var_floor, "Variance floor")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Random seed");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("gmmdiag");
  for (const auto& a : args) argv.push_back(a.c_str());

  std::vector<std::size_t> thread_list;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (synth_cmd->parsed() && syn.preset.empty() && syn.spec.empty()) {
      throw CLI::ValidationError("synth", "one of --preset or --spec is required");
    }
    if (bench_cmd->parsed()) thread_list = parse_thread_list(bench.thread_list);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
    if (eval_cmd->parsed()) return cmd_eval(md, out);
    if (assign_cmd->parsed()) return cmd_assign(md, out);
    if (hist_cmd->parsed()) return cmd_hist(md, out);
    if (gen_cmd->parsed()) return cmd_generate(gen, out);
    if (synth_cmd->parsed()) return cmd_synth(syn, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, thread_list, out, err);
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFit;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace gmmdiag::cli
