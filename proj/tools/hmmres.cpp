// hmmres command-line interface.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hmmres/experiment.hpp"
#include "hmmres/io.hpp"
#include "hmmres/moments.hpp"

namespace {

using namespace hmmres;
using io::Json;

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& body, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << body;
  else
    io::write_text_file(out, body);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw InvalidInput("--seed-list: empty range " + item);
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw InvalidInput("--seed-list: cannot parse '" + item + "'");
    }
  }
  return out;
}

struct RunFlags {
  std::string config;
  std::string seed_list;
  int jobs = -1;
  std::string outdir;
  bool trace = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed-list", f.seed_list, "Seeds overriding the config, e.g. 1,2,5-9");
  cmd->add_option("--jobs", f.jobs, "Parallel seed tasks (0 = all cores)");
  cmd->add_option("--outdir", f.outdir, "Output root (default: config, then $HMMRES_OUTDIR, then ./results)");
  cmd->add_flag("--trace", f.trace, "Keep per-iteration traces");
}

int run_experiment(const RunFlags& f, std::optional<ExperimentKind> forced) {
  const std::filesystem::path config_path(f.config);
  ExperimentConfig config = config_from_json(io::read_json_file(config_path), config_path.parent_path());
  if (forced) config.kind = *forced;
  if (!f.seed_list.empty()) config.seeds = parse_seed_list(f.seed_list);
  if (f.jobs >= 0) config.jobs = f.jobs;
  if (f.trace) config.trace = true;
  if (!f.outdir.empty()) {
    config.outdir = f.outdir;
  } else if (config.outdir.empty()) {
    const char* env = std::getenv("HMMRES_OUTDIR");
    config.outdir = env && *env ? env : "results";
  }
  const auto problems = validate(config);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw InvalidInput(msg);
  }
  const RunManifest manifest = run(config);
  std::cout << to_json(manifest).dump(2) << "\n";
  std::cerr << (manifest.passed ? "PASS" : "FAIL") << " " << manifest.kind << " -> " << manifest.directory.string()
            << "\n";
  for (const auto& failure : manifest.failures) std::cerr << "  " << failure << "\n";
  return manifest.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interval Model / HMM resilience toolkit"};
  app.require_subcommand(1);

  std::string model_path, samples_path, hmm_path, moment_path, out;
  std::size_t length = 0, n = 0, k = 0, m = 0;
  double delta = 0.0;
  FitOptions fit_options;
  bool trace = false;

  auto* generate = app.add_subcommand("generate", "Draw a labeled sample from a model spec (JSONL)");
  generate->add_option("--model", model_path, "Model spec (JSON)")->required()->check(CLI::ExistingFile);
  generate->add_option("--length", length, "Sample length")->required();
  std::uint64_t sample_seed = 0;
  generate->add_option("--seed", sample_seed, "Sampling seed");
  generate->add_option("--out", out, "Output file (default stdout)");

  auto* fit_cmd = app.add_subcommand("fit", "Best-of-restarts EM fit over H_delta");
  fit_cmd->add_option("--samples", samples_path, "Samples (JSONL)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--model", model_path, "Model spec providing the alphabet")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--k", k, "Hidden states")->required();
  fit_cmd->add_option("--delta", delta, "Probability floor");
  fit_cmd->add_option("--restarts", fit_options.restarts, "Random restarts");
  fit_cmd->add_option("--max-iter", fit_options.max_iter, "EM iteration cap");
  fit_cmd->add_option("--tol", fit_options.tol, "Convergence tolerance (bits per symbol)");
  fit_cmd->add_option("--seed", fit_options.seed, "Restart seed");
  fit_cmd->add_option("--jobs", fit_options.jobs, "Concurrent restarts");
  fit_cmd->add_flag("--trace", trace, "Include per-iteration log-likelihoods");
  fit_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* moments_cmd = app.add_subcommand("moments", "Empirical second moment of a sample, or M_X of a model");
  moments_cmd->add_option("--model", model_path, "Model spec")->required()->check(CLI::ExistingFile);
  moments_cmd->add_option("--samples", samples_path, "Samples (JSONL); omit for the expected moment")
      ->check(CLI::ExistingFile);
  moments_cmd->add_option("--n", n, "Pair count N for the expected moment");
  moments_cmd->add_option("--out", out, "Output file (default stdout)");

  auto* dh_cmd = app.add_subcommand("dh", "Resilience D(H) of an HMM against a reference moment");
  dh_cmd->add_option("--moment", moment_path, "Second moment (JSON)")->required()->check(CLI::ExistingFile);
  dh_cmd->add_option("--hmm", hmm_path, "HMM (JSON), bare or as written by fit")->required()->check(CLI::ExistingFile);
  dh_cmd->add_option("--m", m, "Dwell bound m")->required();
  dh_cmd->add_option("--out", out, "Output file (default stdout)");

  RunFlags verify_flags, classify_flags, sweep_flags;
  std::string verify_kind;
  auto* verify = app.add_subcommand("verify", "Run a seeded experiment and check its hard assertions");
  verify->add_option("kind", verify_kind, "lemma2 | concentration | aep | sanov | theorem2 | corollary_sweep | classify | full")
      ->required();
  add_run_flags(verify, verify_flags);
  auto* classify = app.add_subcommand("classify", "Sliding-window classification experiment");
  add_run_flags(classify, classify_flags);
  auto* sweep = app.add_subcommand("sweep", "Fits over doubling N on a non-ergodic schedule");
  add_run_flags(sweep, sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*generate) {
      const auto spec = io::model_spec_from_json(io::read_json_file(model_path));
      io::ModelSpec sized = spec;
      if (sized.schedule.horizon == 0) sized.schedule.horizon = length;
      const IntervalModel model = io::build_model(sized);
      Rng rng(sample_seed);
      auto s = sample(model, length, rng);
      s.seed = sample_seed;
      std::ostringstream body;
      io::write_samples(body, s, *model.alphabet());
      emit(body.str(), out);
    } else if (*fit_cmd) {
      const auto spec = io::model_spec_from_json(io::read_json_file(model_path));
      std::ifstream in(samples_path);
      const auto s = io::read_samples(in, *spec.alphabet);
      const HDeltaSpec h_delta{delta, k, spec.alphabet};
      validate(h_delta, spec.m);
      const FitResult result = fit(s.x, h_delta, fit_options);
      emit(io::to_json(result, trace).dump(2) + "\n", out);
    } else if (*moments_cmd) {
      const auto spec = io::model_spec_from_json(io::read_json_file(model_path));
      Json j;
      if (!samples_path.empty()) {
        std::ifstream in(samples_path);
        const auto s = io::read_samples(in, *spec.alphabet);
        j = io::to_json(empirical_moment(s.x, spec.alphabet));
      } else {
        if (n == 0) throw InvalidInput("moments: give --samples or --n");
        io::ModelSpec sized = spec;
        if (sized.schedule.horizon == 0) sized.schedule.horizon = n + 1;
        const auto model = io::build_model(sized);
        const auto em = expected_moment(model, n);
        j = io::to_json(em.total);
        Json pure = Json::array(), mixed = Json::array();
        for (Eigen::Index r = 0; r < em.pure.rows(); ++r) {
          pure.push_back(std::vector<double>(em.pure.row(r).begin(), em.pure.row(r).end()));
          mixed.push_back(std::vector<double>(em.mixed.row(r).begin(), em.mixed.row(r).end()));
        }
        j["pure"] = pure;
        j["mixed"] = mixed;
        j["pure_weights"] = em.pure_weights;
        j["weights"] = weights(model, n);
      }
      emit(j.dump(2) + "\n", out);
    } else if (*dh_cmd) {
      const auto moment = io::moment_from_json(io::read_json_file(moment_path));
      // A bare HMM or the output of `fit`.
      const auto doc = io::read_json_file(hmm_path);
      const auto h = io::hmm_from_json(doc.contains("hmm") ? doc["hmm"] : doc);
      Json j = io::to_json(dh(moment, h, m));
      j["bound"] = theorem_bound(h.k(), m);
      emit(j.dump(2) + "\n", out);
    } else if (*verify) {
      return run_experiment(verify_flags, experiment_kind_from_string(verify_kind));
    } else if (*classify) {
      return run_experiment(classify_flags, ExperimentKind::classify);
    } else if (*sweep) {
      return run_experiment(sweep_flags, ExperimentKind::corollary_sweep);
    }
  } catch (const InvalidInput& e) {
    std::cerr << "hmmres: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "hmmres: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hmmres: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
