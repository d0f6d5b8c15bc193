#include "hmmres/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <set>
#include <stdexcept>

#include "hmmres/kernels.hpp"

namespace hmmres {

using io::Json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::lemma2: return "lemma2";
    case ExperimentKind::concentration: return "concentration";
    case ExperimentKind::aep: return "aep";
    case ExperimentKind::sanov: return "sanov";
    case ExperimentKind::theorem2: return "theorem2";
    case ExperimentKind::corollary_sweep: return "corollary_sweep";
    case ExperimentKind::classify: return "classify";
    case ExperimentKind::full: return "full";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto kind : {ExperimentKind::lemma2, ExperimentKind::concentration, ExperimentKind::aep, ExperimentKind::sanov,
                    ExperimentKind::theorem2, ExperimentKind::corollary_sweep, ExperimentKind::classify,
                    ExperimentKind::full})
    if (to_string(kind) == name) return kind;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

namespace {

const std::set<std::string> kConfigKeys = {
    "kind",    "model",      "model_path",     "n",       "k",         "delta",         "restarts",
    "max_iter", "tol",       "seeds",          "eps_tol", "pass_threshold", "n_small",  "sanov_hmm",
    "sweep",   "classify",   "outdir",         "jobs",    "trace"};

template <typename T>
T get(const Json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config field '") + name + "': " + e.what());
  }
}

std::vector<std::uint64_t> parse_seeds(const Json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto count = j.get<long long>();
    if (count < 0) throw std::invalid_argument("config field 'seeds': negative count");
    std::vector<std::uint64_t> out(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i + 1;
    return out;
  }
  if (j.is_array()) return j.get<std::vector<std::uint64_t>>();
  throw std::invalid_argument("config field 'seeds' must be a count or a list");
}

double threshold_for(const ExperimentConfig& c, ExperimentKind kind) {
  if (c.pass_threshold) return *c.pass_threshold;
  if (kind == ExperimentKind::theorem2) return 0.9;
  if (kind == ExperimentKind::corollary_sweep) return 1.0;
  return 0.95;
}

std::size_t horizon_for(const ExperimentConfig& c, ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::lemma2:
    case ExperimentKind::aep:
    case ExperimentKind::classify: return c.n;
    case ExperimentKind::concentration:
    case ExperimentKind::theorem2: return c.n + 1;
    case ExperimentKind::sanov: return c.n_small + 1;
    case ExperimentKind::corollary_sweep: return c.max_exp <= 40 ? (std::size_t{1} << c.max_exp) + 1 : 0;
    case ExperimentKind::full: break;
  }
  std::size_t h = 0;
  for (auto sub : {ExperimentKind::lemma2, ExperimentKind::concentration, ExperimentKind::aep, ExperimentKind::sanov,
                   ExperimentKind::theorem2, ExperimentKind::classify})
    h = std::max(h, horizon_for(c, sub));
  return h;
}

std::vector<ExperimentKind> stages_of(ExperimentKind kind) {
  if (kind != ExperimentKind::full) return {kind};
  return {ExperimentKind::lemma2,   ExperimentKind::concentration, ExperimentKind::aep,
          ExperimentKind::sanov,    ExperimentKind::theorem2,      ExperimentKind::classify};
}

bool fits_models(ExperimentKind kind) {
  return kind == ExperimentKind::theorem2 || kind == ExperimentKind::corollary_sweep ||
         kind == ExperimentKind::classify || kind == ExperimentKind::full;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Linear-interpolation quantiles (min, 5%, 25%, median, 75%, 95%, max).
Json quantiles(std::vector<double> v) {
  Json q = Json::object();
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  for (auto [name, p] : {std::pair{"min", 0.0}, {"q05", 0.05}, {"q25", 0.25}, {"median", 0.5}, {"q75", 0.75},
                         {"q95", 0.95}, {"max", 1.0}})
    q[name] = at(p);
  return q;
}

struct StageReport {
  std::string csv;
  Json summary;
  bool passed = true;
  std::string failure;
  std::vector<std::uint64_t> fit_seeds;
};

HDeltaSpec h_delta_of(const ExperimentConfig& c, const IntervalModel& model) {
  return HDeltaSpec{c.delta, model.k(), model.alphabet()};
}

FitOptions fit_options_of(const ExperimentConfig& c) {
  FitOptions o;
  o.restarts = c.restarts;
  o.max_iter = c.max_iter;
  o.tol = c.tol;
  return o;
}

Json summary_head(const ExperimentConfig& c, ExperimentKind kind, const IntervalModel& model, std::size_t n) {
  Json s;
  s["kind"] = to_string(kind);
  s["config_hash"] = config_hash(c);
  s["params"] = to_json(c);
  const double w_entropy = entropy_rate(model, std::max<std::size_t>(n, 1));
  s["constants"] = {{"theorem_bound", theorem_bound(model.k(), model.m())},
                    {"radius", 3.0 / static_cast<double>(model.m())},
                    {"lemma2_threshold", lemma2_threshold(model.k(), model.m(), weights(model, std::max<std::size_t>(n, 1)),
                                                          model.sources(), c.eps_tol)},
                    {"entropy_rate", w_entropy},
                    {"n_min", n_min(model, std::max<std::size_t>(n, 1))}};
  return s;
}

void finish_rate(StageReport& r, double rate, double threshold, const std::string& what) {
  r.summary["pass_rate"] = rate;
  r.summary["pass_threshold"] = threshold;
  r.passed = rate >= threshold;
  if (!r.passed) r.failure = what + ": pass rate " + io::format_number(rate) + " below " + io::format_number(threshold);
  r.summary["passed"] = r.passed;
}

StageReport run_lemma2(const ExperimentConfig& c, const IntervalModel& model) {
  const auto rep = lemma2_check(model, c.n, c.seeds, c.eps_tol, c.jobs);
  const std::string hash = config_hash(c);
  io::CsvWriter csv({"config_hash", "seed", "loglik", "threshold", "margin", "pass"});
  std::vector<double> margins;
  for (const auto& r : rep.records) {
    csv.cell(hash).cell(r.seed).cell(r.loglik).cell(r.threshold).cell(r.margin).cell(r.pass).end_row();
    margins.push_back(r.margin);
  }
  StageReport out;
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::lemma2, model, c.n);
  out.summary["bound"] = rep.records.empty() ? 0.0 : rep.records.front().threshold;
  out.summary["quantiles"] = {{"margin", quantiles(margins)}};
  finish_rate(out, rep.pass_rate, threshold_for(c, ExperimentKind::lemma2), "lemma2");
  return out;
}

StageReport run_concentration(const ExperimentConfig& c, const IntervalModel& model) {
  const auto rep = moment_concentration_check(model, c.n, c.seeds, {0.01, 0.02, 0.05, 0.1}, c.jobs);
  const std::string hash = config_hash(c);
  std::vector<std::string> header = {"config_hash", "seed", "tv", "within_u", "pure_pair_deviation"};
  for (double e : rep.eps_grid) header.push_back("within_eps_" + io::format_number(e));
  io::CsvWriter csv(header);
  std::vector<double> tvs, pure;
  for (const auto& r : rep.records) {
    csv.cell(hash).cell(r.seed).cell(r.tv).cell(r.within_u).cell(r.pure_pair_deviation);
    for (bool b : r.within_eps) csv.cell(b);
    csv.end_row();
    tvs.push_back(r.tv);
    pure.push_back(r.pure_pair_deviation);
  }
  StageReport out;
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::concentration, model, c.n);
  out.summary["bound"] = rep.radius;
  out.summary["quantiles"] = {{"tv", quantiles(tvs)}, {"pure_pair_deviation", quantiles(pure)}};
  Json eps = Json::array();
  for (std::size_t e = 0; e < rep.eps_grid.size(); ++e)
    eps.push_back({{"eps", rep.eps_grid[e]}, {"fraction", rep.fraction_within_eps[e]}});
  out.summary["fraction_within_eps_plus_2_over_m"] = eps;
  finish_rate(out, rep.fraction_within_u, threshold_for(c, ExperimentKind::concentration), "concentration");
  return out;
}

StageReport run_aep(const ExperimentConfig& c, const IntervalModel& model) {
  const auto rep = aep_check(model, c.n, c.seeds, c.eps_tol, c.jobs);
  const std::string hash = config_hash(c);
  io::CsvWriter csv({"config_hash", "seed", "neg_log_prob_rate", "entropy_rate", "deviation", "pass"});
  std::vector<double> dev;
  for (const auto& r : rep.records) {
    csv.cell(hash).cell(r.seed).cell(r.neg_log_prob_rate).cell(r.entropy_rate).cell(r.deviation).cell(r.pass).end_row();
    dev.push_back(r.deviation);
  }
  StageReport out;
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::aep, model, c.n);
  out.summary["bound"] = c.eps_tol;
  out.summary["quantiles"] = {{"deviation", quantiles(dev)}};
  finish_rate(out, rep.pass_rate, threshold_for(c, ExperimentKind::aep), "aep");
  return out;
}

StageReport run_sanov(const ExperimentConfig& c, const IntervalModel& model) {
  std::optional<Hmm> h;
  StateWeights pi;
  if (c.sanov_hmm) {
    h.emplace(io::hmm_from_json(*c.sanov_hmm));
    pi = c.sanov_hmm->contains("pi") ? c.sanov_hmm->at("pi").get<StateWeights>() : uniform_initial(h->k());
  } else {
    auto [ref, ref_pi] = reference_hmm(model.sources(), model.m());
    h.emplace(std::move(ref));
    pi = std::move(ref_pi);
  }
  const auto rep = sanov_check(*h, pi, model, c.n_small);
  io::CsvWriter csv({"config_hash", "n_small", "probability", "total_mass", "d_raw", "d_clamped", "bound", "satisfied"});
  csv.cell(config_hash(c)).cell(std::uint64_t{rep.n_small}).cell(rep.probability).cell(rep.total_mass);
  csv.cell(rep.d_raw).cell(rep.d_clamped).cell(rep.bound).cell(rep.satisfied).end_row();
  StageReport out;
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::sanov, model, c.n_small);
  out.summary["bound"] = rep.bound;
  out.summary["probability"] = rep.probability;
  out.summary["satisfied"] = rep.satisfied;
  out.summary["pass_rate"] = rep.satisfied ? 1.0 : 0.0;
  out.summary["sanity_only"] = true;
  out.summary["passed"] = true;
  return out;
}

StageReport run_theorem2(const ExperimentConfig& c, const IntervalModel& model) {
  const auto rep = theorem2_experiment(model, c.n, h_delta_of(c, model), fit_options_of(c), c.seeds, c.jobs);
  const std::string hash = config_hash(c);
  io::CsvWriter csv({"config_hash", "seed", "fit_seed", "loglik_fit", "loglik_reference", "d_model_raw", "d_model",
                     "d_empirical_raw", "d_empirical", "bound", "satisfied", "excluded", "emission_tv",
                     "likelihood_upper", "clip_events", "monotonicity_violations"});
  std::vector<double> d, d_emp;
  StageReport out;
  std::size_t excluded = 0;
  for (const auto& r : rep.records) {
    csv.cell(hash).cell(r.seed).cell(fit_seed_for(r.seed)).cell(r.loglik_fit).cell(r.loglik_reference);
    csv.cell(r.d_model_raw).cell(r.d_model).cell(r.d_empirical_raw).cell(r.d_empirical).cell(r.bound);
    csv.cell(r.satisfied).cell(r.excluded).cell(r.emission_tv).cell(r.likelihood_upper);
    csv.cell(std::uint64_t{r.clip_events}).cell(std::uint64_t{r.monotonicity_violations}).end_row();
    d.push_back(r.d_model);
    d_emp.push_back(r.d_empirical);
    out.fit_seeds.push_back(fit_seed_for(r.seed));
    excluded += r.excluded ? 1 : 0;
  }
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::theorem2, model, c.n);
  out.summary["bound"] = rep.bound;
  out.summary["evaluated"] = rep.evaluated;
  out.summary["satisfied"] = rep.satisfied;
  out.summary["excluded"] = excluded;
  out.summary["quantiles"] = {{"d_model", quantiles(d)}, {"d_empirical", quantiles(d_emp)}};
  finish_rate(out, rep.evaluated == 0 ? 0.0 : rep.pass_rate, threshold_for(c, ExperimentKind::theorem2), "theorem2");
  return out;
}

StageReport run_sweep(const ExperimentConfig& c, const IntervalModel& model) {
  const auto rep =
      corollary_sweep(model, c.min_exp, c.max_exp, c.burn_in_exp, h_delta_of(c, model), fit_options_of(c), c.seeds, c.jobs);
  const std::string hash = config_hash(c);
  io::CsvWriter csv({"config_hash", "seed", "n", "d_model", "running_max", "past_burn_in", "satisfied", "w_first"});
  StageReport out;
  std::size_t checked = 0, ok = 0;
  std::vector<double> d;
  for (const auto& r : rep.records) {
    csv.cell(hash).cell(r.seed).cell(std::uint64_t{r.n}).cell(r.d_model).cell(r.running_max);
    csv.cell(r.past_burn_in).cell(r.satisfied).cell(r.w_first).end_row();
    d.push_back(r.d_model);
    if (r.past_burn_in) {
      ++checked;
      ok += r.satisfied ? 1 : 0;
    }
  }
  for (auto s : c.seeds) out.fit_seeds.push_back(fit_seed_for(s));
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::corollary_sweep, model, std::size_t{1} << c.max_exp);
  out.summary["bound"] = rep.bound;
  out.summary["all_satisfied"] = rep.all_satisfied;
  out.summary["quantiles"] = {{"d_model", quantiles(d)}};
  finish_rate(out, checked == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(checked),
              threshold_for(c, ExperimentKind::corollary_sweep), "corollary_sweep");
  return out;
}

struct ClassifyRecord {
  std::size_t window = 0;
  SegmentationMetrics metrics;
};

StageReport run_classify(const ExperimentConfig& c, const IntervalModel& model) {
  const std::size_t k = model.k();
  std::vector<ClassifyRecord> records(c.seeds.size());
  const HDeltaSpec spec = h_delta_of(c, model);
  const FitOptions options = fit_options_of(c);
  kernels::parallel_for(c.seeds.size(), c.jobs, [&](std::size_t i) {
    Rng rng(c.seeds[i]);
    const auto s = sample(model, c.n, rng);
    std::vector<Distribution> sources = model.sources();
    std::vector<std::size_t> source_of(k);
    for (std::size_t j = 0; j < k; ++j) source_of[j] = j;
    if (c.classify_with_fit) {
      FitOptions o = options;
      o.seed = fit_seed_for(c.seeds[i]);
      const FitResult fitted = fit(s.x, spec, o);
      sources.clear();
      for (std::size_t j = 0; j < k; ++j) sources.push_back(fitted.hmm.emission_distribution(j));
      source_of = match_states(fitted.hmm, model.sources()).source_of_state;
    }
    const std::size_t l = c.window > 0 ? c.window : choose_window(sources, c.confidence);
    Segmentation seg = sliding_window_classify(s.x, sources, l);
    for (auto& label : seg.labels) label = source_of[label];
    records[i] = {l, segmentation_accuracy(seg, s.kappa, k)};
  });

  const std::string hash = config_hash(c);
  std::vector<std::string> header = {"config_hash", "seed", "window", "accuracy", "boundary_excluded_accuracy",
                                     "boundary_excluded_count", "mean_abs_change_point_offset"};
  for (std::size_t j = 0; j < k; ++j) header.push_back("recall_" + std::to_string(j + 1));
  io::CsvWriter csv(header);
  StageReport out;
  double mean_excluded = 0.0;
  std::vector<double> acc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& m = records[i].metrics;
    double offset_sum = 0.0;
    std::size_t offsets = 0;
    for (const auto& o : m.change_point_offsets)
      if (o) {
        offset_sum += std::abs(static_cast<double>(*o));
        ++offsets;
      }
    csv.cell(hash).cell(c.seeds[i]).cell(std::uint64_t{records[i].window}).cell(m.accuracy);
    csv.cell(m.boundary_excluded_accuracy).cell(std::uint64_t{m.boundary_excluded_count});
    csv.cell(offsets == 0 ? std::string() : io::format_number(offset_sum / static_cast<double>(offsets)));
    for (const auto& r : m.recall) csv.cell(r ? io::format_number(*r) : std::string());
    csv.end_row();
    mean_excluded += m.boundary_excluded_accuracy;
    acc.push_back(m.boundary_excluded_accuracy);
    if (c.classify_with_fit) out.fit_seeds.push_back(fit_seed_for(c.seeds[i]));
  }
  if (!records.empty()) mean_excluded /= static_cast<double>(records.size());
  out.csv = csv.body();
  out.summary = summary_head(c, ExperimentKind::classify, model, c.n);
  out.summary["sources_used"] = c.classify_with_fit ? "fit" : "true";
  out.summary["window"] = records.empty() ? 0 : records.front().window;
  out.summary["mean_boundary_excluded_accuracy"] = mean_excluded;
  out.summary["accuracy_threshold"] = c.accuracy_threshold;
  out.summary["quantiles"] = {{"boundary_excluded_accuracy", quantiles(acc)}};
  out.passed = mean_excluded >= c.accuracy_threshold;
  if (!out.passed)
    out.failure = "classify: mean boundary-excluded accuracy " + io::format_number(mean_excluded) + " below " +
                  io::format_number(c.accuracy_threshold);
  out.summary["passed"] = out.passed;
  return out;
}

StageReport run_stage(const ExperimentConfig& c, ExperimentKind kind, const IntervalModel& model) {
  switch (kind) {
    case ExperimentKind::lemma2: return run_lemma2(c, model);
    case ExperimentKind::concentration: return run_concentration(c, model);
    case ExperimentKind::aep: return run_aep(c, model);
    case ExperimentKind::sanov: return run_sanov(c, model);
    case ExperimentKind::theorem2: return run_theorem2(c, model);
    case ExperimentKind::corollary_sweep: return run_sweep(c, model);
    case ExperimentKind::classify: return run_classify(c, model);
    case ExperimentKind::full: break;
  }
  throw std::logic_error("run_stage: full is not a stage");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kConfigKeys.contains(key)) throw std::invalid_argument("unknown config field '" + key + "'");
  ExperimentConfig c;
  c.kind = experiment_kind_from_string(get<std::string>(j, "kind", "lemma2"));
  if (j.contains("model") == j.contains("model_path"))
    throw std::invalid_argument("config needs exactly one of 'model' and 'model_path'");
  if (j.contains("model")) {
    c.model = io::model_spec_from_json(j.at("model"));
  } else {
    std::filesystem::path p = get<std::string>(j, "model_path", "");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.model = io::model_spec_from_json(io::read_json_file(p));
  }
  c.n = get<std::size_t>(j, "n", 0);
  if (j.contains("k")) c.k = get<std::size_t>(j, "k", 0);
  c.delta = get<double>(j, "delta", 0.0);
  c.restarts = get<std::size_t>(j, "restarts", c.restarts);
  c.max_iter = get<std::size_t>(j, "max_iter", c.max_iter);
  c.tol = get<double>(j, "tol", c.tol);
  if (j.contains("seeds")) c.seeds = parse_seeds(j.at("seeds"));
  c.eps_tol = get<double>(j, "eps_tol", c.eps_tol);
  if (j.contains("pass_threshold")) c.pass_threshold = get<double>(j, "pass_threshold", 0.0);
  c.n_small = get<std::size_t>(j, "n_small", c.n_small);
  if (j.contains("sanov_hmm")) c.sanov_hmm = j.at("sanov_hmm");
  const Json sweep = get<Json>(j, "sweep", Json::object());
  c.min_exp = get<unsigned>(sweep, "min_exp", c.min_exp);
  c.max_exp = get<unsigned>(sweep, "max_exp", c.max_exp);
  c.burn_in_exp = get<unsigned>(sweep, "burn_in_exp", c.burn_in_exp);
  const Json cls = get<Json>(j, "classify", Json::object());
  c.confidence = get<double>(cls, "confidence", c.confidence);
  c.window = get<std::size_t>(cls, "window", c.window);
  const std::string used = get<std::string>(cls, "sources", "true");
  if (used != "true" && used != "fit") throw std::invalid_argument("config field 'classify.sources' must be 'true' or 'fit'");
  c.classify_with_fit = used == "fit";
  c.accuracy_threshold = get<double>(cls, "accuracy_threshold", c.accuracy_threshold);
  c.outdir = get<std::string>(j, "outdir", "");
  c.jobs = get<int>(j, "jobs", c.jobs);
  c.trace = get<bool>(j, "trace", false);
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["model"] = io::to_json(c.model);
  j["n"] = c.n;
  j["k"] = c.k ? *c.k : c.model.sources.size();
  j["delta"] = c.delta;
  j["restarts"] = c.restarts;
  j["max_iter"] = c.max_iter;
  j["tol"] = c.tol;
  j["seeds"] = c.seeds;
  j["eps_tol"] = c.eps_tol;
  if (c.pass_threshold) j["pass_threshold"] = *c.pass_threshold;
  j["n_small"] = c.n_small;
  if (c.sanov_hmm) j["sanov_hmm"] = *c.sanov_hmm;
  j["sweep"] = {{"min_exp", c.min_exp}, {"max_exp", c.max_exp}, {"burn_in_exp", c.burn_in_exp}};
  j["classify"] = {{"confidence", c.confidence},
                   {"window", c.window},
                   {"sources", c.classify_with_fit ? "fit" : "true"},
                   {"accuracy_threshold", c.accuracy_threshold}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> out;
  const auto& model = c.model;
  const double md = static_cast<double>(model.m);
  if (model.m <= 2) out.push_back("m = " + std::to_string(model.m) + " must exceed 2");
  if (model.sources.empty()) out.push_back("model has no sources");
  if (c.k && *c.k != model.sources.size())
    out.push_back("k = " + std::to_string(*c.k) + " but the model has " + std::to_string(model.sources.size()) + " sources");
  if (c.delta < 0.0) out.push_back("delta must be nonnegative");
  if (model.m > 0 && c.delta > 1.0 / md)
    out.push_back("delta = " + io::format_number(c.delta) + " exceeds 1/m = " + io::format_number(1.0 / md));
  double min_entry = kInfinity;
  for (const auto& s : model.sources)
    for (double p : s.probs()) min_entry = std::min(min_entry, p);
  if (!model.sources.empty() && c.delta > min_entry)
    out.push_back("delta = " + io::format_number(c.delta) + " exceeds the smallest source probability " +
                  io::format_number(min_entry));

  const auto& s = model.schedule;
  auto short_interval = [&](std::size_t len) {
    out.push_back("interval length " + std::to_string(len) + " is below m = " + std::to_string(model.m));
  };
  switch (s.kind) {
    case ScheduleKind::fixed_length:
      if (s.length < model.m) short_interval(s.length);
      break;
    case ScheduleKind::random_length:
      if (s.min_length < model.m) short_interval(s.min_length);
      if (s.max_length < s.min_length) out.push_back("max_length is below min_length");
      break;
    case ScheduleKind::alternating:
      if (s.lengths.empty()) out.push_back("alternating schedule needs lengths");
      for (auto len : s.lengths)
        if (len < model.m) short_interval(len);
      break;
    case ScheduleKind::doubling_nonergodic: break;
    case ScheduleKind::explicit_list:
      for (std::size_t l = 0; l < s.ends.size(); ++l) {
        const std::size_t begin = l == 0 ? 0 : s.ends[l - 1];
        if (s.ends[l] <= begin)
          out.push_back("explicit ends must increase");
        else if (s.ends[l] - begin < model.m)
          short_interval(s.ends[l] - begin);
      }
      break;
  }

  if (c.seeds.empty()) out.push_back("no seeds");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) out.push_back("seeds are not distinct");
  const bool needs_n = c.kind != ExperimentKind::sanov && c.kind != ExperimentKind::corollary_sweep;
  if (needs_n && c.n < 2) out.push_back("n must be at least 2");
  if (fits_models(c.kind)) {
    if (c.restarts == 0) out.push_back("restarts must be positive");
    if (c.max_iter == 0) out.push_back("max_iter must be positive");
    if (!(c.tol > 0.0)) out.push_back("tol must be positive");
  }
  if (c.kind == ExperimentKind::corollary_sweep) {
    if (c.min_exp > c.max_exp) out.push_back("sweep min_exp exceeds max_exp");
    if (c.max_exp > 30) out.push_back("sweep max_exp above 30");
  }
  if ((c.kind == ExperimentKind::classify || c.kind == ExperimentKind::full) &&
      !(c.confidence > 0.0 && c.confidence < 1.0))
    out.push_back("classify confidence must lie in (0, 1)");
  if (c.n_small == 0 && (c.kind == ExperimentKind::sanov || c.kind == ExperimentKind::full))
    out.push_back("n_small must be positive");
  if (c.pass_threshold && (*c.pass_threshold < 0.0 || *c.pass_threshold > 1.0))
    out.push_back("pass_threshold must lie in [0, 1]");
  if (c.jobs < 0) out.push_back("jobs must be nonnegative");

  const std::size_t need = required_horizon(c);
  if (s.horizon != 0 && s.horizon < need)
    out.push_back("horizon " + std::to_string(s.horizon) + " is shorter than the " + std::to_string(need) +
                  " positions the run samples");
  if (out.empty()) {
    try {
      (void)build_model(c);
    } catch (const std::exception& e) {
      out.push_back(std::string("model: ") + e.what());
    }
  }
  return out;
}

std::size_t required_horizon(const ExperimentConfig& config) { return horizon_for(config, config.kind); }

IntervalModel build_model(const ExperimentConfig& config) {
  io::ModelSpec spec = config.model;
  if (spec.schedule.horizon == 0 && spec.schedule.kind != ScheduleKind::explicit_list)
    spec.schedule.horizon = required_horizon(config);
  return io::build_model(spec);
}

Json to_json(const RunManifest& m) {
  Json j;
  j["config_hash"] = m.config_hash;
  j["version"] = m.version;
  j["timestamp"] = m.timestamp;
  j["kind"] = m.kind;
  j["seeds"] = {{"sample", m.sample_seeds}, {"fit", m.fit_seeds}};
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back(f.generic_string());
  j["files"] = files;
  j["passed"] = m.passed;
  j["failures"] = m.failures;
  return j;
}

RunManifest run(const ExperimentConfig& config) {
  const auto problems = validate(config);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  const IntervalModel model = build_model(config);

  RunManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.version = kArtifactVersion;
  manifest.timestamp = utc_timestamp();
  manifest.kind = to_string(config.kind);
  manifest.sample_seeds = config.seeds;
  manifest.directory = config.outdir / manifest.kind / manifest.config_hash;
  manifest.passed = true;

  const auto stages = stages_of(config.kind);
  for (auto kind : stages) {
    const StageReport rep = run_stage(config, kind, model);
    const std::filesystem::path sub = stages.size() > 1 ? std::filesystem::path(to_string(kind)) : std::filesystem::path();
    io::write_text_file(manifest.directory / sub / "report.csv", rep.csv);
    io::write_text_file(manifest.directory / sub / "summary.json", rep.summary.dump(2) + "\n");
    manifest.files.push_back(sub / "report.csv");
    manifest.files.push_back(sub / "summary.json");
    for (auto s : rep.fit_seeds)
      if (std::find(manifest.fit_seeds.begin(), manifest.fit_seeds.end(), s) == manifest.fit_seeds.end())
        manifest.fit_seeds.push_back(s);
    if (!rep.passed) {
      manifest.passed = false;
      manifest.failures.push_back(rep.failure);
    }
  }
  manifest.files.push_back("manifest.json");
  io::write_text_file(manifest.directory / "manifest.json", to_json(manifest).dump(2) + "\n");
  return manifest;
}

}  // namespace hmmres
