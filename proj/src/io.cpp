#include "hmmres/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hmmres::io {

namespace {

using Eigen::Index;

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.contains(name)) throw std::invalid_argument(std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const Json& rows, const char* name) {
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument(std::string("field '") + name + "' must be a non-empty array");
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c)
      throw std::invalid_argument(std::string("field '") + name + "' is not rectangular");
    for (Index k = 0; k < c; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

AlphabetPtr alphabet_from(const Json& j) {
  return std::make_shared<const Alphabet>(field<std::vector<std::string>>(j, "alphabet"));
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) ++x;
  return out;
}

std::vector<std::size_t> zero_based(const std::vector<std::size_t>& v, const char* name) {
  std::vector<std::size_t> out(v);
  for (auto& x : out) {
    if (x == 0) throw std::invalid_argument(std::string("field '") + name + "' is 1-based");
    --x;
  }
  return out;
}

}  // namespace

ModelSpec model_spec_from_json(const Json& j) {
  ModelSpec spec;
  spec.alphabet = alphabet_from(j);
  for (const auto& row : field<std::vector<std::vector<double>>>(j, "sources"))
    spec.sources.emplace_back(spec.alphabet, row);
  spec.m = field<std::size_t>(j, "m");
  spec.seed = field_or<std::uint64_t>(j, "seed", 0);
  const Json sched = field<Json>(j, "schedule");
  spec.schedule.kind = schedule_kind_from_string(field<std::string>(sched, "kind"));
  const Json params = field_or<Json>(sched, "params", Json::object());
  spec.schedule.length = field_or<std::size_t>(params, "length", 0);
  spec.schedule.min_length = field_or<std::size_t>(params, "min_length", 0);
  spec.schedule.max_length = field_or<std::size_t>(params, "max_length", 0);
  spec.schedule.lengths = field_or<std::vector<std::size_t>>(params, "lengths", {});
  spec.schedule.ends = field_or<std::vector<std::size_t>>(params, "ends", {});
  spec.schedule.tau = zero_based(field_or<std::vector<std::size_t>>(params, "tau", {}), "tau");
  spec.schedule.horizon = field_or<std::size_t>(j, "horizon", 0);
  return spec;
}

Json to_json(const ModelSpec& spec) {
  Json j;
  j["alphabet"] = spec.alphabet->symbols();
  Json sources = Json::array();
  for (const auto& s : spec.sources) sources.push_back(to_json(s));
  j["sources"] = sources;
  j["m"] = spec.m;
  Json params = Json::object();
  const auto& s = spec.schedule;
  switch (s.kind) {
    case ScheduleKind::fixed_length: params["length"] = s.length; break;
    case ScheduleKind::random_length:
      params["min_length"] = s.min_length;
      params["max_length"] = s.max_length;
      break;
    case ScheduleKind::alternating: params["lengths"] = s.lengths; break;
    case ScheduleKind::doubling_nonergodic: break;
    case ScheduleKind::explicit_list:
      params["ends"] = s.ends;
      params["tau"] = one_based(s.tau);
      break;
  }
  j["schedule"] = {{"kind", to_string(s.kind)}, {"params", params}};
  j["horizon"] = s.horizon;
  j["seed"] = spec.seed;
  return j;
}

IntervalModel build_model(const ModelSpec& spec) {
  Rng rng(spec.seed);
  return build_schedule(spec.schedule, spec.sources, spec.m, rng);
}

Json to_json(const Distribution& mu) {
  Json j = Json::array();
  for (double p : mu.probs()) j.push_back(p);
  return j;
}

Json to_json(const Hmm& h) {
  Json j;
  j["k"] = h.k();
  j["transition"] = matrix_rows(h.transition());
  j["emissions"] = matrix_rows(h.emission());
  j["alphabet"] = h.alphabet()->symbols();
  return j;
}

Hmm hmm_from_json(const Json& j) {
  const AlphabetPtr alphabet = alphabet_from(j);
  Matrix p = matrix_from_rows(field<Json>(j, "transition"), "transition");
  Matrix e = matrix_from_rows(field<Json>(j, "emissions"), "emissions");
  if (j.contains("k") && field<std::size_t>(j, "k") != static_cast<std::size_t>(p.rows()))
    throw std::invalid_argument("field 'k' disagrees with the transition matrix");
  return Hmm(alphabet, std::move(p), std::move(e));
}

Json to_json(const SecondMoment& m) {
  Json j;
  j["alphabet"] = m.alphabet()->symbols();
  j["rows"] = matrix_rows(m.matrix());
  return j;
}

SecondMoment moment_from_json(const Json& j) {
  return SecondMoment(alphabet_from(j), matrix_from_rows(field<Json>(j, "rows"), "rows"));
}

Json to_json(const FitResult& fit, bool trace) {
  Json j;
  j["hmm"] = to_json(fit.hmm);
  j["pi"] = fit.pi;
  j["loglik"] = fit.loglik;
  j["best_restart"] = fit.best_restart;
  j["converged"] = fit.converged;
  j["seed"] = fit.seed;
  Json restarts = Json::array();
  for (const auto& r : fit.restarts) {
    Json t;
    t["seed"] = r.seed;
    t["iterations"] = r.iterations;
    t["converged"] = r.converged;
    t["clip_events"] = r.clip_events;
    t["monotonicity_violations"] = r.monotonicity_violations;
    t["final_loglik"] = r.final_loglik;
    if (trace) t["loglik"] = r.loglik;
    restarts.push_back(std::move(t));
  }
  j["restarts"] = restarts;
  return j;
}

Json to_json(const DhResult& d) {
  Json j;
  j["raw"] = d.raw;
  j["clamped"] = d.clamped;
  j["infimum"] = d.infimum;
  j["slack"] = d.slack;
  j["status"] = to_string(d.status);
  j["certificate"] = d.certificate;
  j["iterations"] = d.iterations;
  if (d.argmin_phi) j["argmin_phi"] = matrix_rows(d.argmin_phi->matrix());
  return j;
}

void write_samples(std::ostream& out, const LabeledSample& s, const Alphabet& alphabet) {
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    Json rec;
    rec["i"] = i + 1;
    rec["symbol"] = alphabet.name(s.x[i]);
    if (i < s.kappa.size()) rec["kappa"] = s.kappa[i] + 1;
    out << rec.dump() << '\n';
  }
}

LabeledSample read_samples(std::istream& in, const Alphabet& alphabet) {
  LabeledSample s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::exception& e) {
      throw std::invalid_argument("samples line " + std::to_string(lineno) + ": " + e.what());
    }
    if (field<std::size_t>(rec, "i") != s.x.size() + 1)
      throw std::invalid_argument("samples line " + std::to_string(lineno) + ": indices must be consecutive from 1");
    s.x.push_back(alphabet.index_of(field<std::string>(rec, "symbol")));
    if (rec.contains("kappa")) {
      const auto kappa = field<std::size_t>(rec, "kappa");
      if (kappa == 0) throw std::invalid_argument("samples line " + std::to_string(lineno) + ": kappa is 1-based");
      s.kappa.push_back(kappa - 1);
    }
  }
  if (!s.kappa.empty() && s.kappa.size() != s.x.size())
    throw std::invalid_argument("samples: kappa must be given on every line or none");
  return s;
}

void write_segmentation(std::ostream& out, const Segmentation& seg) {
  const auto windows = static_cast<std::size_t>(seg.scores.rows());
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    Json rec;
    rec["i"] = i + 1;
    rec["label"] = seg.labels[i] + 1;
    Json scores = Json::array();
    if (i < windows)
      for (Index j = 0; j < seg.scores.cols(); ++j) {
        const double v = seg.scores(static_cast<Index>(i), j);
        if (is_infinite(v))
          scores.push_back(nullptr);
        else
          scores.push_back(v);
      }
    rec["scores"] = scores;
    out << rec.dump() << '\n';
  }
}

Json to_json(const SegmentationMetrics& metrics) {
  Json j;
  j["accuracy"] = metrics.accuracy;
  Json recall = Json::array();
  for (const auto& r : metrics.recall) recall.push_back(r ? Json(*r) : Json(nullptr));
  j["recall"] = recall;
  j["boundary_excluded_accuracy"] = metrics.boundary_excluded_accuracy;
  j["boundary_excluded_count"] = metrics.boundary_excluded_count;
  j["true_change_points"] = one_based(metrics.true_change_points);
  Json offsets = Json::array();
  for (const auto& o : metrics.change_point_offsets) offsets.push_back(o ? Json(*o) : Json(nullptr));
  j["change_point_offsets"] = offsets;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_number(double v) {
  if (v == kInfinity) return "inf";
  if (v == -kInfinity) return "-inf";
  if (v != v) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (filled_ > 0) body_ += ',';
  if (v.find_first_of(",\"\r\n") == std::string::npos) {
    body_ += v;
  } else {
    body_ += '"';
    for (char c : v) {
      if (c == '"') body_ += '"';
      body_ += c;
    }
    body_ += '"';
  }
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }
CsvWriter& CsvWriter::cell(std::uint64_t v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(int v) { return cell(std::to_string(v)); }
CsvWriter& CsvWriter::cell(bool v) { return cell(std::string(v ? "true" : "false")); }

void CsvWriter::end_row() {
  if (filled_ != width_)
    throw std::logic_error("CsvWriter: row has " + std::to_string(filled_) + " cells, header has " + std::to_string(width_));
  body_ += "\r\n";
  filled_ = 0;
}

}  // namespace hmmres::io
