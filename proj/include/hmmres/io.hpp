#pragma once

// File formats. Sources and labels are written 1-based, symbols by name.
//
//   model spec  {alphabet, sources, m, schedule: {kind, params}, horizon, seed}
//   samples     JSONL, one {i, symbol, kappa} per index (i 1-based)
//   hmm         {k, transition, emissions, alphabet}
//   moment      {alphabet, rows}
//   segmentation JSONL {i, label, scores}
//
// CSV output follows RFC 4180 with floats printed to 12 significant digits.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmmres/estimation.hpp"
#include "hmmres/hmm.hpp"
#include "hmmres/interval_model.hpp"
#include "hmmres/resilience.hpp"
#include "hmmres/segmentation.hpp"

namespace hmmres::io {

using Json = nlohmann::ordered_json;

struct ModelSpec {
  AlphabetPtr alphabet;
  std::vector<Distribution> sources;
  std::size_t m = 0;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;  // drives random schedules
};

/// Throws std::invalid_argument with the offending field on malformed input.
ModelSpec model_spec_from_json(const Json& j);
Json to_json(const ModelSpec& spec);
/// build_schedule with Rng(spec.seed).
IntervalModel build_model(const ModelSpec& spec);

Json to_json(const Distribution& mu);
Json to_json(const Hmm& h);
Hmm hmm_from_json(const Json& j);
Json to_json(const SecondMoment& m);
SecondMoment moment_from_json(const Json& j);
Json to_json(const FitResult& fit, bool trace);
Json to_json(const DhResult& d);

void write_samples(std::ostream& out, const LabeledSample& s, const Alphabet& alphabet);
/// Reads {i, symbol, kappa} lines; kappa may be absent. Records must be in order.
LabeledSample read_samples(std::istream& in, const Alphabet& alphabet);

void write_segmentation(std::ostream& out, const Segmentation& seg);
Json to_json(const SegmentationMetrics& metrics);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& body);

/// Integer or "%.12g" float text; infinities print as inf / -inf.
std::string format_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }
  CsvWriter& cell(double v);
  CsvWriter& cell(std::uint64_t v);
  CsvWriter& cell(int v);
  CsvWriter& cell(bool v);
  /// Throws std::logic_error when the row is not header-wide.
  void end_row();
  const std::string& body() const { return body_; }

 private:
  std::size_t width_;
  std::size_t filled_ = 0;
  std::string body_;
};

}  // namespace hmmres::io
