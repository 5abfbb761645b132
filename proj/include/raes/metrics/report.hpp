#pragma once

// Dataset evaluation: ERLE over far-end single-talk frames and STOI over
// double-talk frames, per record and averaged per SER bucket.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/labels.hpp"
#include "raes/metrics/erle.hpp"
#include "raes/metrics/stoi.hpp"

namespace raes::metrics {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::array<int, 3> kSerBucketsDb = {0, -5, -10};

// Nearest table column; far-end-only records have no SER.
inline std::string ser_bucket(const std::optional<double>& target_db) {
  if (!target_db) return "far_end_single";
  int best = kSerBucketsDb[0];
  for (int b : kSerBucketsDb) {
    if (std::abs(*target_db - b) < std::abs(*target_db - best)) best = b;
  }
  return std::to_string(best) + "dB";
}

inline std::vector<DtdLabel> labels_from_rle(const json& runs) {
  std::vector<std::pair<int, std::size_t>> pairs;
  for (const auto& r : runs) pairs.emplace_back(r.at(0).get<int>(), r.at(1).get<std::size_t>());
  return run_length_decode(pairs);
}

struct MethodScores {
  std::optional<double> erle_db;
  std::optional<double> stoi;
};

struct RecordEval {
  std::string id;
  std::string bucket;
  MethodScores mic;        // unprocessed d(n)
  MethodScores processed;  // file under evaluation
};

struct EvalReport {
  std::vector<RecordEval> records;
  std::vector<std::string> missing;
  std::vector<std::pair<std::string, std::string>> failed;  // id, reason

  json to_json() const;
  void print_table(std::ostream& os) const;
};

namespace report_detail {

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> value() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
};

struct BucketMeans {
  Mean mic_erle, mic_stoi, erle, stoi;
  int records = 0;
};

inline std::vector<std::string> bucket_order() {
  std::vector<std::string> order;
  for (int b : kSerBucketsDb) order.push_back(std::to_string(b) + "dB");
  order.push_back("far_end_single");
  order.push_back("all");
  return order;
}

inline std::map<std::string, BucketMeans> aggregate(const std::vector<RecordEval>& records) {
  std::map<std::string, BucketMeans> m;
  for (const auto& r : records) {
    for (const std::string& key : {r.bucket, std::string("all")}) {
      auto& b = m[key];
      ++b.records;
      b.mic_erle.add(r.mic.erle_db);
      b.mic_stoi.add(r.mic.stoi);
      b.erle.add(r.processed.erle_db);
      b.stoi.add(r.processed.stoi);
    }
  }
  return m;
}

// Metrics are undefined on records without the relevant frames.
inline std::optional<double> try_erle(const AudioSignal& d, const AudioSignal& r, std::span<const DtdLabel> labels) {
  const auto mask = label_sample_mask(labels, d.size(), DtdLabel::kFarEndSingle);
  bool any = false;
  for (bool b : mask) any = any || b;
  if (!any) return std::nullopt;
  try {
    return erle_db(d.samples, r.samples, &mask);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

inline std::optional<double> try_stoi(const AudioSignal& s, const AudioSignal& x, std::span<const DtdLabel> labels,
                                      const std::vector<bool>& mutual_silence) {
  try {
    return stoi(s, x, labels, mutual_silence);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

}  // namespace report_detail

inline RecordEval evaluate_record(const std::string& id, const std::optional<double>& target_db,
                                  const AudioSignal& s, const AudioSignal& d, const AudioSignal& processed,
                                  std::span<const DtdLabel> labels, const std::vector<bool>& mutual_silence = {}) {
  using namespace report_detail;
  if (processed.size() != d.size()) {
    throw AudioFormatError("processed length " + std::to_string(processed.size()) +
                           " does not match mic length " + std::to_string(d.size()));
  }
  RecordEval r;
  r.id = id;
  r.bucket = ser_bucket(target_db);
  r.mic = {try_erle(d, d, labels), try_stoi(s, d, labels, mutual_silence)};
  r.processed = {try_erle(d, processed, labels), try_stoi(s, processed, labels, mutual_silence)};
  return r;
}

// Processed files are looked up as <processed_dir>/<id>.wav.
inline EvalReport evaluate_dataset(const fs::path& manifest, const fs::path& processed_dir) {
  std::ifstream in(manifest);
  if (!in) throw InvalidArgument("cannot open manifest " + manifest.string());
  const fs::path data_dir = manifest.parent_path();
  EvalReport report;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const auto id = rec.at("id").get<std::string>();
    const fs::path out_path = processed_dir / (id + ".wav");
    if (!fs::exists(out_path)) {
      report.missing.push_back(id);
      continue;
    }
    try {
      const double fs_rate = rec.at("sample_rate").get<double>();
      const AudioSignal s = read_wav(data_dir / rec.at("s").get<std::string>(), fs_rate);
      const AudioSignal d = read_wav(data_dir / rec.at("d").get<std::string>(), fs_rate);
      const AudioSignal x = read_wav(out_path, fs_rate);
      const auto& t = rec.at("params").at("target_ser_db");
      const std::optional<double> target = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
      const auto labels = labels_from_rle(rec.at("labels_rle"));
      std::vector<bool> silence;
      if (rec.contains("mutual_silence_rle")) {
        for (const auto& run : rec.at("mutual_silence_rle")) {
          silence.insert(silence.end(), run.at(1).get<std::size_t>(), run.at(0).get<int>() != 0);
        }
      }
      report.records.push_back(evaluate_record(id, target, s, d, x, labels, silence));
    } catch (const std::exception& e) {
      report.failed.emplace_back(id, e.what());
    }
  }
  return report;
}

inline json EvalReport::to_json() const {
  using namespace report_detail;
  json j;
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"id", r.id},
                    {"ser_bucket", r.bucket},
                    {"mic", {{"erle_db", opt(r.mic.erle_db)}, {"stoi", opt(r.mic.stoi)}}},
                    {"processed", {{"erle_db", opt(r.processed.erle_db)}, {"stoi", opt(r.processed.stoi)}}}});
  }
  j["records"] = recs;
  const auto means = aggregate(records);
  json agg = json::object();
  // Every bucket is present so tables keep fixed columns; empty ones hold nulls.
  for (const auto& key : bucket_order()) {
    auto it = means.find(key);
    const BucketMeans b = it == means.end() ? BucketMeans{} : it->second;
    agg[key] = {{"records", b.records},
                {"mic", {{"erle_db", opt(b.mic_erle.value())}, {"stoi", opt(b.mic_stoi.value())}}},
                {"processed", {{"erle_db", opt(b.erle.value())}, {"stoi", opt(b.stoi.value())}}}};
  }
  j["aggregate"] = agg;
  j["missing"] = missing;
  json f = json::array();
  for (const auto& [id, why] : failed) f.push_back({{"id", id}, {"error", why}});
  j["failed"] = f;
  return j;
}

inline void EvalReport::print_table(std::ostream& os) const {
  using namespace report_detail;
  const auto means = aggregate(records);
  auto cell = [](const std::optional<double>& v, int prec) {
    if (!v) return std::string("     -");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%6.*f", prec, *v);
    return std::string(buf);
  };
  auto get = [&](const std::string& key) -> const BucketMeans* {
    auto it = means.find(key);
    return it == means.end() ? nullptr : &it->second;
  };
  os << "STOI (double talk)      ";
  for (int b : kSerBucketsDb) os << "  " << (std::to_string(b) + "dB") << std::string(6 - std::to_string(b).size(), ' ');
  os << "\n";
  for (int which = 0; which < 2; ++which) {
    os << (which == 0 ? "  mic d(n)              " : "  processed             ");
    for (int b : kSerBucketsDb) {
      const auto* m = get(std::to_string(b) + "dB");
      const std::optional<double> v = m ? (which == 0 ? m->mic_stoi.value() : m->stoi.value()) : std::nullopt;
      os << "  " << cell(v, 3) << "  ";
    }
    os << "\n";
  }
  const auto* all = get("all");
  os << "ERLE dB (far-end single talk)\n";
  os << "  mic d(n)              " << cell(all ? all->mic_erle.value() : std::nullopt, 2) << "\n";
  os << "  processed             " << cell(all ? all->erle.value() : std::nullopt, 2) << "\n";
  os << records.size() << " evaluated, " << missing.size() << " missing, " << failed.size() << " failed\n";
}

}  // namespace raes::metrics
