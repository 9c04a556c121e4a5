// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "rsbench/error.hpp"
#include "rsbench/hash.hpp"
#include "rsbench/image.hpp"
#include "rsbench/scoring.hpp"
#include "rsbench/text_perturb.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Line-delimited JSON helpers

/// Calls `fn(object, line_number)` for every non-blank line. Malformed JSON
/// raises a Parse error naming the line.
inline void for_each_jsonl(const fs::path& path,
                           const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected an object");
    }
    fn(obj, lineno);
  }
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const fs::path& path) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorKind::Io, "cannot write " + path.string());
  }

  void write(const json& obj) { out_ << obj.dump() << '\n'; }

  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::Io, "failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

inline void write_json(const fs::path& path, const json& obj) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << obj.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

namespace detail {

inline std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

inline std::string req_string(const json& obj, const char* key, const fs::path& path,
                              std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorKind::Parse, where(path, line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

inline std::int64_t req_int(const json& obj, const char* key, const fs::path& path,
                            std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw Error(ErrorKind::Parse, where(path, line) + ": field '" + key + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample manifest

struct ManifestOptions {
  bool verify_images = true;
};

inline fs::path resolve_image(const Manifest& m, const SampleRecord& s) {
  const fs::path p(s.image_path);
  return p.is_absolute() ? p : (fs::path(m.base_dir) / p).lexically_normal();
}

/// Reads a manifest: a header line {"coordinate_convention": ...} followed by
/// one sample object per line.
inline Manifest load_manifest(const fs::path& path, ManifestOptions opts = {}) {
  Manifest m;
  m.base_dir = path.parent_path().string();
  bool have_header = false;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    if (!have_header) {
      const std::string conv = detail::req_string(obj, "coordinate_convention", path, line);
      auto c = parse_convention(conv);
      if (!c) {
        throw Error(ErrorKind::Validation, detail::where(path, line) + ": unknown coordinate convention '" + conv + "'");
      }
      m.convention = *c;
      have_header = true;
      return;
    }
    if (obj.contains("coordinate_convention")) {
      throw Error(ErrorKind::Validation, detail::where(path, line) + ": a manifest declares one coordinate convention");
    }
    SampleRecord s;
    s.sample_id = detail::req_string(obj, "sample_id", path, line);
    s.image_path = detail::req_string(obj, "image", path, line);
    s.query = detail::req_string(obj, "query", path, line);
    s.reference_target = detail::req_string(obj, "target", path, line);
    const std::string task = detail::req_string(obj, "task", path, line);
    auto kind = parse_task_kind(task);
    if (!kind) throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": unknown task '" + task + "'");
    s.task.kind = *kind;
    if (*kind == TaskKind::Vqa) {
      const std::string st = detail::req_string(obj, "answer_structure", path, line);
      auto a = parse_answer_structure(st);
      if (!a || *a == AnswerStructure::Boxes) {
        throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": VQA answer_structure must be discrete or count");
      }
      s.task.vqa_structure = *a;
    }
    if (auto it = obj.find("regime"); it != obj.end() && !it->is_null()) {
      auto r = it->is_string() ? parse_regime(it->get<std::string>()) : std::nullopt;
      if (!r) throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": unknown regime");
      s.regime = *r;
    }

    if (s.sample_id.empty()) throw Error(ErrorKind::Validation, detail::where(path, line) + ": empty sample_id");
    if (!ids.insert(s.sample_id).second) {
      throw Error(ErrorKind::Validation, "duplicate sample_id '" + s.sample_id + "'");
    }
    if (s.reference_target.empty()) {
      throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": empty reference target");
    }
    try {
      validate_reference(s.reference_target, s.task, m.convention);
    } catch (const Error& e) {
      throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": " + e.what());
    }
    if (opts.verify_images) {
      try {
        probe_png(resolve_image(m, s));
      } catch (const Error& e) {
        throw Error(ErrorKind::Validation, "sample " + s.sample_id + ": " + e.what());
      }
    }
    m.samples.push_back(std::move(s));
  });
  if (!have_header) throw Error(ErrorKind::Parse, path.string() + ": missing header line");
  return m;
}

inline json to_json(const SampleRecord& s) {
  json o = {{"sample_id", s.sample_id},
            {"image", s.image_path},
            {"query", s.query},
            {"target", s.reference_target},
            {"task", std::string(to_string(s.task.kind))}};
  if (s.task.kind == TaskKind::Vqa) o["answer_structure"] = std::string(to_string(s.task.vqa_structure));
  if (s.regime) o["regime"] = std::string(to_string(*s.regime));
  return o;
}

inline void write_manifest(const fs::path& path, const Manifest& m) {
  JsonlWriter w(path);
  w.write({{"coordinate_convention", std::string(to_string(m.convention))}});
  for (const auto& s : m.samples) w.write(to_json(s));
  w.close();
}

// ---------------------------------------------------------------------------
// Regime assignment

/// Balanced, deterministic regime assignment: samples are ranked by a stable
/// hash of (sample_id, seed) and dealt round-robin over `regimes`.
inline std::vector<SampleRecord> assign_regimes(
    std::vector<SampleRecord> samples, std::uint64_t seed,
    const std::vector<TextRegime>& regimes = {kRewriteRegimes.begin(), kRewriteRegimes.end()}) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "no samples to assign regimes to");
  if (regimes.empty()) throw Error(ErrorKind::Config, "no text regimes enabled");
  std::vector<std::size_t> order(samples.size());
  std::vector<std::uint64_t> keys(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    order[i] = i;
    keys[i] = hash_combine(fnv1a64(samples[i].sample_id), seed);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(keys[a], samples[a].sample_id) < std::tie(keys[b], samples[b].sample_id);
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    samples[order[rank]].regime = regimes[rank % regimes.size()];
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Responses

inline void validate_response(const ResponseRecord& r) {
  const std::string id = r.sample_id + "/" + std::to_string(r.condition_index) + "/" +
                         std::to_string(r.draw_index) + "/" + r.responder_id;
  if (r.sample_id.empty()) throw Error(ErrorKind::Validation, "response with empty sample_id");
  if (r.condition_index < 1 || r.condition_index > 4) {
    throw Error(ErrorKind::Validation, "response " + id + ": condition must be in 1..4");
  }
  if (r.greedy ? r.draw_index != 0 : r.draw_index < 1) {
    throw Error(ErrorKind::Validation, "response " + id + ": draw must be >= 1 (or 0 for greedy outputs)");
  }
  if (r.logprob_sum && (!std::isfinite(*r.logprob_sum) || *r.logprob_sum > 0)) {
    throw Error(ErrorKind::Validation, "response " + id + ": logprob_sum must be finite and <= 0");
  }
}

inline std::vector<ResponseRecord> load_responses(const fs::path& path) {
  std::vector<ResponseRecord> out;
  std::set<std::tuple<std::string, int, int, std::string>> keys;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    ResponseRecord r;
    r.sample_id = detail::req_string(obj, "sample_id", path, line);
    r.condition_index = static_cast<int>(detail::req_int(obj, "condition", path, line));
    r.draw_index = static_cast<int>(detail::req_int(obj, "draw", path, line));
    r.responder_id = detail::req_string(obj, "responder", path, line);
    r.text = detail::req_string(obj, "text", path, line);
    if (auto it = obj.find("logprob_sum"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) throw Error(ErrorKind::Parse, detail::where(path, line) + ": logprob_sum must be a number");
      r.logprob_sum = it->get<double>();
    }
    if (auto it = obj.find("greedy"); it != obj.end()) {
      if (!it->is_boolean()) throw Error(ErrorKind::Parse, detail::where(path, line) + ": greedy must be a boolean");
      r.greedy = it->get<bool>();
    }
    validate_response(r);
    if (!keys.emplace(r.sample_id, r.condition_index, r.draw_index, r.responder_id).second) {
      throw Error(ErrorKind::Validation, detail::where(path, line) + ": duplicate response key for " + r.sample_id);
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline json to_json(const ResponseRecord& r) {
  json o = {{"sample_id", r.sample_id},
            {"condition", r.condition_index},
            {"draw", r.draw_index},
            {"responder", r.responder_id},
            {"text", r.text}};
  if (r.logprob_sum) o["logprob_sum"] = *r.logprob_sum;
  if (r.greedy) o["greedy"] = true;
  return o;
}

inline void write_responses(const fs::path& path, const std::vector<ResponseRecord>& rs) {
  JsonlWriter w(path);
  for (const auto& r : rs) w.write(to_json(r));
  w.close();
}

// ---------------------------------------------------------------------------
// Condition sets

inline ConditionSet build_condition_set(const Manifest& m, const SampleRecord& sample,
                                        const fs::path& perturbed_image,
                                        const std::string& perturbed_query) {
  if (!fs::exists(perturbed_image)) {
    throw Error(ErrorKind::MissingArtifact, "perturbed image for " + sample.sample_id +
                                                " not found: " + perturbed_image.string());
  }
  return ConditionSet(sample.sample_id,
                      Condition{resolve_image(m, sample).string(), sample.query},
                      Condition{perturbed_image.lexically_normal().string(), perturbed_query});
}

inline json to_json(const ConditionSet& cs) {
  json conds = json::array();
  for (int j = 1; j <= 4; ++j) {
    conds.push_back({{"condition", j}, {"image", cs.at(j).image_path}, {"query", cs.at(j).query}});
  }
  return {{"sample_id", cs.sample_id()}, {"conditions", conds}};
}

inline void write_condition_sets(const fs::path& path, const std::vector<ConditionSet>& sets) {
  JsonlWriter w(path);
  for (const auto& cs : sets) w.write(to_json(cs));
  w.close();
}

/// Reads a condition-set index and re-checks the sharing invariants.
inline std::map<std::string, ConditionSet> load_condition_sets(const fs::path& path) {
  std::map<std::string, ConditionSet> out;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    const std::string id = detail::req_string(obj, "sample_id", path, line);
    auto it = obj.find("conditions");
    if (it == obj.end() || !it->is_array() || it->size() != 4) {
      throw Error(ErrorKind::Parse, detail::where(path, line) + ": expected 4 conditions");
    }
    std::array<Condition, 4> c;
    for (std::size_t j = 0; j < 4; ++j) {
      c[j].image_path = detail::req_string((*it)[j], "image", path, line);
      c[j].query = detail::req_string((*it)[j], "query", path, line);
    }
    ConditionSet cs(id, c[0], c[3]);
    if (cs.conditions() != c) {
      throw Error(ErrorKind::Validation, "condition set " + id + " violates the sharing invariants");
    }
    if (!out.emplace(id, std::move(cs)).second) {
      throw Error(ErrorKind::Validation, "duplicate condition set for " + id);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Rewrite jobs and rewrites

inline void write_rewrite_jobs(const fs::path& path, const std::vector<RewriteJob>& jobs) {
  JsonlWriter w(path);
  for (const auto& j : jobs) {
    w.write({{"sample_id", j.sample_id},
             {"regime", std::string(to_string(j.regime))},
             {"prompt", j.prompt},
             {"source_query", j.source_query},
             {"anchors", j.anchors}});
  }
  w.close();
}

/// Reads {sample_id, rewritten} lines into a map.
inline std::map<std::string, std::string> load_rewrites(const fs::path& path) {
  std::map<std::string, std::string> out;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    const std::string id = detail::req_string(obj, "sample_id", path, line);
    const std::string text = detail::req_string(obj, "rewritten", path, line);
    if (!out.emplace(id, text).second) {
      throw Error(ErrorKind::Validation, detail::where(path, line) + ": duplicate rewrite for " + id);
    }
  });
  return out;
}

inline RewriteIngest ingest_rewrites(const std::vector<RewriteJob>& jobs, const fs::path& rewrites) {
  return ingest_rewrites(jobs, load_rewrites(rewrites));
}

inline void write_rewrite_report(const fs::path& path, const RewriteIngest& ingest) {
  JsonlWriter w(path);
  for (const auto& r : ingest.rejected) {
    w.write({{"sample_id", r.sample_id},
             {"rewritten", r.rewritten},
             {"reason", r.reason},
             {"check", "lexical anchor rule; needs manual review"}});
  }
  w.close();
}

}  // namespace rsbench
