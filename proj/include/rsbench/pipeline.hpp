// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rsbench/dataset.hpp"
#include "rsbench/digest.hpp"
#include "rsbench/error.hpp"
#include "rsbench/jobs.hpp"
#include "rsbench/metrics.hpp"
#include "rsbench/parallel.hpp"
#include "rsbench/perturb.hpp"
#include "rsbench/preference.hpp"
#include "rsbench/text_perturb.hpp"
#include "rsbench/types.hpp"

#ifndef RSBENCH_VERSION
#define RSBENCH_VERSION "0.0.0"
#endif

namespace rsbench {

inline constexpr const char* kToolVersion = RSBENCH_VERSION;

// ---------------------------------------------------------------------------
// Task groups: one metric report per group

inline constexpr std::array<std::string_view, 4> kTaskGroups = {
    "scene_classification", "vqa_discrete", "vqa_count", "visual_grounding"};

inline std::string task_group(const Task& t) {
  switch (t.kind) {
    case TaskKind::SceneClassification: return "scene_classification";
    case TaskKind::VisualGrounding: return "visual_grounding";
    case TaskKind::Vqa: return t.vqa_structure == AnswerStructure::Count ? "vqa_count" : "vqa_discrete";
  }
  return "";
}

inline Task task_of_group(std::string_view g) {
  if (g == "scene_classification") return {TaskKind::SceneClassification};
  if (g == "vqa_discrete") return {TaskKind::Vqa, AnswerStructure::Discrete};
  if (g == "vqa_count") return {TaskKind::Vqa, AnswerStructure::Count};
  if (g == "visual_grounding") return {TaskKind::VisualGrounding};
  throw Error(ErrorKind::Config, "unknown task group '" + std::string(g) + "'");
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string manifest;
  std::string out;
  double strength = 0.45;
  std::uint64_t seed = 0;
  std::vector<TextRegime> regimes = {kRewriteRegimes.begin(), kRewriteRegimes.end()};
  double homoglyph_rate = 0.5;
  int draws = 4;
  int k = 5;
  double min_gap = 0.05;
  std::vector<std::string> tasks;  // empty: every group present
  std::string templates;
  std::string rewrites;
  std::string responses;       // sampled responses over all four conditions
  std::string eval_responses;  // greedy + K sampled responses for j = 1 and j = 4

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
    if (manifest.empty()) fail("manifest path is required");
    if (out.empty()) fail("output directory is required");
    if (!(strength >= 0.0 && strength <= 1.0)) fail("strength must lie in [0, 1]");
    if (regimes.empty()) fail("at least one text regime must be enabled");
    if (!(homoglyph_rate >= 0.0 && homoglyph_rate <= 1.0)) fail("homoglyph_rate must lie in [0, 1]");
    if (draws < 1) fail("draws (N) must be >= 1");
    if (k < 1) fail("k must be >= 1");
    if (!(min_gap >= 0.0) || !std::isfinite(min_gap)) fail("min_gap must be >= 0");
    for (const auto& t : tasks) task_of_group(t);
  }

  json to_json() const {
    json regs = json::array();
    for (auto r : regimes) regs.push_back(std::string(to_string(r)));
    return {{"manifest", manifest},   {"out", out},
            {"strength", strength},   {"seed", seed},
            {"regimes", regs},        {"homoglyph_rate", homoglyph_rate},
            {"draws", draws},         {"k", k},
            {"min_gap", min_gap},     {"tasks", tasks},
            {"templates", templates}, {"rewrites", rewrites},
            {"responses", responses}, {"eval_responses", eval_responses}};
  }

  std::string digest() const { return sha256_hex(to_json().dump()); }
};

enum class Stage { Perturb, Jobs, Score, Preferences, Metrics };

inline constexpr std::array<Stage, 5> kStages = {Stage::Perturb, Stage::Jobs, Stage::Score,
                                                 Stage::Preferences, Stage::Metrics};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Perturb: return "perturb";
    case Stage::Jobs: return "jobs";
    case Stage::Score: return "score";
    case Stage::Preferences: return "preferences";
    case Stage::Metrics: return "metrics";
  }
  return "";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : kStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Run log

/// Files a stage read and wrote, with their SHA-256 digests.
class StageRecord {
 public:
  StageRecord(const RunConfig& cfg, Stage stage) : cfg_(cfg), stage_(stage) {}

  fs::path dir() const { return fs::path(cfg_.out) / std::string(to_string(stage_)); }

  void input(const fs::path& p) { inputs_.push_back({{"path", label(p)}, {"sha256", sha256_file(p)}}); }
  void output(const fs::path& p) { outputs_.push_back({{"path", label(p)}, {"sha256", sha256_file(p)}}); }

  /// Merges this stage's entry into `<out>/run_log.json`.
  void commit() const {
    const fs::path log_path = fs::path(cfg_.out) / "run_log.json";
    json log = fs::exists(log_path) ? read_json(log_path) : json::object();
    log["tool"] = "rsbench";
    log["version"] = kToolVersion;
    log["stages"][std::string(to_string(stage_))] = {
        {"config_sha256", cfg_.digest()}, {"inputs", inputs_}, {"outputs", outputs_}};
    write_json(log_path, log);
  }

 private:
  // Paths under the run directory are logged relative to it.
  std::string label(const fs::path& p) const {
    const fs::path rel = p.lexically_relative(cfg_.out);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.generic_string();
  }

  const RunConfig& cfg_;
  Stage stage_;
  json inputs_ = json::array();
  json outputs_ = json::array();
};

inline void require_file(const fs::path& p, const std::string& what) {
  if (p.empty() || !fs::exists(p)) {
    throw Error(ErrorKind::StageDependencyMissing,
                what + " not found" + (p.empty() ? std::string() : ": " + p.string()));
  }
}

inline fs::path conditions_path(const RunConfig& cfg) { return fs::path(cfg.out) / "perturb" / "conditions.jsonl"; }

// ---------------------------------------------------------------------------
// Stage: perturb

inline std::uint64_t sample_seed(std::uint64_t seed, std::string_view sample_id) {
  return hash_combine(seed, fnv1a64(sample_id));
}

/// Regimes already in the manifest are kept when all of them are enabled;
/// otherwise every sample is (re)assigned over the enabled regimes.
inline std::vector<SampleRecord> resolve_regimes(std::vector<SampleRecord> samples, const RunConfig& cfg) {
  const bool keep = std::all_of(samples.begin(), samples.end(), [&](const SampleRecord& s) {
    return s.regime && std::find(cfg.regimes.begin(), cfg.regimes.end(), *s.regime) != cfg.regimes.end();
  });
  return keep ? samples : assign_regimes(std::move(samples), cfg.seed, cfg.regimes);
}

using PerturbedQueries = std::map<std::string, std::pair<std::string, std::string>>;  // id -> (query, source)

/// Text side of the perturb stage. Writes rewrite_jobs.jsonl, and once the
/// rewrites are available rewrite_report.jsonl and perturbed_queries.jsonl,
/// into `dir`. Regimes must already be assigned. A rejected rewrite falls
/// back to the clean query (source "fallback") and is listed in the report.
inline PerturbedQueries perturb_queries(const Manifest& m, const RunConfig& cfg, const fs::path& dir,
                                        StageRecord* rec = nullptr, std::size_t* rejected = nullptr) {
  std::vector<RewriteJob> jobs;
  const bool needs_templates = std::any_of(m.samples.begin(), m.samples.end(),
                                           [](const SampleRecord& s) { return !is_unseen(*s.regime); });
  if (needs_templates) {
    if (cfg.templates.empty()) throw Error(ErrorKind::Config, "templates directory is required");
    const TemplateSet templates = TemplateSet::load(cfg.templates);
    if (rec) {
      for (TextRegime r : kRewriteRegimes) {
        if (std::find(cfg.regimes.begin(), cfg.regimes.end(), r) != cfg.regimes.end()) {
          rec->input(fs::path(cfg.templates) / (std::string(to_string(r)) + ".txt"));
        }
      }
    }
    for (const auto& s : m.samples) {
      if (!is_unseen(*s.regime)) jobs.push_back(render_rewrite_job(s, *s.regime, templates, m.convention));
    }
  }
  fs::create_directories(dir);
  write_rewrite_jobs(dir / "rewrite_jobs.jsonl", jobs);
  if (rec) rec->output(dir / "rewrite_jobs.jsonl");

  PerturbedQueries perturbed;
  RewriteIngest ingest;
  if (!jobs.empty()) {
    if (cfg.rewrites.empty() || !fs::exists(cfg.rewrites)) {
      if (rec) rec->commit();
      throw Error(ErrorKind::StageDependencyMissing,
                  "rewrites are required: submit " + (dir / "rewrite_jobs.jsonl").string() +
                      " to an LLM and pass the results as rewrites");
    }
    if (rec) rec->input(cfg.rewrites);
    ingest = ingest_rewrites(jobs, fs::path(cfg.rewrites));
    for (const auto& [id, q] : ingest.accepted) perturbed[id] = {q, "rewrite"};
  }
  write_rewrite_report(dir / "rewrite_report.jsonl", ingest);
  if (rec) rec->output(dir / "rewrite_report.jsonl");
  if (rejected) *rejected = ingest.rejected.size();

  JsonlWriter qw(dir / "perturbed_queries.jsonl");
  for (const auto& s : m.samples) {
    if (is_unseen(*s.regime)) {
      perturbed[s.sample_id] = {homoglyph_perturb(s.query, cfg.homoglyph_rate, sample_seed(cfg.seed, s.sample_id)),
                                "homoglyph"};
    } else if (!perturbed.count(s.sample_id)) {
      perturbed[s.sample_id] = {s.query, "fallback"};
    }
    const auto& [q, source] = perturbed.at(s.sample_id);
    qw.write({{"sample_id", s.sample_id},
              {"regime", std::string(to_string(*s.regime))},
              {"source", source},
              {"query", q}});
  }
  qw.close();
  if (rec) rec->output(dir / "perturbed_queries.jsonl");
  return perturbed;
}

/// Image side: writes `<dir>/<sample_id>.pert.png` for every sample on the
/// worker pool. Each sample's noise seed derives from (seed, sample_id).
inline std::vector<fs::path> perturb_images(const Manifest& m, double strength, std::uint64_t seed,
                                            const fs::path& dir) {
  fs::create_directories(dir);
  return parallel_map<fs::path>(m.samples.size(), [&](std::size_t i) {
    const SampleRecord& s = m.samples[i];
    PerturbParams p;
    p.strength = strength;
    p.seed = sample_seed(seed, s.sample_id);
    const fs::path out = dir / (s.sample_id + ".pert.png");
    write_png(out, perturb_image(read_png(resolve_image(m, s)), p));
    return out;
  });
}

struct PerturbSummary {
  std::size_t images = 0;
  std::size_t queries = 0;
  std::size_t rewrites_rejected = 0;
};

inline PerturbSummary stage_perturb(const RunConfig& cfg) {
  cfg.validate();
  StageRecord rec(cfg, Stage::Perturb);
  const fs::path dir = rec.dir();
  Manifest m = load_manifest(cfg.manifest);
  rec.input(cfg.manifest);
  if (m.samples.empty()) throw Error(ErrorKind::Validation, "manifest has no samples");
  m.samples = resolve_regimes(std::move(m.samples), cfg);
  for (const auto& s : m.samples) rec.input(resolve_image(m, s));

  std::size_t rejected = 0;
  const PerturbedQueries queries = perturb_queries(m, cfg, dir, &rec, &rejected);
  const auto images = perturb_images(m, cfg.strength, cfg.seed, dir / "images");

  std::vector<ConditionSet> sets;
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    rec.output(images[i]);
    sets.push_back(build_condition_set(m, m.samples[i], images[i], queries.at(m.samples[i].sample_id).first));
  }
  write_condition_sets(dir / "conditions.jsonl", sets);
  rec.output(dir / "conditions.jsonl");
  rec.commit();
  return {images.size(), queries.size(), rejected};
}

// ---------------------------------------------------------------------------
// Stage: jobs

inline std::size_t stage_jobs(const RunConfig& cfg) {
  cfg.validate();
  StageRecord rec(cfg, Stage::Jobs);
  require_file(conditions_path(cfg), "condition-set index (run the perturb stage first)");
  const auto sets = load_condition_sets(conditions_path(cfg));
  rec.input(conditions_path(cfg));
  const auto pref = preference_jobs(sets, cfg.draws);
  const auto eval = eval_jobs(sets, cfg.k);
  write_jobs(rec.dir() / "preference_jobs.jsonl", pref);
  rec.output(rec.dir() / "preference_jobs.jsonl");
  write_jobs(rec.dir() / "eval_jobs.jsonl", eval);
  rec.output(rec.dir() / "eval_jobs.jsonl");
  rec.commit();
  return pref.size() + eval.size();
}

// ---------------------------------------------------------------------------
// Scoring

struct ScoredResponse {
  ResponseRecord response;
  double score = 0.0;
};

inline std::vector<ScoredResponse> score_responses(const Manifest& m, const std::vector<ResponseRecord>& rs) {
  std::map<std::string, const SampleRecord*> by_id;
  for (const auto& s : m.samples) by_id.emplace(s.sample_id, &s);
  for (const auto& r : rs) {
    if (!by_id.count(r.sample_id)) throw Error(ErrorKind::Validation, "response for unknown sample " + r.sample_id);
  }
  return parallel_map<ScoredResponse>(rs.size(), [&](std::size_t i) {
    const SampleRecord& s = *by_id.at(rs[i].sample_id);
    return ScoredResponse{rs[i], score_response(rs[i].text, s.reference_target, s.task, m.convention).value};
  });
}

inline void write_scores(const fs::path& path, const std::vector<ScoredResponse>& scored) {
  JsonlWriter w(path);
  for (const auto& s : scored) {
    w.write({{"sample_id", s.response.sample_id},
             {"condition", s.response.condition_index},
             {"draw", s.response.draw_index},
             {"responder", s.response.responder_id},
             {"score", s.score}});
  }
  w.close();
}

inline std::size_t stage_score(const RunConfig& cfg) {
  cfg.validate();
  StageRecord rec(cfg, Stage::Score);
  require_file(cfg.responses, "response file (run inference on jobs/preference_jobs.jsonl)");
  const Manifest m = load_manifest(cfg.manifest);
  rec.input(cfg.manifest);
  const auto rs = load_responses(cfg.responses);
  rec.input(cfg.responses);
  const auto scored = score_responses(m, rs);
  write_scores(rec.dir() / "scores.jsonl", scored);
  rec.output(rec.dir() / "scores.jsonl");
  rec.commit();
  return scored.size();
}

// ---------------------------------------------------------------------------
// Stage: preferences

inline CorpusSummary stage_preferences(const RunConfig& cfg) {
  cfg.validate();
  StageRecord rec(cfg, Stage::Preferences);
  require_file(conditions_path(cfg), "condition-set index (run the perturb stage first)");
  require_file(cfg.responses, "response file (run inference on jobs/preference_jobs.jsonl)");
  const Manifest m = load_manifest(cfg.manifest);
  rec.input(cfg.manifest);
  const auto sets = load_condition_sets(conditions_path(cfg));
  rec.input(conditions_path(cfg));
  const auto rs = load_responses(cfg.responses);
  rec.input(cfg.responses);
  CorpusOptions opts;
  opts.min_gap = cfg.min_gap;
  opts.expected_draws = cfg.draws;
  const Corpus corpus = build_corpus(m, sets, rs, opts);
  const fs::path out = rec.dir() / "dpo_corpus.jsonl";
  export_corpus(out, corpus);
  rec.output(out);
  rec.output(summary_path(out));
  rec.commit();
  return corpus.summary;
}

// ---------------------------------------------------------------------------
// Metrics

inline json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"task", task_group(r.task)},
          {"answer_structure", std::string(to_string(r.task.structure()))},
          {"m_clean", r.m_clean},
          {"m_pert", r.m_pert},
          {"rpd_percent", opt(r.rpd_percent)},
          {"cca", r.cca},
          {"giou_clean", opt(r.giou_clean)},
          {"giou_pert", opt(r.giou_pert)},
          {"samples", r.samples},
          {"k", r.k},
          {"strength", opt(r.strength)}};
}

/// Assembles the evaluation run of one task group from clean and perturbed
/// response records (a greedy draw 0 plus draws 1..K per sample). Samples of
/// the group absent from both files are left out.
inline EvalRun build_eval_run(const Manifest& m, std::string_view group,
                              const std::vector<ResponseRecord>& clean,
                              const std::vector<ResponseRecord>& pert, int k) {
  if (k < 1) throw Error(ErrorKind::Config, "K must be >= 1");
  EvalRun run;
  run.task = task_of_group(group);
  run.convention = m.convention;
  run.k = static_cast<std::size_t>(k);

  struct Outputs {
    std::optional<std::string> greedy;
    std::map<int, std::string> sampled;
  };
  std::set<std::string> responders;
  auto collect = [&](const std::vector<ResponseRecord>& rs) {
    std::map<std::string, Outputs> out;
    for (const auto& r : rs) {
      responders.insert(r.responder_id);
      Outputs& o = out[r.sample_id];
      if (r.greedy || r.draw_index == 0) {
        o.greedy = r.text;
      } else if (r.draw_index <= k) {
        o.sampled[r.draw_index] = r.text;
      }
    }
    return out;
  };
  const auto c = collect(clean);
  const auto p = collect(pert);
  if (responders.size() > 1) {
    throw Error(ErrorKind::Validation, "evaluation responses mix several responders");
  }
  for (const auto& s : m.samples) {
    if (task_group(s.task) != group) continue;
    auto ci = c.find(s.sample_id);
    auto pi = p.find(s.sample_id);
    if (ci == c.end() && pi == p.end()) continue;
    if (ci == c.end() || pi == p.end() || !ci->second.greedy || !pi->second.greedy) {
      throw Error(ErrorKind::Validation, "sample " + s.sample_id +
                                             " lacks a greedy output under the clean or perturbed condition");
    }
    EvalSample e;
    e.sample_id = s.sample_id;
    e.reference = s.reference_target;
    e.greedy_clean = *ci->second.greedy;
    e.greedy_pert = *pi->second.greedy;
    for (const auto& [d, t] : ci->second.sampled) e.sampled_clean.push_back(t);
    for (const auto& [d, t] : pi->second.sampled) e.sampled_pert.push_back(t);
    run.samples.push_back(std::move(e));
  }
  if (run.samples.empty()) {
    throw Error(ErrorKind::EmptyInput, "no responses for task " + std::string(group));
  }
  return run;
}

/// One report per task group (restricted to `cfg.tasks` when given) from a
/// response file holding j = 1 and j = 4 records.
inline std::vector<MetricReport> compute_reports(const Manifest& m, const std::vector<ResponseRecord>& rs,
                                                 const RunConfig& cfg) {
  std::vector<ResponseRecord> clean, pert;
  for (const auto& r : rs) {
    if (r.condition_index == 1) clean.push_back(r);
    else if (r.condition_index == 4) pert.push_back(r);
  }
  std::set<std::string> present;
  for (const auto& s : m.samples) present.insert(task_group(s.task));
  std::vector<MetricReport> reports;
  for (std::string_view g : kTaskGroups) {
    const std::string gs(g);
    if (!present.count(gs)) continue;
    if (!cfg.tasks.empty() && std::find(cfg.tasks.begin(), cfg.tasks.end(), gs) == cfg.tasks.end()) continue;
    MetricReport r = evaluate_run(build_eval_run(m, g, clean, pert, cfg.k));
    r.strength = cfg.strength;
    reports.push_back(r);
  }
  return reports;
}

inline std::vector<MetricReport> stage_metrics(const RunConfig& cfg) {
  cfg.validate();
  StageRecord rec(cfg, Stage::Metrics);
  require_file(cfg.eval_responses, "evaluation response file (run inference on jobs/eval_jobs.jsonl)");
  const Manifest m = load_manifest(cfg.manifest);
  rec.input(cfg.manifest);
  const auto rs = load_responses(cfg.eval_responses);
  rec.input(cfg.eval_responses);
  const auto reports = compute_reports(m, rs, cfg);
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  write_json(rec.dir() / "report.json", {{"reports", arr}});
  rec.output(rec.dir() / "report.json");
  rec.commit();
  return reports;
}

// ---------------------------------------------------------------------------
// Orchestration

inline void run_stage(const RunConfig& cfg, Stage stage) {
  switch (stage) {
    case Stage::Perturb: stage_perturb(cfg); break;
    case Stage::Jobs: stage_jobs(cfg); break;
    case Stage::Score: stage_score(cfg); break;
    case Stage::Preferences: stage_preferences(cfg); break;
    case Stage::Metrics: stage_metrics(cfg); break;
  }
}

/// Runs every stage in order; stops with StageDependencyMissing at the first
/// stage whose inputs are absent.
inline void run_pipeline(const RunConfig& cfg) {
  for (Stage s : kStages) run_stage(cfg, s);
}

inline std::string strength_tag(double s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%.2f", s);
  return buf;
}

/// Perturbs and emits jobs for every strength, then computes metrics from
/// `<responses_dir>/s<strength>/eval.jsonl`. Strength directories live under
/// `<out>/sweep/`.
inline std::vector<MetricReport> sweep_strength(const RunConfig& base, const std::vector<double>& strengths,
                                                const std::string& responses_dir) {
  if (strengths.empty()) throw Error(ErrorKind::Config, "strength list is empty");
  base.validate();
  std::vector<RunConfig> cfgs;
  for (double s : strengths) {
    RunConfig c = base;
    c.strength = s;
    c.out = (fs::path(base.out) / "sweep" / strength_tag(s)).string();
    c.eval_responses = (fs::path(responses_dir) / strength_tag(s) / "eval.jsonl").string();
    c.validate();
    cfgs.push_back(std::move(c));
  }
  std::vector<std::string> missing;
  for (const auto& c : cfgs) {
    stage_perturb(c);
    stage_jobs(c);
    if (!fs::exists(c.eval_responses)) missing.push_back(c.eval_responses);
  }
  if (!missing.empty()) {
    std::string msg = "evaluation responses missing for the sweep:";
    for (const auto& p : missing) msg += " " + p;
    throw Error(ErrorKind::StageDependencyMissing, msg);
  }
  std::vector<MetricReport> all;
  json table = json::array();
  std::string csv = "strength,task,m_clean,m_pert,rpd_percent,cca\n";
  for (const auto& c : cfgs) {
    for (const auto& r : stage_metrics(c)) {
      table.push_back(to_json(r));
      char line[160];
      std::snprintf(line, sizeof line, "%.2f,%s,%.6f,%.6f,%s,%.6f\n", c.strength, task_group(r.task).c_str(),
                    r.m_clean, r.m_pert,
                    r.rpd_percent ? std::to_string(*r.rpd_percent).c_str() : "", r.cca);
      csv += line;
      all.push_back(r);
    }
  }
  const fs::path dir = fs::path(base.out) / "sweep";
  write_json(dir / "sweep_table.json", {{"reports", table}});
  std::ofstream(dir / "sweep_table.csv", std::ios::binary | std::ios::trunc) << csv;
  return all;
}

}  // namespace rsbench
