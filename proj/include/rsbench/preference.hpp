// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rsbench/dataset.hpp"
#include "rsbench/error.hpp"
#include "rsbench/parallel.hpp"
#include "rsbench/scoring.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

struct Candidate {
  int condition_index = 1;
  int draw_index = 1;
  std::string text;
  QualityScore score;
};

struct CandidatePool {
  std::string sample_id;
  std::string responder_id;
  std::vector<Candidate> candidates;  // sorted by (condition, draw)
  std::vector<int> missing_conditions;
  bool incomplete = false;
};

/// Scores every sampled response of one (sample, responder) against the
/// sample's reference target. `expected_draws` (N) marks pools short of 4 N
/// candidates as incomplete; they are kept either way.
inline CandidatePool assemble_pool(const std::vector<ResponseRecord>& responses,
                                   const SampleRecord& sample, CoordinateConvention convention,
                                   std::optional<int> expected_draws = std::nullopt) {
  if (responses.empty()) throw Error(ErrorKind::EmptyPool, "no responses for sample " + sample.sample_id);
  CandidatePool pool;
  pool.sample_id = sample.sample_id;
  pool.responder_id = responses.front().responder_id;
  std::array<int, 5> per_condition{};
  for (const auto& r : responses) {
    if (r.sample_id != sample.sample_id || r.responder_id != pool.responder_id) {
      throw Error(ErrorKind::Validation, "pool for " + sample.sample_id +
                                             " mixes responses of different samples or responders");
    }
    if (r.greedy) {
      throw Error(ErrorKind::Validation, "greedy output in the candidate pool of " + sample.sample_id);
    }
    validate_response(r);
    pool.candidates.push_back({r.condition_index, r.draw_index, r.text,
                               score_response(r.text, sample.reference_target, sample.task, convention)});
    ++per_condition[static_cast<std::size_t>(r.condition_index)];
  }
  std::sort(pool.candidates.begin(), pool.candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.condition_index, a.draw_index) < std::tie(b.condition_index, b.draw_index);
  });
  for (int j = 1; j <= 4; ++j) {
    const int have = per_condition[static_cast<std::size_t>(j)];
    if (have == 0) pool.missing_conditions.push_back(j);
    if (have == 0 || (expected_draws && have < *expected_draws)) pool.incomplete = true;
  }
  return pool;
}

struct PreferencePair {
  Candidate chosen;
  Candidate rejected;
};

/// Highest- and lowest-scoring candidates. Max ties go to the lowest
/// (condition, draw), min ties to the highest. No pair when the gap is below
/// `min_gap` or the pool holds fewer than two candidates.
inline std::optional<PreferencePair> select_preference(const CandidatePool& pool, double min_gap) {
  if (!(min_gap >= 0.0) || !std::isfinite(min_gap)) {
    throw Error(ErrorKind::Config, "min_gap must be a finite value >= 0");
  }
  if (pool.candidates.size() < 2) return std::nullopt;
  std::vector<const Candidate*> order;
  for (const auto& c : pool.candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
    return std::tie(a->condition_index, a->draw_index) < std::tie(b->condition_index, b->draw_index);
  });
  const Candidate* best = order.front();
  const Candidate* worst = order.front();
  for (const Candidate* c : order) {
    if (c->score.value > best->score.value) best = c;
    if (c->score.value <= worst->score.value) worst = c;
  }
  if (!(best->score.value >= worst->score.value + min_gap)) return std::nullopt;
  return PreferencePair{*best, *worst};
}

struct PreferenceTriplet {
  std::string sample_id;
  std::string responder_id;
  int condition_index = 1;
  std::string image_path;
  std::string query;
  std::string chosen;
  std::string rejected;
  double chosen_score = 0.0;
  double rejected_score = 0.0;
};

/// The pair is attached to the clean (j = 1) and jointly perturbed (j = 4)
/// inputs only.
inline std::vector<PreferenceTriplet> emit_triplets(const ConditionSet& cluster,
                                                    const PreferencePair& pair,
                                                    const std::string& responder_id = {}) {
  std::vector<PreferenceTriplet> out;
  for (int j : {1, 4}) {
    const Condition& c = cluster.at(j);
    out.push_back({cluster.sample_id(), responder_id, j, c.image_path, c.query, pair.chosen.text,
                   pair.rejected.text, pair.chosen.score.value, pair.rejected.score.value});
  }
  return out;
}

struct CorpusSummary {
  std::size_t clusters = 0;
  std::size_t valid = 0;
  std::size_t skipped = 0;
  std::size_t incomplete = 0;
  std::size_t unanswered = 0;  // manifest samples without any response
  std::array<std::size_t, 10> gap_histogram{};
  double min_gap = 0.0;
};

struct Corpus {
  std::vector<PreferenceTriplet> triplets;
  CorpusSummary summary;
};

struct CorpusOptions {
  double min_gap = 0.05;
  std::optional<int> expected_draws = 4;
  std::size_t workers = 0;  // 0: worker_count()
};

/// Groups sampled responses into (sample, responder) clusters, selects one
/// pair per cluster and emits the j = 1 / j = 4 triplets. Clusters run in
/// parallel; output is ordered by (sample_id, responder, condition).
inline Corpus build_corpus(const Manifest& manifest,
                           const std::map<std::string, ConditionSet>& conditions,
                           const std::vector<ResponseRecord>& responses,
                           const CorpusOptions& opts = {}) {
  std::map<std::string, const SampleRecord*> by_id;
  for (const auto& s : manifest.samples) by_id.emplace(s.sample_id, &s);

  std::map<std::pair<std::string, std::string>, std::vector<ResponseRecord>> groups;
  for (const auto& r : responses) {
    if (r.greedy) continue;
    if (!by_id.count(r.sample_id)) {
      throw Error(ErrorKind::Validation, "response for unknown sample " + r.sample_id);
    }
    groups[{r.sample_id, r.responder_id}].push_back(r);
  }
  for (const auto& s : manifest.samples) {
    if (!conditions.count(s.sample_id)) {
      throw Error(ErrorKind::MissingArtifact, "no condition set for sample " + s.sample_id);
    }
  }

  std::vector<const std::pair<const std::pair<std::string, std::string>, std::vector<ResponseRecord>>*> items;
  for (const auto& g : groups) items.push_back(&g);

  struct ClusterOut {
    bool incomplete = false;
    std::optional<PreferencePair> pair;
  };
  auto results = parallel_map<ClusterOut>(
      items.size(),
      [&](std::size_t i) {
        const auto& [key, rs] = *items[i];
        const CandidatePool pool =
            assemble_pool(rs, *by_id.at(key.first), manifest.convention, opts.expected_draws);
        return ClusterOut{pool.incomplete, select_preference(pool, opts.min_gap)};
      },
      opts.workers ? opts.workers : worker_count());

  Corpus corpus;
  corpus.summary.min_gap = opts.min_gap;
  corpus.summary.clusters = items.size();
  std::map<std::string, bool> answered;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& key = items[i]->first;
    answered[key.first] = true;
    if (results[i].incomplete) ++corpus.summary.incomplete;
    if (!results[i].pair) {
      ++corpus.summary.skipped;
      continue;
    }
    ++corpus.summary.valid;
    const auto& p = *results[i].pair;
    const double gap = p.chosen.score.value - p.rejected.score.value;
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, gap) * 10.0));
    ++corpus.summary.gap_histogram[bin];
    for (auto& t : emit_triplets(conditions.at(key.first), p, key.second)) {
      corpus.triplets.push_back(std::move(t));
    }
  }
  for (const auto& s : manifest.samples) {
    if (!answered.count(s.sample_id)) ++corpus.summary.unanswered;
  }
  return corpus;
}

inline json to_json(const PreferenceTriplet& t) {
  return {{"sample_id", t.sample_id},
          {"responder", t.responder_id},
          {"condition_index", t.condition_index},
          {"image", t.image_path},
          {"query", t.query},
          {"chosen", t.chosen},
          {"rejected", t.rejected},
          {"chosen_score", t.chosen_score},
          {"rejected_score", t.rejected_score}};
}

inline json to_json(const CorpusSummary& s) {
  json hist = json::array();
  for (std::size_t b = 0; b < s.gap_histogram.size(); ++b) {
    hist.push_back({{"lo", static_cast<double>(b) / 10.0},
                    {"hi", static_cast<double>(b + 1) / 10.0},
                    {"count", s.gap_histogram[b]}});
  }
  return {{"clusters", s.clusters},     {"valid", s.valid},
          {"skipped", s.skipped},       {"incomplete", s.incomplete},
          {"unanswered", s.unanswered}, {"triplets", 2 * s.valid},
          {"min_gap", s.min_gap},       {"gap_histogram", hist}};
}

inline std::filesystem::path summary_path(const std::filesystem::path& corpus) {
  return std::filesystem::path(corpus.string() + ".summary.json");
}

/// Writes the corpus lines and the `<out>.summary.json` sidecar.
inline void export_corpus(const std::filesystem::path& out, const Corpus& corpus) {
  if (corpus.triplets.empty()) throw Error(ErrorKind::EmptyInput, "no preference triplets to export");
  JsonlWriter w(out);
  for (const auto& t : corpus.triplets) w.write(to_json(t));
  w.close();
  write_json(summary_path(out), to_json(corpus.summary));
}

}  // namespace rsbench
