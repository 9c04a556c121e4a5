// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rsbench/dataset.hpp"
#include "rsbench/error.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

/// One (sample, condition, draw) the external model must answer. Draw 0 is
/// the greedy-decoded output; draws 1..N are samples.
struct InferenceJob {
  std::string sample_id;
  int condition_index = 1;
  int draw_index = 1;
  bool greedy = false;
  std::string image_path;
  std::string query;
};

/// Candidate-pool jobs: all four conditions with N sampled draws each.
inline std::vector<InferenceJob> preference_jobs(const std::map<std::string, ConditionSet>& sets,
                                                 int n) {
  if (n < 1) throw Error(ErrorKind::Config, "N (draws per condition) must be >= 1");
  std::vector<InferenceJob> jobs;
  for (const auto& [id, cs] : sets) {
    for (int j = 1; j <= 4; ++j) {
      for (int d = 1; d <= n; ++d) {
        jobs.push_back({id, j, d, false, cs.at(j).image_path, cs.at(j).query});
      }
    }
  }
  return jobs;
}

/// Evaluation jobs: clean (j = 1) and jointly perturbed (j = 4) inputs, one
/// greedy output plus K samples each.
inline std::vector<InferenceJob> eval_jobs(const std::map<std::string, ConditionSet>& sets, int k) {
  if (k < 1) throw Error(ErrorKind::Config, "K (consistency samples) must be >= 1");
  std::vector<InferenceJob> jobs;
  for (const auto& [id, cs] : sets) {
    for (int j : {1, 4}) {
      for (int d = 0; d <= k; ++d) {
        jobs.push_back({id, j, d, d == 0, cs.at(j).image_path, cs.at(j).query});
      }
    }
  }
  return jobs;
}

inline json to_json(const InferenceJob& j) {
  return {{"sample_id", j.sample_id}, {"condition", j.condition_index}, {"draw", j.draw_index},
          {"greedy", j.greedy},       {"image", j.image_path},         {"query", j.query}};
}

inline void write_jobs(const fs::path& path, const std::vector<InferenceJob>& jobs) {
  JsonlWriter w(path);
  for (const auto& j : jobs) w.write(to_json(j));
  w.close();
}

inline std::vector<InferenceJob> load_jobs(const fs::path& path) {
  std::vector<InferenceJob> out;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    InferenceJob j;
    j.sample_id = detail::req_string(obj, "sample_id", path, line);
    j.condition_index = static_cast<int>(detail::req_int(obj, "condition", path, line));
    j.draw_index = static_cast<int>(detail::req_int(obj, "draw", path, line));
    j.greedy = obj.value("greedy", false);
    j.image_path = detail::req_string(obj, "image", path, line);
    j.query = detail::req_string(obj, "query", path, line);
    out.push_back(std::move(j));
  });
  return out;
}

}  // namespace rsbench
