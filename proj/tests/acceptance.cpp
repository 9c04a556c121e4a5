// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "golden.hpp"
#include "rsbench/config.hpp"
#include "rsbench/dpo.hpp"
#include "rsbench/metrics.hpp"
#include "rsbench/perturb.hpp"
#include "rsbench/pipeline.hpp"
#include "rsbench/preference.hpp"
#include "rsbench/synthetic.hpp"
#include "rsbench/text_perturb.hpp"

namespace {

using namespace rsbench;
using namespace rsbench::testing;

const fs::path kSource = RSBENCH_SOURCE_DIR;
const fs::path kSynthetic = kSource / "data" / "synthetic";

// exp(-0.3) and ln 2 to 30 significant digits
constexpr double kExpMinus03 = 0.740818220681717874291608235945;
constexpr double kLn2 = 0.693147180559945309417232121458;

// Collects the first failure of a check.
struct Probe {
  std::string failure;
  void expect(bool ok, const std::string& what) {
    if (!ok && failure.empty()) failure = what;
  }
};

int failures = 0;

void criterion(const char* name, double limit_s, const std::function<void(Probe&)>& body) {
  Probe p;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(p);
  } catch (const std::exception& e) {
    p.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream why;
  if (!p.failure.empty()) why << p.failure;
  if (secs >= limit_s) why << (p.failure.empty() ? "" : "; ") << "over time limit " << limit_s << " s";
  const bool ok = why.str().empty();
  failures += !ok;
  std::printf("%s %-28s %8.3f s%s%s\n", ok ? "PASS" : "FAIL", name, secs, ok ? "" : "  ", why.str().c_str());
  std::fflush(stdout);
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::string random_utf8(std::mt19937_64& rng) {
  static const std::u32string pool =
      U"acexopyABCEHKMOPTXrbdfgzZ0123456789 .,?!-асеéß中文\U0001F600\U0001F30D";
  std::u32string s;
  const std::size_t n = rng() % 80;
  for (std::size_t i = 0; i < n; ++i) s += pool[rng() % pool.size()];
  return utf8::encode(s);
}

RunConfig synthetic_config(const fs::path& out) {
  RunConfig cfg = load_run_config(kSynthetic / "run.toml");
  cfg.out = out.string();
  cfg.templates = (kSource / "templates").string();
  return cfg;
}

void script(const fs::path& jobs, const fs::path& out, double strength) {
  synthetic::ResponderOptions o;
  o.strength = strength;
  write_responses(out, synthetic::script_responses(load_jobs(jobs), load_manifest(kSynthetic / "manifest.jsonl"), o));
}

bool has_keys(const json& o, std::initializer_list<const char*> keys) {
  if (!o.is_object()) return false;
  for (const char* k : keys) {
    if (!o.contains(k)) return false;
  }
  return true;
}

void rpd_golden(Probe& p) {
  for (const auto& rows : {std::vector<RpdRow>(kRpdGolden.begin(), kRpdGolden.end()),
                           std::vector<RpdRow>(kRpdGoldenExtra.begin(), kRpdGoldenExtra.end())}) {
    for (const auto& r : rows) {
      const double got = round2(rpd(r.clean, r.pert));
      std::ostringstream what;
      what << "(" << r.clean << ", " << r.pert << ") gave " << got << ", printed " << r.printed;
      p.expect(std::abs(got - r.printed) <= 0.01 + 1e-9, what.str());
    }
  }
}

void hungarian_oracle(Probe& p) {
  std::mt19937_64 rng(2024);
  auto sim = [](const BoundingBox& a, const BoundingBox& b) { return iou(a, b); };
  for (int trial = 0; trial < 500; ++trial) {
    const BoxSet g = random_boxes(rng, rng() % 7, 40.0);
    const BoxSet q = random_boxes(rng, rng() % 7, 40.0);
    const double got = matched_iou_total(g, q, hungarian_match(g, q));
    const double want = brute_force_best(g, q, sim);
    std::ostringstream what;
    what << "trial " << trial << ": " << got << " vs brute force " << want;
    p.expect(got == want, what.str());
  }
}

void count_formula(Probe& p) {
  p.expect(score_count(10, 10).value == 1.0, "(10,10)");
  p.expect(score_count(16, 10).value == 0.0, "(16,10)");
  p.expect(score_count(3, 0).value == 0.0, "(3,0)");
  p.expect(std::abs(score_count(11, 10).value - kExpMinus03) <= 1e-9, "(11,10)");
}

void dpo_numerics(Probe& p) {
  const dpo::Config cfg{0.1, 0.0};
  p.expect(std::abs(dpo::loss({-5, -7, -5, -7}, cfg).total - kLn2) <= 1e-12, "zero logit loss");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-200.0, 0.0), shift(-50.0, 50.0);
  for (const dpo::Config c : {cfg, dpo::Config{}}) {
    for (int i = 0; i < 1000; ++i) {
      const dpo::Instance x{u(rng), u(rng), u(rng), u(rng)};
      p.expect(dpo::check_gradients(x, c, 1e-5, 1e-5).passed, "finite differences, instance " + std::to_string(i));
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const dpo::Instance x{u(rng), u(rng), u(rng), u(rng)};
    const double s = std::ldexp(std::round(shift(rng) * 64), -6);
    const dpo::Instance y{x.logp_policy_w + s, x.logp_policy_l + s, x.logp_ref_w + s, x.logp_ref_l + s};
    p.expect(std::abs(dpo::loss(y, cfg).total - dpo::loss(x, cfg).total) <= 1e-12, "shift invariance");
  }
}

void perturbation(Probe& p) {
  auto at = [](double s, std::uint64_t seed) {
    PerturbParams pp;
    pp.strength = s;
    pp.seed = seed;
    return pp;
  };
  for (Scene sc : {Scene::Farmland, Scene::Urban, Scene::Coast}) {
    const RgbImage img = scene_image(sc);
    p.expect(perturb_image(img, at(0.0, 1)).values() == img.values(), "s=0 identity");
    p.expect(perturb_image(img, at(0.6, 9)).values() == perturb_image(img, at(0.6, 9)).values(), "determinism");
    ChannelStats prev = channel_stats(img);
    for (int i = 1; i <= 10; ++i) {
      const ChannelStats cur = channel_stats(perturb_image(img, at(i / 10.0, 3)));
      for (int c = 0; c < 3; ++c) {
        p.expect(cur.mean[c] >= prev.mean[c] - 1e-9, "mean brightness dropped at s=" + std::to_string(i / 10.0));
        p.expect(cur.stddev[c] <= prev.stddev[c] + 1e-9, "channel std rose at s=" + std::to_string(i / 10.0));
      }
      prev = cur;
    }
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BandPower bp = band_power(cloud_mask(64, 64, at(0.5, seed)).values, 64, 64);
    p.expect(bp.low > 10.0 * bp.high, "cloud mask not low-frequency, seed " + std::to_string(seed));
  }
}

void homoglyph(Probe& p) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const std::string s = homoglyph_restore(random_utf8(rng));
    const std::string out = homoglyph_perturb(s, rate(rng), rng());
    p.expect(homoglyph_restore(out) == s, "round trip on string " + std::to_string(i));
    p.expect(homoglyph_perturb(s, 0.0, rng()) == s, "rate 0 changed string " + std::to_string(i));
    const auto in = utf8::decode(s), full = utf8::decode(homoglyph_perturb(s, 1.0, rng()));
    bool all = in.size() == full.size();
    for (std::size_t k = 0; all && k < in.size(); ++k) {
      const auto h = homoglyph_of(in[k]);
      all = full[k] == (h ? *h : in[k]);
    }
    p.expect(all, "rate 1 left a mappable character on string " + std::to_string(i));
  }
}

void preference_corpus(Probe& p) {
  TempDir dir("acceptance-pref");
  RunConfig cfg = synthetic_config(dir.path());
  stage_perturb(cfg);
  stage_jobs(cfg);
  script(dir / "jobs" / "preference_jobs.jsonl", dir / "responses.jsonl", cfg.strength);
  const Manifest m = load_manifest(cfg.manifest);
  const auto sets = load_condition_sets(conditions_path(cfg));
  const auto rs = load_responses(dir / "responses.jsonl");
  p.expect(rs.size() == 20u * 4u * 4u, "scripted responder did not answer 4 conditions x 4 draws");

  std::string first;
  for (int run = 0; run < 2; ++run) {
    CorpusOptions opts;
    opts.min_gap = cfg.min_gap;
    opts.expected_draws = 4;
    const Corpus c = build_corpus(m, sets, rs, opts);
    p.expect(c.summary.valid > 0, "no valid clusters");
    p.expect(c.triplets.size() == 2 * c.summary.valid, "triplet count is not 2 per valid cluster");
    p.expect(c.summary.valid + c.summary.skipped == c.summary.clusters, "cluster accounting");
    for (const auto& t : c.triplets) {
      p.expect(t.chosen_score >= t.rejected_score + opts.min_gap, "gap below min_gap for " + t.sample_id);
      p.expect(t.condition_index == 1 || t.condition_index == 4, "condition index outside {1,4}");
    }
    const fs::path out = dir / ("corpus" + std::to_string(run) + ".jsonl");
    export_corpus(out, c);
    const std::string bytes = read_text(out) + read_text(summary_path(out));
    if (run == 0) first = bytes;
    else p.expect(bytes == first, "repeat run not byte-identical");
  }
}

void cca_sanity(Probe& p) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> vocab = {"beach", "Beach.", "harbor", "forest", "yes", "no"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6, k = 1 + rng() % 5;
    std::vector<OutputGroup> tc(n), tp(n);
    std::vector<BoxGroup> bc(n), bp(n), same(n);
    for (std::size_t i = 0; i < n; ++i) {
      const BoxSet fixed = random_boxes(rng, 1 + rng() % 3, 30.0);
      for (std::size_t m = 0; m < k; ++m) {
        tc[i].push_back(vocab[rng() % vocab.size()]);
        tp[i].push_back(vocab[rng() % vocab.size()]);
        bc[i].push_back(random_boxes(rng, rng() % 4, 30.0));
        bp[i].push_back(random_boxes(rng, rng() % 4, 30.0));
        same[i].push_back(fixed);
      }
    }
    p.expect(cca_text(tc, tp) == cca_text(tp, tc), "CCA-text not symmetric");
    p.expect(std::abs(cca_vg(bc, bp) - cca_vg(bp, bc)) <= 1e-12, "CCA-vg not symmetric");
    p.expect(cca_text(tc, tc) == 1.0, "identical text groups");
    p.expect(std::abs(cca_vg(same, same) - 1.0) <= 1e-12, "identical box groups");
  }
  const BoundingBox a = *BoundingBox::make(0, 0, 10, 10), b = *BoundingBox::make(50, 50, 60, 60);
  p.expect(cca_text({{"beach", "beach"}, {"yes"}}, {{"harbor", "harbor"}, {"no"}}) == 0.0, "disagreeing text groups");
  p.expect(cca_vg({{{a}, {a}}}, {{{b}, {b}}}) == 0.0, "disagreeing box groups");
}

void end_to_end(Probe& p) {
  TempDir dir("acceptance-e2e");
  RunConfig cfg = synthetic_config(dir.path());
  stage_perturb(cfg);
  stage_jobs(cfg);
  cfg.responses = (dir / "responses.jsonl").string();
  cfg.eval_responses = (dir / "eval_responses.jsonl").string();
  script(dir / "jobs" / "preference_jobs.jsonl", cfg.responses, cfg.strength);
  script(dir / "jobs" / "eval_jobs.jsonl", cfg.eval_responses, cfg.strength);
  stage_score(cfg);
  stage_preferences(cfg);
  stage_metrics(cfg);

  // perturb
  const auto sets = load_condition_sets(conditions_path(cfg));
  p.expect(sets.size() == 20, "condition sets");
  for (const auto& [id, cs] : sets) {
    p.expect(probe_png(cs.at(4).image_path).width > 0, "perturbed image " + id);
  }
  for_each_jsonl(dir / "perturb" / "perturbed_queries.jsonl", [&](const json& o, std::size_t) {
    p.expect(has_keys(o, {"sample_id", "regime", "source", "query"}), "perturbed query record");
  });
  // jobs and responses load through the validating readers
  p.expect(load_jobs(dir / "jobs" / "preference_jobs.jsonl").size() == 20u * 4u * 4u, "preference jobs");
  p.expect(load_jobs(dir / "jobs" / "eval_jobs.jsonl").size() == 20u * 2u * 6u, "eval jobs");
  load_responses(cfg.responses);
  load_responses(cfg.eval_responses);
  // score
  std::size_t scores = 0;
  for_each_jsonl(dir / "score" / "scores.jsonl", [&](const json& o, std::size_t) {
    ++scores;
    p.expect(has_keys(o, {"sample_id", "condition", "draw", "responder", "score"}), "score record");
    const double v = o["score"];
    p.expect(v >= 0.0 && v <= 1.0, "score out of range");
  });
  p.expect(scores == 320, "score count");
  // preferences
  for_each_jsonl(dir / "preferences" / "dpo_corpus.jsonl", [&](const json& o, std::size_t) {
    p.expect(has_keys(o, {"sample_id", "responder", "condition_index", "image", "query", "chosen", "rejected",
                          "chosen_score", "rejected_score"}),
             "triplet record");
  });
  p.expect(has_keys(read_json(dir / "preferences" / "dpo_corpus.jsonl.summary.json"),
                    {"clusters", "valid", "skipped", "incomplete", "unanswered", "triplets", "min_gap",
                     "gap_histogram"}),
           "corpus summary");
  // metrics
  const json report = read_json(dir / "metrics" / "report.json");
  p.expect(report.contains("reports") && !report["reports"].empty(), "metric reports");
  for (const auto& r : report["reports"]) {
    p.expect(has_keys(r, {"task", "answer_structure", "m_clean", "m_pert", "rpd_percent", "cca", "samples", "k",
                          "strength"}),
             "metric report");
  }
  // run log
  const json log = read_json(dir / "run_log.json");
  p.expect(has_keys(log, {"tool", "version", "stages"}), "run log");
  for (Stage s : kStages) {
    const json& st = log["stages"][std::string(to_string(s))];
    p.expect(has_keys(st, {"config_sha256", "inputs", "outputs"}), "run log stage " + std::string(to_string(s)));
  }
}

}  // namespace

int main() {
  criterion("rpd-golden-fixtures", 1.0, rpd_golden);
  criterion("hungarian-oracle", 10.0, hungarian_oracle);
  criterion("count-score-formula", 1.0, count_formula);
  criterion("dpo-numerics", 5.0, dpo_numerics);
  criterion("perturbation-properties", 30.0, perturbation);
  criterion("homoglyph-round-trip", 2.0, homoglyph);
  criterion("preference-corpus", 30.0, preference_corpus);
  criterion("cca-sanity", 5.0, cca_sanity);
  criterion("end-to-end", 60.0, end_to_end);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
