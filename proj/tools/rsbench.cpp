// SPDX-License-Identifier: Apache-2.0
// rsbench: command-line entry point for the robustness benchmarking toolkit.

#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsbench/config.hpp"
#include "rsbench/dataset.hpp"
#include "rsbench/dpo.hpp"
#include "rsbench/jobs.hpp"
#include "rsbench/pipeline.hpp"
#include "rsbench/preference.hpp"
#include "rsbench/synthetic.hpp"

#ifndef RSBENCH_TEMPLATE_DIR
#define RSBENCH_TEMPLATE_DIR "templates"
#endif

namespace {

using namespace rsbench;

// Options shared by `run` and `sweep`. A value given on the command line
// overrides the config file.
struct RunOptions {
  std::string config;
  RunConfig flags;
  std::string regimes;
  std::string tasks;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
    add(app->add_option("--manifest", flags.manifest, "sample manifest"), [this](RunConfig& c) { c.manifest = flags.manifest; });
    add(app->add_option("--out", flags.out, "run directory"), [this](RunConfig& c) { c.out = flags.out; });
    add(app->add_option("--strength", flags.strength, "image perturbation strength"), [this](RunConfig& c) { c.strength = flags.strength; });
    add(app->add_option("--seed", flags.seed), [this](RunConfig& c) { c.seed = flags.seed; });
    add(app->add_option("--regimes", regimes, "comma-separated text regimes"),
        [this](RunConfig& c) { c.regimes = parse_regime_list({regimes}); });
    add(app->add_option("--homoglyph-rate", flags.homoglyph_rate), [this](RunConfig& c) { c.homoglyph_rate = flags.homoglyph_rate; });
    add(app->add_option("--n", flags.draws, "sampled draws per condition"), [this](RunConfig& c) { c.draws = flags.draws; });
    add(app->add_option("--k", flags.k, "consistency samples"), [this](RunConfig& c) { c.k = flags.k; });
    add(app->add_option("--min-gap", flags.min_gap), [this](RunConfig& c) { c.min_gap = flags.min_gap; });
    add(app->add_option("--tasks", tasks, "comma-separated task groups"),
        [this](RunConfig& c) { c.tasks = detail::split_list({tasks}); });
    add(app->add_option("--templates", flags.templates), [this](RunConfig& c) { c.templates = flags.templates; });
    add(app->add_option("--rewrites", flags.rewrites), [this](RunConfig& c) { c.rewrites = flags.rewrites; });
    add(app->add_option("--responses", flags.responses), [this](RunConfig& c) { c.responses = flags.responses; });
    add(app->add_option("--eval-responses", flags.eval_responses),
        [this](RunConfig& c) { c.eval_responses = flags.eval_responses; });
  }

  void add(CLI::Option* opt, std::function<void(RunConfig&)> apply) { overrides.emplace_back(opt, std::move(apply)); }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(cfg);
    }
    if (cfg.templates.empty()) cfg.templates = RSBENCH_TEMPLATE_DIR;
    cfg.validate();
    return cfg;
  }
};

fs::path conditions_file(const fs::path& p) {
  return fs::is_directory(p) ? p / "conditions.jsonl" : p;
}

void print_report(const MetricReport& r) {
  std::printf("%-22s clean=%.4f pert=%.4f rpd=%s cca=%.4f n=%zu k=%zu\n", task_group(r.task).c_str(), r.m_clean,
              r.m_pert, r.rpd_percent ? (std::to_string(*r.rpd_percent) + "%").c_str() : "n/a", r.cca, r.samples,
              r.k);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsbench: perturbation, scoring, metrics and preference-corpus tooling"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  std::function<void()> action;

  // perturb-images
  auto* pi = app.add_subcommand("perturb-images", "apply the atmospheric perturbation to every manifest image");
  std::string pi_manifest, pi_out;
  double pi_strength = 0.45;
  std::uint64_t pi_seed = 0;
  pi->add_option("--manifest", pi_manifest)->required();
  pi->add_option("--out", pi_out)->required();
  pi->add_option("--strength", pi_strength)->check(CLI::Range(0.0, 1.0));
  pi->add_option("--seed", pi_seed);
  pi->callback([&] {
    action = [&] {
      const Manifest m = load_manifest(pi_manifest);
      const auto files = perturb_images(m, pi_strength, pi_seed, pi_out);
      std::printf("wrote %zu perturbed images to %s\n", files.size(), pi_out.c_str());
    };
  });

  // perturb-text
  auto* pt = app.add_subcommand("perturb-text", "emit rewrite jobs, ingest rewrites, apply homoglyphs");
  RunConfig pt_cfg;
  std::string pt_regimes;
  pt->add_option("--manifest", pt_cfg.manifest)->required();
  pt->add_option("--out", pt_cfg.out)->required();
  pt->add_option("--seed", pt_cfg.seed);
  pt->add_option("--templates", pt_cfg.templates);
  pt->add_option("--rewrites", pt_cfg.rewrites);
  pt->add_option("--regimes", pt_regimes);
  pt->add_option("--homoglyph-rate", pt_cfg.homoglyph_rate);
  pt->callback([&] {
    action = [&] {
      if (!pt_regimes.empty()) pt_cfg.regimes = parse_regime_list({pt_regimes});
      if (pt_cfg.templates.empty()) pt_cfg.templates = RSBENCH_TEMPLATE_DIR;
      pt_cfg.validate();
      Manifest m = load_manifest(pt_cfg.manifest);
      m.samples = resolve_regimes(std::move(m.samples), pt_cfg);
      std::size_t rejected = 0;
      const auto q = perturb_queries(m, pt_cfg, pt_cfg.out, nullptr, &rejected);
      std::printf("wrote %zu perturbed queries (%zu rewrites rejected) to %s\n", q.size(), rejected,
                  pt_cfg.out.c_str());
    };
  });

  // emit-inference-jobs
  auto* ej = app.add_subcommand("emit-inference-jobs", "list every (sample, condition, draw) to answer");
  std::string ej_conditions, ej_out, ej_mode = "preference";
  int ej_n = 4, ej_k = 5;
  ej->add_option("--conditions", ej_conditions, "condition-set index or the directory holding it")->required();
  ej->add_option("--out", ej_out)->required();
  ej->add_option("--mode", ej_mode)->check(CLI::IsMember({"preference", "eval"}));
  ej->add_option("--n", ej_n, "draws per condition (preference mode)");
  ej->add_option("--k", ej_k, "sampled outputs (eval mode)");
  ej->callback([&] {
    action = [&] {
      const fs::path cpath = conditions_file(ej_conditions);
      if (!fs::exists(cpath)) throw Error(ErrorKind::StageDependencyMissing, "no condition-set index at " + cpath.string());
      const auto sets = load_condition_sets(cpath);
      const auto jobs = ej_mode == "eval" ? eval_jobs(sets, ej_k) : preference_jobs(sets, ej_n);
      write_jobs(ej_out, jobs);
      std::printf("wrote %zu jobs to %s\n", jobs.size(), ej_out.c_str());
    };
  });

  // score-responses
  auto* sr = app.add_subcommand("score-responses", "score responses against the reference targets");
  std::string sr_manifest, sr_responses, sr_out;
  sr->add_option("--manifest", sr_manifest)->required();
  sr->add_option("--responses", sr_responses)->required();
  sr->add_option("--out", sr_out)->required();
  sr->callback([&] {
    action = [&] {
      const Manifest m = load_manifest(sr_manifest);
      if (!fs::exists(sr_responses)) throw Error(ErrorKind::StageDependencyMissing, "no response file " + sr_responses);
      const auto scored = score_responses(m, load_responses(sr_responses));
      write_scores(sr_out, scored);
      std::printf("scored %zu responses into %s\n", scored.size(), sr_out.c_str());
    };
  });

  // build-preferences
  auto* bp = app.add_subcommand("build-preferences", "build the preference corpus from scored candidate pools");
  std::string bp_manifest, bp_responses, bp_conditions, bp_out;
  CorpusOptions bp_opts;
  int bp_n = 4;
  bp->add_option("--manifest", bp_manifest)->required();
  bp->add_option("--responses", bp_responses)->required();
  bp->add_option("--conditions", bp_conditions, "condition-set index or the directory holding it")->required();
  bp->add_option("--out", bp_out)->required();
  bp->add_option("--min-gap", bp_opts.min_gap)->check(CLI::NonNegativeNumber);
  bp->add_option("--n", bp_n, "expected draws per condition");
  bp->callback([&] {
    action = [&] {
      const Manifest m = load_manifest(bp_manifest);
      const fs::path cpath = conditions_file(bp_conditions);
      if (!fs::exists(cpath)) throw Error(ErrorKind::StageDependencyMissing, "no condition-set index at " + cpath.string());
      if (!fs::exists(bp_responses)) throw Error(ErrorKind::StageDependencyMissing, "no response file " + bp_responses);
      if (bp_n < 1) throw Error(ErrorKind::Config, "--n must be >= 1");
      bp_opts.expected_draws = bp_n;
      const Corpus corpus = build_corpus(m, load_condition_sets(cpath), load_responses(bp_responses), bp_opts);
      export_corpus(bp_out, corpus);
      std::printf("clusters=%zu valid=%zu skipped=%zu incomplete=%zu triplets=%zu\n", corpus.summary.clusters,
                  corpus.summary.valid, corpus.summary.skipped, corpus.summary.incomplete, corpus.triplets.size());
    };
  });

  // compute-metrics
  auto* cm = app.add_subcommand("compute-metrics", "task metric, RPD and CCA for one task group");
  std::string cm_task, cm_clean, cm_pert, cm_manifest, cm_out;
  int cm_k = 5;
  std::optional<double> cm_strength;
  cm->add_option("--task", cm_task)->required()->check(CLI::IsMember(
      std::vector<std::string>(kTaskGroups.begin(), kTaskGroups.end())));
  cm->add_option("--clean", cm_clean, "clean-condition responses (greedy draw 0 + draws 1..K)")->required();
  cm->add_option("--pert", cm_pert, "perturbed-condition responses")->required();
  cm->add_option("--manifest", cm_manifest, "manifest holding the reference targets")->required();
  cm->add_option("--samples", cm_k, "K");
  cm->add_option("--strength", cm_strength);
  cm->add_option("--out", cm_out)->required();
  cm->callback([&] {
    action = [&] {
      const Manifest m = load_manifest(cm_manifest);
      MetricReport r = evaluate_run(build_eval_run(m, cm_task, load_responses(cm_clean), load_responses(cm_pert), cm_k));
      r.strength = cm_strength;
      write_json(cm_out, to_json(r));
      print_report(r);
    };
  });

  // dpo-check
  auto* dc = app.add_subcommand("dpo-check", "evaluate the DPO loss and verify its gradients");
  std::string dc_instances;
  dpo::Config dc_cfg;
  double dc_h = 1e-5, dc_tol = 1e-5;
  dc->add_option("--instances", dc_instances)->required();
  dc->add_option("--beta", dc_cfg.beta);
  dc->add_option("--rpo-alpha", dc_cfg.rpo_alpha);
  dc->add_option("--step", dc_h, "finite-difference step h");
  dc->add_option("--tol", dc_tol, "relative tolerance");
  bool dc_failed = false;
  dc->callback([&] {
    action = [&] {
      dpo::validate(dc_cfg);
      std::vector<dpo::Instance> batch;
      for_each_jsonl(dc_instances, [&](const json& o, std::size_t line) {
        dpo::Instance inst;
        try {
          inst = {o.at("logp_policy_w").get<double>(), o.at("logp_policy_l").get<double>(),
                  o.at("logp_ref_w").get<double>(), o.at("logp_ref_l").get<double>()};
        } catch (const json::exception& e) {
          throw Error(ErrorKind::Parse, dc_instances + ":" + std::to_string(line) + ": " + e.what());
        }
        dpo::validate(inst);
        batch.push_back(inst);
      });
      std::size_t passed = 0;
      std::printf("%5s %12s %12s %12s %12s %10s %10s %s\n", "#", "delta", "loss", "grad_w", "grad_l", "relerr_w",
                  "relerr_l", "fd");
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto r = dpo::loss(batch[i], dc_cfg);
        const auto c = dpo::check_gradients(batch[i], dc_cfg, dc_h, dc_tol);
        passed += c.passed;
        std::printf("%5zu %12.6g %12.6g %12.6g %12.6g %10.2e %10.2e %s\n", i, r.delta, r.total, r.grad_policy_w,
                    r.grad_policy_l, c.rel_err_w, c.rel_err_l, c.passed ? "pass" : "FAIL");
      }
      std::printf("batch loss %.10g over %zu instances\n", dpo::batch_loss(batch, dc_cfg), batch.size());
      std::printf("finite-difference check: %zu/%zu passed (h=%g, tol=%g): %s\n", passed, batch.size(), dc_h, dc_tol,
                  passed == batch.size() ? "PASS" : "FAIL");
      dc_failed = passed != batch.size();
    };
  });

  // run
  auto* run = app.add_subcommand("run", "run one pipeline stage, or all of them");
  RunOptions run_opts;
  run_opts.attach(run);
  std::string run_stage_name = "all";
  run->add_option("--stage", run_stage_name)->check(CLI::IsMember({"all", "perturb", "jobs", "score", "preferences", "metrics"}));
  run->callback([&] {
    action = [&] {
      const RunConfig cfg = run_opts.resolve();
      if (run_stage_name == "all") {
        run_pipeline(cfg);
      } else {
        run_stage(cfg, *parse_stage(run_stage_name));
      }
      std::printf("stage %s done; run log at %s\n", run_stage_name.c_str(),
                  (fs::path(cfg.out) / "run_log.json").c_str());
    };
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "metric reports across image strengths");
  RunOptions sw_opts;
  sw_opts.attach(sw);
  std::vector<double> sw_strengths;
  std::string sw_responses;
  sw->add_option("--strengths", sw_strengths)->delimiter(',');
  sw->add_option("--responses-dir", sw_responses, "holds s<strength>/eval.jsonl per level")->required();
  sw->callback([&] {
    action = [&] {
      const RunConfig cfg = sw_opts.resolve();
      for (const auto& r : sweep_strength(cfg, sw_strengths, sw_responses)) {
        std::printf("s=%.2f ", *r.strength);
        print_report(r);
      }
    };
  });

  // make-synthetic
  auto* ms = app.add_subcommand("make-synthetic", "generate the synthetic mini-dataset");
  std::string ms_out;
  synthetic::DatasetOptions ms_opts;
  ms->add_option("--out", ms_out)->required();
  ms->add_option("--samples", ms_opts.samples);
  ms->add_option("--seed", ms_opts.seed);
  ms->callback([&] {
    action = [&] {
      const Manifest m = synthetic::make_dataset(ms_out, ms_opts);
      std::printf("wrote %zu samples to %s\n", m.samples.size(), ms_out.c_str());
    };
  });

  // script-responses
  auto* sc = app.add_subcommand("script-responses", "answer a job file with the scripted responder");
  std::string sc_manifest, sc_jobs, sc_out;
  synthetic::ResponderOptions sc_opts;
  sc->add_option("--manifest", sc_manifest)->required();
  sc->add_option("--jobs", sc_jobs)->required();
  sc->add_option("--out", sc_out)->required();
  sc->add_option("--strength", sc_opts.strength, "strength the conditions were rendered at");
  sc->add_option("--seed", sc_opts.seed);
  sc->add_option("--responder", sc_opts.responder_id);
  sc->callback([&] {
    action = [&] {
      const Manifest m = load_manifest(sc_manifest);
      const auto rs = synthetic::script_responses(load_jobs(sc_jobs), m, sc_opts);
      write_responses(sc_out, rs);
      std::printf("wrote %zu responses to %s\n", rs.size(), sc_out.c_str());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::Config);
  } catch (const rsbench::Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  }

  try {
    if (action) action();
  } catch (const rsbench::Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  }
  return dc_failed ? exit_code(ErrorKind::Validation) : 0;
}
