#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lsid/em.hpp"
#include "lsid/experiment.hpp"

int main(int argc, char** argv) {
  // The config file must be read before option binding so that flags given on
  // the command line override file values; prescan for it.
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" || arg == "-c") config_path = argv[i + 1];
  }

  lsid::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = lsid::load_experiment_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Identification of linear continuous-time models from event-sampled outputs"};
  app.require_subcommand(1);

  app.add_option("-c,--config", config_path, "JSON config file; flags override its values");
  app.add_option("--model", cfg.model_path, "true-model JSON (simulate, montecarlo, bode)");
  app.add_option("--init", cfg.init_path, "initial-model JSON for identification");
  app.add_option("--input-csv", cfg.input_csv, "input samples CSV (header 'u'); replaces the Gaussian input");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--tau", cfg.tau, "event threshold");
  app.add_option("--delta", cfg.delta, "grid period");
  app.add_option("-N,--samples", cfg.N, "grid steps per run");
  app.add_option("--sigma", cfg.sigma, "input std for the default iid Gaussian input");
  app.add_option("--perturb", cfg.perturb, "per-run init perturbation fraction (montecarlo)");
  app.add_option("--runs", cfg.runs, "Monte Carlo run count");
  app.add_option("--jobs", cfg.jobs, "parallel workers for montecarlo (0 = all cores)");
  app.add_option("--seed", cfg.em.seed, "base seed; run r uses seed+r");
  app.add_option("--eps", cfg.em.eps, "output regularization std (<0: 0.01*tau)");
  app.add_option("--max-iters", cfg.em.max_iters, "EM iteration cap");
  app.add_option("--rel-tol", cfg.em.rel_tol, "relative invariant-parameter change to stop at");
  app.add_option("--particles", cfg.em.particles, "particle count M");
  app.add_option("--ess-threshold", cfg.em.ess_threshold, "resample when ESS < threshold*M");
  app.add_option("--baseline-r", cfg.em.baseline_r, "KS observation variance (<0: tau^2/3)");
  app.add_flag("--estimate-cd", cfg.em.estimate_cd, "re-estimate C and D instead of keeping the init's");
  std::string form_str;
  app.add_option("--form", form_str, "M-step form: shift or incremental");
  app.add_option("--omega-min", cfg.grid.omega_min, "frequency grid lower bound (rad/s)");
  app.add_option("--omega-max", cfg.grid.omega_max, "frequency grid upper bound (rad/s)");
  app.add_option("--omega-points", cfg.grid.points, "frequency grid size");

  auto* sim = app.add_subcommand("simulate", "simulate one experiment -> trace.csv, events.csv");
  sim->fallthrough();

  auto* ident = app.add_subcommand("identify", "run EM on a trace -> estimate.json, em_trace.json");
  ident->fallthrough();
  std::string trace_path, method = "ps";
  ident->add_option("trace", trace_path, "trace CSV from simulate")->required();
  ident->add_option("--method", method, "ps (particle smoother) or ks (Kalman baseline)");

  auto* mc = app.add_subcommand("montecarlo", "paired PS/KS study -> aggregate.csv, summary.csv");
  mc->fallthrough();

  auto* bode = app.add_subcommand("bode", "frequency response of a model -> bode.csv");
  bode->fallthrough();
  std::string bode_model;
  bode->add_option("model", bode_model, "model JSON (default: --model)");

  auto* cmp = app.add_subcommand("compare", "invariant parameters and gains of two models -> compare.csv");
  cmp->fallthrough();
  std::string model_a, model_b;
  cmp->add_option("a", model_a, "first model JSON")->required();
  cmp->add_option("b", model_b, "second model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (!form_str.empty()) cfg.em.form = lsid::parse_form(form_str);
    if (app.got_subcommand(sim)) lsid::cmd_simulate(cfg);
    else if (app.got_subcommand(ident)) lsid::cmd_identify(cfg, trace_path, method);
    else if (app.got_subcommand(mc)) lsid::cmd_montecarlo(cfg);
    else if (app.got_subcommand(bode)) lsid::cmd_bode(cfg, bode_model);
    else if (app.got_subcommand(cmp)) lsid::cmd_compare(cfg, model_a, model_b);
    return 0;
  } catch (const lsid::EMError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
