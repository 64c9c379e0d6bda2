#include "lsid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "lsid/gaussian.hpp"

namespace lsid {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Sub-stream salts; arbitrary but fixed so every artifact is reproducible.
constexpr std::uint64_t kSaltInput = 0x75;
constexpr std::uint64_t kSaltPath = 0x5d;
constexpr std::uint64_t kSaltInit = 0x1e;
constexpr std::uint64_t kSaltEm = 0xe3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vector read_input_csv(const std::string& path, int N) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || (line != "u" && line != "u\r"))
    throw std::runtime_error(path + ": expected single-column CSV with header 'u'");
  std::vector<double> vals;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      vals.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (static_cast<int>(vals.size()) < N)
    throw std::runtime_error(path + ": has " + std::to_string(vals.size()) +
                             " input samples, need " + std::to_string(N));
  Vector u(N);
  for (int k = 0; k < N; ++k) u(k) = vals[k];
  return u;
}

std::string run_dir(const ExperimentConfig& cfg, int r) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run_%03d", r);
  return cfg.out_dir + "/" + buf;
}

double resolve_baseline_r(const ExperimentConfig& cfg) {
  // Variance of noise uniform over the hysteresis band, the usual stand-in for
  // quantization error.
  return cfg.em.baseline_r > 0.0 ? cfg.em.baseline_r : cfg.tau * cfg.tau / 3.0;
}

std::vector<std::string> parameter_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) {
    names.push_back("pole" + std::to_string(i) + "_re");
    names.push_back("pole" + std::to_string(i) + "_im");
  }
  names.push_back("cb");
  names.push_back("d");
  names.push_back("cqc");
  return names;
}

std::string sanitize_status(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }

  ExperimentConfig cfg;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "model") cfg.model_path = val.get<std::string>();
      else if (key == "init") cfg.init_path = val.get<std::string>();
      else if (key == "input_csv") cfg.input_csv = val.get<std::string>();
      else if (key == "out") cfg.out_dir = val.get<std::string>();
      else if (key == "tau") cfg.tau = val.get<double>();
      else if (key == "delta") cfg.delta = val.get<double>();
      else if (key == "N") cfg.N = val.get<int>();
      else if (key == "sigma") cfg.sigma = val.get<double>();
      else if (key == "perturb") cfg.perturb = val.get<double>();
      else if (key == "runs") cfg.runs = val.get<int>();
      else if (key == "jobs") cfg.jobs = val.get<int>();
      else if (key == "omega_min") cfg.grid.omega_min = val.get<double>();
      else if (key == "omega_max") cfg.grid.omega_max = val.get<double>();
      else if (key == "omega_points") cfg.grid.points = val.get<int>();
      else if (key == "eps") cfg.em.eps = val.get<double>();
      else if (key == "max_iters") cfg.em.max_iters = val.get<int>();
      else if (key == "rel_tol") cfg.em.rel_tol = val.get<double>();
      else if (key == "particles") cfg.em.particles = val.get<int>();
      else if (key == "ess_threshold") cfg.em.ess_threshold = val.get<double>();
      else if (key == "form") cfg.em.form = parse_form(val.get<std::string>());
      else if (key == "seed") cfg.em.seed = val.get<std::uint64_t>();
      else if (key == "baseline_r") cfg.em.baseline_r = val.get<double>();
      else if (key == "estimate_cd") cfg.em.estimate_cd = val.get<bool>();
      else throw std::runtime_error(path + ": unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ": key '" + key + "': " + e.what());
    }
  }

  if (cfg.runs < 1) throw std::runtime_error(path + ": runs must be >= 1");
  if (cfg.N < 2) throw std::runtime_error(path + ": N must be >= 2");
  if (!(cfg.tau > 0.0)) throw std::runtime_error(path + ": tau must be > 0");
  if (!(cfg.delta > 0.0)) throw std::runtime_error(path + ": delta must be > 0");
  if (!(cfg.grid.omega_min > 0.0 && cfg.grid.omega_max > cfg.grid.omega_min))
    throw std::runtime_error(path + ": frequency grid bounds must be positive and increasing");
  if (cfg.grid.points < 1) throw std::runtime_error(path + ": omega_points must be >= 1");
  return cfg;
}

ContinuousModel perturb_model(const ContinuousModel& m, double frac, std::uint64_t seed) {
  if (!(frac >= 0.0)) throw std::invalid_argument("perturb_model: frac must be >= 0");
  Rng rng(seed);
  auto jitter = [&](double x) { return x * (1.0 + frac * (2.0 * rng.uniform() - 1.0)); };

  ContinuousModel out = m;
  const int n = m.order();
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < n; ++c) out.A(i, c) = jitter(m.A(i, c));
  for (int i = 0; i < n; ++i) out.B(i, 0) = jitter(m.B(i, 0));
  out.D = jitter(m.D);
  // Perturb the lower triangle and mirror so Q stays symmetric, then clamp the
  // spectrum at zero so it stays a covariance.
  for (int i = 0; i < n; ++i)
    for (int c = 0; c <= i; ++c) {
      out.Q(i, c) = jitter(m.Q(i, c));
      out.Q(c, i) = out.Q(i, c);
    }
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.Q);
  out.Q = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
          es.eigenvectors().transpose();
  return validate(out);
}

SimOutput simulate_experiment(const ContinuousModel& truth, const ExperimentConfig& cfg,
                              std::uint64_t seed) {
  SimOutput out;
  if (!cfg.input_csv.empty()) {
    out.u = read_input_csv(cfg.input_csv, cfg.N);
  } else {
    Rng rng(mix_seed(seed, kSaltInput));
    out.u.resize(cfg.N);
    for (int k = 0; k < cfg.N; ++k) out.u(k) = cfg.sigma * rng.normal();
  }
  out.path = simulate_sde(truth, out.u, cfg.delta, mix_seed(seed, kSaltPath));
  out.events = lebesgue_sample(out.path.z, cfg.tau, cfg.delta);
  out.trace = build_trace(out.events, cfg.N, cfg.delta);
  return out;
}

MonteCarloOutput run_montecarlo(const ExperimentConfig& cfg) {
  ContinuousModel truth = load_model(cfg.model_path);
  ContinuousModel init0 = cfg.init_path.empty() ? truth : load_model(cfg.init_path);
  if (init0.order() != truth.order())
    throw std::runtime_error("montecarlo: init and true model orders differ");
  fs::create_directories(cfg.out_dir);

  MonteCarloOutput out;
  out.parameter_names = parameter_names(truth.order());
  out.runs.resize(cfg.runs);

  auto do_run = [&](int r) {
    RunResult res;
    res.run = r;
    auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t rs = cfg.em.seed + static_cast<std::uint64_t>(r);
    try {
      SimOutput sim = simulate_experiment(truth, cfg, rs);
      ContinuousModel init = perturb_model(init0, cfg.perturb, mix_seed(rs, kSaltInit));

      const std::string dir = run_dir(cfg, r);
      fs::create_directories(dir);
      write_trace_csv(dir + "/trace.csv", sim.u, sim.path.z, sim.trace);
      write_events_csv(dir + "/events.csv", sim.events);
      save_model(init, dir + "/init.json");

      EMConfig ps_cfg = cfg.em;
      ps_cfg.seed = mix_seed(rs, kSaltEm);
      auto [ps_est, ps_trace] = em_identify(sim.u, sim.trace, init, ps_cfg);
      save_model(ps_est, dir + "/ps_model.json");
      save_em_trace(ps_trace, dir + "/ps_trace.json");

      EMConfig ks_cfg = cfg.em;
      ks_cfg.baseline_r = resolve_baseline_r(cfg);
      auto [ks_est, ks_trace] = ks_em_identify(sim.u, sim.trace.y, init, ks_cfg, cfg.delta);
      save_model(ks_est, dir + "/ks_model.json");
      save_em_trace(ks_trace, dir + "/ks_trace.json");

      res.ps = invariant_parameters(ps_est);
      res.ks = invariant_parameters(ks_est);
      res.ps_iterations = ps_trace.iteration_count();
      res.ks_iterations = ks_trace.iteration_count();
      res.ok = true;
    } catch (const std::exception& e) {
      res.status = e.what();
      res.ok = false;
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cfg.runs));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int r; (r = next.fetch_add(1)) < cfg.runs;) out.runs[r] = do_run(r);
    });
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::complex<double>> frequency_response(const ContinuousModel& m,
                                                     const std::vector<double>& omegas) {
  using cd = std::complex<double>;
  const int n = m.order();
  std::vector<cd> out;
  out.reserve(omegas.size());
  if (n == 0 || m.C.size() == 0) {
    for (std::size_t i = 0; i < omegas.size(); ++i) out.emplace_back(m.D, 0.0);
    return out;
  }
  Eigen::MatrixXcd A = m.A.cast<cd>();
  Eigen::MatrixXcd B = m.B.cast<cd>();
  Eigen::MatrixXcd C = m.C.cast<cd>();
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  for (double w : omegas) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(cd(0.0, w) * I - A);
    if (!lu.isInvertible()) {
      out.emplace_back(std::nan(""), std::nan(""));
      continue;
    }
    out.push_back((C * lu.solve(B))(0, 0) + cd(m.D, 0.0));
  }
  return out;
}

std::vector<double> log_grid(const FrequencyGrid& grid) {
  std::vector<double> w(grid.points);
  if (grid.points == 1) {
    w[0] = grid.omega_min;
    return w;
  }
  const double l0 = std::log(grid.omega_min);
  const double l1 = std::log(grid.omega_max);
  for (int i = 0; i < grid.points; ++i)
    w[i] = std::exp(l0 + (l1 - l0) * i / (grid.points - 1));
  return w;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0,1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

void cmd_simulate(const ExperimentConfig& cfg) {
  ContinuousModel truth = load_model(cfg.model_path);
  SimOutput sim = simulate_experiment(truth, cfg, cfg.em.seed);
  fs::create_directories(cfg.out_dir);
  write_trace_csv(cfg.out_dir + "/trace.csv", sim.u, sim.path.z, sim.trace);
  write_events_csv(cfg.out_dir + "/events.csv", sim.events);
  std::cout << "simulated " << cfg.N << " steps, " << sim.events.times.size()
            << " events -> " << cfg.out_dir << "/trace.csv\n";
}

void cmd_identify(const ExperimentConfig& cfg, const std::string& trace_path,
                  const std::string& method) {
  const std::string init_path = cfg.init_path.empty() ? cfg.model_path : cfg.init_path;
  if (init_path.empty())
    throw std::runtime_error("identify: no init model (set init or model in the config)");
  ContinuousModel init = load_model(init_path);
  TraceFile tf = read_trace_csv(trace_path, cfg.delta, cfg.tau);
  fs::create_directories(cfg.out_dir);

  ContinuousModel est;
  EMTrace trace;
  if (method == "ps") {
    std::tie(est, trace) = em_identify(tf.u, tf.trace, init, cfg.em);
  } else if (method == "ks") {
    EMConfig ks_cfg = cfg.em;
    ks_cfg.baseline_r = resolve_baseline_r(cfg);
    std::tie(est, trace) = ks_em_identify(tf.u, tf.trace.y, init, ks_cfg, cfg.delta);
  } else {
    throw std::runtime_error("identify: unknown method '" + method + "' (use ps or ks)");
  }
  save_model(est, cfg.out_dir + "/estimate.json");
  save_em_trace(trace, cfg.out_dir + "/em_trace.json");
  std::cout << "identify (" << method << "): " << trace.iteration_count() << " iterations, "
            << (trace.converged ? "converged" : "hit max_iters") << " -> " << cfg.out_dir
            << "/estimate.json\n";
}

void cmd_montecarlo(const ExperimentConfig& cfg) {
  MonteCarloOutput mc = run_montecarlo(cfg);
  const auto& names = mc.parameter_names;

  std::string agg = "run,method,status";
  for (const auto& name : names) agg += "," + name;
  agg += '\n';
  for (const auto& res : mc.runs) {
    for (const char* method : {"ps", "ks"}) {
      agg += std::to_string(res.run);
      agg += ',';
      agg += method;
      agg += ',';
      agg += res.ok ? "ok" : sanitize_status(res.status);
      const Vector flat =
          res.ok ? (method == std::string("ps") ? res.ps.flat() : res.ks.flat()) : Vector();
      for (std::size_t i = 0; i < names.size(); ++i) {
        agg += ',';
        agg += res.ok ? format_double(flat(static_cast<Eigen::Index>(i))) : "nan";
      }
      agg += '\n';
    }
  }
  write_text_atomic(cfg.out_dir + "/aggregate.csv", agg);

  int ok_count = 0;
  for (const auto& res : mc.runs) ok_count += res.ok ? 1 : 0;

  std::string summary = "method,parameter,q1,median,q3\n";
  if (ok_count > 0) {
    for (const char* method : {"ps", "ks"}) {
      for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<double> vals;
        for (const auto& res : mc.runs) {
          if (!res.ok) continue;
          const Vector flat = method == std::string("ps") ? res.ps.flat() : res.ks.flat();
          vals.push_back(flat(static_cast<Eigen::Index>(i)));
        }
        summary += method;
        summary += ',' + names[i];
        summary += ',' + format_double(quantile(vals, 0.25));
        summary += ',' + format_double(quantile(vals, 0.5));
        summary += ',' + format_double(quantile(vals, 0.75));
        summary += '\n';
      }
    }
  }
  write_text_atomic(cfg.out_dir + "/summary.csv", summary);

  std::cout << ok_count << "/" << cfg.runs << " runs ok -> " << cfg.out_dir
            << "/aggregate.csv, summary.csv\n";
  for (const auto& res : mc.runs)
    if (!res.ok) std::cerr << "run " << res.run << " failed: " << res.status << "\n";
  if (ok_count == 0) throw EMError(0, "every Monte Carlo run failed");
}

void cmd_bode(const ExperimentConfig& cfg, const std::string& model_path) {
  const std::string path = model_path.empty() ? cfg.model_path : model_path;
  if (path.empty()) throw std::runtime_error("bode: no model file given");
  ContinuousModel m = load_model(path);
  std::vector<double> omegas = log_grid(cfg.grid);
  std::vector<std::complex<double>> G = frequency_response(m, omegas);

  std::string out = "omega,mag_db,phase_deg\n";
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (std::isnan(G[i].real())) {
      std::cerr << "bode: singular resolvent at omega=" << omegas[i] << ", row skipped\n";
      continue;
    }
    out += format_double(omegas[i]);
    out += ',' + format_double(20.0 * std::log10(std::abs(G[i])));
    out += ',' + format_double(std::arg(G[i]) * 180.0 / std::numbers::pi);
    out += '\n';
  }
  fs::create_directories(cfg.out_dir);
  write_text_atomic(cfg.out_dir + "/bode.csv", out);
  std::cout << "bode: " << omegas.size() << " frequencies -> " << cfg.out_dir << "/bode.csv\n";
}

void cmd_compare(const ExperimentConfig& cfg, const std::string& model_a,
                 const std::string& model_b) {
  ContinuousModel a = load_model(model_a);
  ContinuousModel b = load_model(model_b);
  InvariantParameters ia = invariant_parameters(a);
  InvariantParameters ib = invariant_parameters(b);

  std::cout << "parameter,a,b\n";
  const Vector fa = ia.flat(), fb = ib.flat();
  std::vector<std::string> na = parameter_names(a.order());
  std::vector<std::string> nb = parameter_names(b.order());
  if (na == nb) {
    for (std::size_t i = 0; i < na.size(); ++i)
      std::cout << na[i] << "," << format_double(fa(static_cast<Eigen::Index>(i))) << ","
                << format_double(fb(static_cast<Eigen::Index>(i))) << "\n";
  } else {
    std::cout << "(model orders differ: " << a.order() << " vs " << b.order() << ")\n";
  }

  std::vector<double> omegas = log_grid(cfg.grid);
  std::vector<std::complex<double>> Ga = frequency_response(a, omegas);
  std::vector<std::complex<double>> Gb = frequency_response(b, omegas);
  std::string out = "omega,mag_db_a,mag_db_b,diff_db\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (std::isnan(Ga[i].real()) || std::isnan(Gb[i].real())) continue;
    double da = 20.0 * std::log10(std::abs(Ga[i]));
    double db = 20.0 * std::log10(std::abs(Gb[i]));
    worst = std::max(worst, std::abs(da - db));
    out += format_double(omegas[i]);
    out += ',' + format_double(da);
    out += ',' + format_double(db);
    out += ',' + format_double(da - db);
    out += '\n';
  }
  fs::create_directories(cfg.out_dir);
  write_text_atomic(cfg.out_dir + "/compare.csv", out);
  std::cout << "max |gain difference| = " << format_double(worst) << " dB -> " << cfg.out_dir
            << "/compare.csv\n";
}

}  // namespace lsid
