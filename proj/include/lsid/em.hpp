#pragma once

// Closed-form M-steps in shift and incremental form, the particle-smoother EM
// loop, and the exact Kalman-smoother baseline loop. The loop state is always
// the exact shift-form model; the incremental form only changes which M-step
// produces it, and the reported estimate reads the incremental matrices as the
// continuous-time ones.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lsid/model.hpp"
#include "lsid/sampler.hpp"
#include "lsid/smoothing.hpp"

namespace lsid {

enum class MStepForm { kShift, kIncremental };

MStepForm parse_form(const std::string& name);  // "shift" | "incremental"
std::string to_string(MStepForm form);

struct EMConfig {
  double eps = -1.0;          // output regularization std; < 0 resolves to 0.01 * tau
  int max_iters = 50;
  double rel_tol = 1e-3;      // on the relative change of invariant parameters
  int particles = 200;
  double ess_threshold = 0.5;
  MStepForm form = MStepForm::kShift;
  std::uint64_t seed = 0;
  double baseline_r = -1.0;   // KS observation variance; < 0 resolves to tau^2 / 3
  bool estimate_cd = false;   // when false, C and D stay at their initial values
};

struct EMIterationRecord {
  IncrementalModel estimate;
  InvariantParameters invariants;
  double objective = 0.0;     // -2Q surrogate, up to its parameter-free constant
  double neg2_loglik = 0.0;   // the E-step filter's -2 log-likelihood (estimate for
                              // the particle filter, exact for the Kalman filter)
  double seconds = 0.0;
};

struct EMTrace {
  std::vector<EMIterationRecord> iterations;
  bool converged = false;
  int iteration_count() const { return static_cast<int>(iterations.size()); }
};

struct EMError : std::runtime_error {
  int iteration;
  EMError(int iter, const std::string& msg)
      : std::runtime_error("EM iteration " + std::to_string(iter) + ": " + msg),
        iteration(iter) {}
};

// Maximizer of the EM surrogate over (Ad, Bd, C, D, Qd). The returned model's
// delta is left at 0 for the caller to stamp. Throws on a near-singular Gram
// matrix (insufficient excitation).
ShiftModel mstep_shift(const MomentSet& mom, int N);

// Same maximizer expressed in incremental form; algebraically equivalent to
// converting mstep_shift output with Ad = I + delta * Ain.
IncrementalModel mstep_delta(const MomentSet& mom, int N, double delta);

// -2Q at the given parameters under the moments of the previous E-step,
// dropping the parameter-free constant. Qd must be positive definite.
double em_objective(const ShiftModel& model, const MomentSet& mom, double eps);

// Particle-smoother EM on a quantized trace. Deterministic given cfg.seed.
std::pair<ContinuousModel, EMTrace> em_identify(const Vector& u, const QuantizedTrace& trace,
                                                const ContinuousModel& init,
                                                const EMConfig& cfg);

// Baseline EM treating y as a direct measurement with variance cfg.baseline_r
// (which must be set explicitly here: no tau is available to default it).
std::pair<ContinuousModel, EMTrace> ks_em_identify(const Vector& u, const Vector& y,
                                                   const ContinuousModel& init,
                                                   const EMConfig& cfg, double delta);

}  // namespace lsid
