#pragma once

// E-step engines. The particle filter weights bootstrap-propagated particles by
// the probability mass of the censoring interval; the backward smoother
// reweights them (forward-filtering backward-smoothing by marginal reweighting)
// and streams the pairwise cross moments needed for the M-step. A Kalman
// filter/RTS smoother provides the exact linear-Gaussian counterpart used by
// the baseline method and by tests.

#include <cstdint>
#include <vector>

#include "lsid/model.hpp"
#include "lsid/sampler.hpp"

namespace lsid {

struct ParticleSet {
  Matrix particles;           // M x n
  Vector log_weights;         // max-subtracted
  Vector normalized_weights;  // sums to 1 +- 1e-12
  double ess = 0.0;           // 1 / sum w^2, from normalized weights
  bool resampled = false;     // resampling was applied before propagating to the next step
};

struct FilterResult {
  std::vector<ParticleSet> steps;  // one per grid step; weights after the measurement update
  double neg2_loglik = 0.0;        // -2 log of the filter's marginal likelihood estimate
};

// Indices drawn by systematic resampling from normalized weights; u01 is the
// single uniform offset in [0,1).
std::vector<int> systematic_resample(const Vector& weights, double u01);

// Bootstrap filter over the per-step censoring intervals (censoring_interval:
// stored band between events, one-sided beyond the crossed level at event
// steps). A zero-width interval (a_k == b_k) is treated as a direct Gaussian
// observation of value a_k with std eps. Weight collapse at any step throws.
FilterResult particle_filter(const ShiftModel& model, const Vector& u,
                             const QuantizedTrace& trace, const StatePrior& prior,
                             double eps, int M, std::uint64_t seed,
                             double ess_threshold = 0.5);

struct SmoothedEnsemble {
  std::vector<Matrix> particles;       // per step, M x n (the filter's supports)
  std::vector<Vector> filter_weights;  // w_k
  std::vector<Vector> weights;         // w_{k|N}
  // Per-step pairwise cross moment sum_{i,j} W_k(i,j) x_k^(i) x_{k+1}^(j)',
  // k = 0..N-2; the full M x M pairwise weight matrix is never stored.
  std::vector<Matrix> pair_xq;
  int size() const { return static_cast<int>(particles.size()); }
};

// Backward reweighting pass; the transition density N(Ad x + Bd u_k, Qd) needs
// Qd positive definite.
SmoothedEnsemble particle_smoother(const FilterResult& filtered, const ShiftModel& model,
                                   const Vector& u);

// Recomputes the M x M pairwise weight matrix W_k for one step; rows sum to
// w_{k|N} and columns to w_{k+1|N}. Test and diagnostic use.
Matrix pairwise_weights(const SmoothedEnsemble& ens, const ShiftModel& model,
                        const Vector& u, int k);

// Sums over time of smoothed expectations; the complete input of both M-steps.
struct MomentSet {
  Matrix Gxx, Gqq, Gxq;  // n x n
  Matrix Gux, Guq;       // 1 x n
  Matrix Gxz;            // n x 1
  double Guz = 0.0, Guu = 0.0;
  Matrix Gxd, Gdd;  // n x n difference-form moments
  Matrix Gud;       // 1 x n
  Vector m1;        // smoothed E{x_1}
  Matrix S1;        // smoothed E{x_1 x_1'}
  int N = 0;
};

// Fills Gxd, Gud, Gdd from the shift-form entries; exact algebraic identities.
void fill_difference_moments(MomentSet& mom, double delta);

// Assembles every moment from the smoothed ensemble. z-moments marginalize z_k
// analytically through the truncated-Gaussian mean of the step's interval; the
// k = N boundary term over x_{N+1} is the exact one-step pushforward through
// (Ad, Bd, Qd).
MomentSet estep_moments(const SmoothedEnsemble& ens, const Vector& u,
                        const QuantizedTrace& trace, const ShiftModel& model, double eps);

struct KalmanResult {
  Matrix filtered_mean, smoothed_mean;     // N x n
  std::vector<Matrix> filtered_cov, smoothed_cov;
  std::vector<Matrix> lag_cov;             // k = 0..N-2: Cov(x_k, x_{k+1} | y_{1:N})
  double neg2_loglik = 0.0;                // exact innovations form
};

// Kalman filter + RTS smoother for y_k = C x_k + D u_k + e_k, Var e_k = r.
KalmanResult kalman_smooth(const ShiftModel& model, const Vector& u, const Vector& y,
                           double r, const StatePrior& prior);

// Same MomentSet as estep_moments but from exact conditional expectations,
// with z_k given by the observation y_k.
MomentSet kalman_smoother_moments(const ShiftModel& model, const Vector& u, const Vector& y,
                                  double r, const StatePrior& prior);

}  // namespace lsid
