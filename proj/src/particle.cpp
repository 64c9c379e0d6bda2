#include "lsid/smoothing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lsid/gaussian.hpp"

namespace lsid {

namespace {

// Log observation weight. A zero-width interval is a direct Gaussian
// observation and a half-line is an event step (the output certified past a
// crossed level); both keep a finite log-mass however far the predicted output
// sits, so a poor model iterate loses likelihood instead of killing the
// filter. A finite band stays in the linear domain: zero mass there means the
// trace itself is impossible under the model, which is reported as a collapse.
double log_observation_weight(double mean, double eps, double a, double b) {
  constexpr double kLogSqrt2Pi = 0.9189385332046727418;
  if (a == b) {
    double t = (a - mean) / eps;
    return -0.5 * t * t - std::log(eps) - kLogSqrt2Pi;
  }
  bool lo_open = std::isinf(a) && a < 0.0;
  bool hi_open = std::isinf(b) && b > 0.0;
  if (lo_open && hi_open) return 0.0;
  if (hi_open) return log_normal_tail((a - mean) / eps);
  if (lo_open) return log_normal_tail((mean - b) / eps);
  double mass = interval_likelihood(mean, eps, a, b);
  return mass <= kWeightFloor ? -std::numeric_limits<double>::infinity()
                              : std::log(mass);
}

Matrix psd_sampling_factor(const Matrix& M, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  double scale = std::max(M.norm(), 1.0);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw std::runtime_error(std::string(what) + ": not PSD");
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

void finalize_weights(ParticleSet& ps) {
  double c = ps.log_weights.maxCoeff();
  ps.log_weights.array() -= c;
  Vector w = ps.log_weights.array().exp();
  ps.normalized_weights = w / w.sum();
  ps.ess = 1.0 / ps.normalized_weights.squaredNorm();
}

}  // namespace

std::vector<int> systematic_resample(const Vector& weights, double u01) {
  const int M = static_cast<int>(weights.size());
  std::vector<int> out(M);
  double c = weights(0);
  int i = 0;
  for (int j = 0; j < M; ++j) {
    double U = (j + u01) / M;
    while (U > c && i < M - 1) {
      ++i;
      c += weights(i);
    }
    out[j] = i;
  }
  return out;
}

FilterResult particle_filter(const ShiftModel& model, const Vector& u,
                             const QuantizedTrace& trace, const StatePrior& prior,
                             double eps, int M, std::uint64_t seed, double ess_threshold) {
  const int N = trace.size();
  const int n = model.order();
  if (M < 2) throw std::invalid_argument("particle_filter: need at least 2 particles");
  if (!(eps > 0.0)) throw std::invalid_argument("particle_filter: eps must be > 0");
  if (u.size() != N) throw std::invalid_argument("particle_filter: input/trace length mismatch");
  if (N < 1) throw std::invalid_argument("particle_filter: empty trace");

  Matrix Lq = psd_sampling_factor(model.Qd, "particle_filter: Qd");
  Matrix Lp = psd_sampling_factor(prior.cov, "particle_filter: prior covariance");

  Rng rng(seed);
  auto draw_rows = [&](Matrix& X, const Matrix& L, const Vector& shift) {
    Vector xi(n);
    for (int i = 0; i < X.rows(); ++i) {
      for (int d = 0; d < n; ++d) xi(d) = rng.normal();
      X.row(i) = (shift + L * xi).transpose();
    }
  };

  FilterResult out;
  out.steps.resize(N);

  Matrix x(M, n);
  draw_rows(x, Lp, prior.mean);
  Vector logw = Vector::Zero(M);  // carries log of unnormalized weights

  for (int k = 0; k < N; ++k) {
    ParticleSet& ps = out.steps[k];
    ps.particles = x;

    // Normalized carry weights for the evidence increment.
    Vector carry = (logw.array() - logw.maxCoeff()).exp();
    carry /= carry.sum();

    CensorInterval ci = censoring_interval(trace, k);
    Vector loglik(M);
    for (int i = 0; i < M; ++i) {
      double mean = (model.C * x.row(i).transpose())(0) + model.D * u(k);
      loglik(i) = log_observation_weight(mean, eps, ci.a, ci.b);
    }
    double top = loglik.maxCoeff();
    if (top == -std::numeric_limits<double>::infinity())
      throw std::runtime_error("particle_filter: weights collapsed at step " +
                               std::to_string(k) + " (model/data inconsistency)");
    out.neg2_loglik -=
        2.0 * (top + std::log(carry.dot((loglik.array() - top).exp().matrix())));

    ps.log_weights = logw + loglik;
    finalize_weights(ps);

    if (k + 1 < N) {
      Matrix src = ps.particles;
      if (ps.ess < ess_threshold * M) {
        ps.resampled = true;
        std::vector<int> idx = systematic_resample(ps.normalized_weights, 1.0 - rng.uniform());
        for (int i = 0; i < M; ++i) src.row(i) = ps.particles.row(idx[i]);
        logw.setZero();
      } else {
        logw = ps.log_weights;
      }
      Matrix next(M, n);
      Vector xi(n);
      for (int i = 0; i < M; ++i) {
        for (int d = 0; d < n; ++d) xi(d) = rng.normal();
        next.row(i) = (model.Ad * src.row(i).transpose() + model.Bd * u(k) + Lq * xi).transpose();
      }
      x = next;
    }
  }
  return out;
}

namespace {

struct BackwardKernel {
  // Whitened coordinates: mahalanobis(i, j) = |yn_j - ymu_i|^2 in Qd metric.
  Matrix ymu;  // M x n, transformed transition means from step k
  Matrix yn;   // M x n, transformed particles of step k+1

  BackwardKernel(const Matrix& xk, const Matrix& xk1, const ShiftModel& model,
                 double uk, const Eigen::LLT<Matrix>& llt) {
    Matrix mu = xk * model.Ad.transpose();
    Vector bu = model.Bd * uk;
    mu.rowwise() += bu.transpose();
    const auto& L = llt.matrixL();
    ymu = L.solve(mu.transpose()).transpose();
    yn = L.solve(xk1.transpose()).transpose();
  }

  // Half squared distances from every step-k particle to step-(k+1) particle j.
  Vector half_sq_dist(int j) const {
    return 0.5 * (ymu.rowwise() - yn.row(j)).rowwise().squaredNorm();
  }
};

}  // namespace

SmoothedEnsemble particle_smoother(const FilterResult& filtered, const ShiftModel& model,
                                   const Vector& u) {
  const int N = static_cast<int>(filtered.steps.size());
  if (N < 1) throw std::invalid_argument("particle_smoother: empty filter output");
  if (u.size() != N) throw std::invalid_argument("particle_smoother: input length mismatch");
  const int M = static_cast<int>(filtered.steps[0].particles.rows());

  Eigen::LLT<Matrix> llt(symmetrize(model.Qd));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "particle_smoother: Qd is not positive definite (transition density undefined)");

  SmoothedEnsemble ens;
  ens.particles.resize(N);
  ens.filter_weights.resize(N);
  ens.weights.resize(N);
  ens.pair_xq.assign(std::max(N - 1, 0), Matrix());
  for (int k = 0; k < N; ++k) {
    ens.particles[k] = filtered.steps[k].particles;
    ens.filter_weights[k] = filtered.steps[k].normalized_weights;
  }
  ens.weights[N - 1] = filtered.steps[N - 1].normalized_weights;

  for (int k = N - 2; k >= 0; --k) {
    const Matrix& X = ens.particles[k];
    const Matrix& Xn = ens.particles[k + 1];
    const Vector& wf = ens.filter_weights[k];
    const Vector& ws_next = ens.weights[k + 1];
    BackwardKernel kern(X, Xn, model, u(k), llt);

    Vector wnew = Vector::Zero(M);
    Matrix pair = Matrix::Zero(X.cols(), X.cols());
    for (int j = 0; j < M; ++j) {
      if (ws_next(j) == 0.0) continue;
      Vector hd = kern.half_sq_dist(j);
      // Per-column scaling keeps the ratio arithmetic finite; restrict to the
      // support of the filter weights so a zero-weight near particle cannot
      // hide the whole column.
      double c = std::numeric_limits<double>::infinity();
      for (int i = 0; i < M; ++i)
        if (wf(i) > 0.0 && hd(i) < c) c = hd(i);
      if (!std::isfinite(c)) continue;
      Vector e(M);
      for (int i = 0; i < M; ++i) e(i) = wf(i) > 0.0 ? wf(i) * std::exp(c - hd(i)) : 0.0;
      double denom = e.sum();
      if (denom <= 0.0) continue;
      double f = ws_next(j) / denom;
      wnew += f * e;
      pair.noalias() += (X.transpose() * e) * (f * Xn.row(j));
    }

    double total = wnew.sum();
    if (!(total > 0.0))
      throw std::runtime_error("particle_smoother: smoothing weights collapsed at step " +
                               std::to_string(k));
    ens.weights[k] = wnew / total;
    ens.pair_xq[k] = pair / total;
  }
  return ens;
}

Matrix pairwise_weights(const SmoothedEnsemble& ens, const ShiftModel& model,
                        const Vector& u, int k) {
  if (k < 0 || k + 1 >= ens.size())
    throw std::invalid_argument("pairwise_weights: step out of range");
  const Matrix& X = ens.particles[k];
  const Matrix& Xn = ens.particles[k + 1];
  const Vector& wf = ens.filter_weights[k];
  const Vector& ws_next = ens.weights[k + 1];
  const int M = static_cast<int>(X.rows());

  Eigen::LLT<Matrix> llt(symmetrize(model.Qd));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("pairwise_weights: Qd is not positive definite");
  BackwardKernel kern(X, Xn, model, u(k), llt);

  Matrix W = Matrix::Zero(M, M);
  for (int j = 0; j < M; ++j) {
    if (ws_next(j) == 0.0) continue;
    Vector hd = kern.half_sq_dist(j);
    double c = std::numeric_limits<double>::infinity();
    for (int i = 0; i < M; ++i)
      if (wf(i) > 0.0 && hd(i) < c) c = hd(i);
    if (!std::isfinite(c)) continue;
    Vector e(M);
    for (int i = 0; i < M; ++i) e(i) = wf(i) > 0.0 ? wf(i) * std::exp(c - hd(i)) : 0.0;
    double denom = e.sum();
    if (denom <= 0.0) continue;
    W.col(j) = (ws_next(j) / denom) * e;
  }
  // Same normalization as the streaming pass.
  double total = W.sum();
  if (total > 0.0) W /= total;
  return W;
}

}  // namespace lsid
