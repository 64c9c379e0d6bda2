#include "lsid/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lsid/discretize.hpp"
#include "lsid/gaussian.hpp"

namespace lsid {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric PSD square root factor L with L L' = M, eigenvalues clamped at 0.
Matrix psd_factor(const Matrix& M, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  double scale = std::max(M.norm(), 1.0);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw std::runtime_error(std::string(what) + ": matrix is not PSD, min eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()));
  }
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

// floor(v) robust to v sitting a few ulp under an integer.
double robust_floor(double v) {
  double m = std::floor(v);
  if (v - m > 1.0 - 4.0 * kEps * std::max(1.0, std::abs(v))) m += 1.0;
  return m;
}

}  // namespace

SimulatedPath simulate_sde(const ContinuousModel& m, const Vector& u, double delta,
                           std::uint64_t seed) {
  ContinuousModel mv = validate(m);
  const int N = static_cast<int>(u.size());
  if (N < 1) throw std::invalid_argument("simulate_sde: empty input sequence");
  ShiftModel d = c2d_shift(mv, delta);
  const int n = d.order();

  Matrix Lq = psd_factor(d.Qd, "simulate_sde: Qd");
  Matrix Lp = psd_factor(mv.P1, "simulate_sde: P1");

  Rng rng(seed);
  auto draw = [&](int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    return v;
  };

  SimulatedPath out;
  out.states.resize(N, n);
  out.z.resize(N);
  Vector x = mv.mu1 + Lp * draw(n);
  for (int k = 0; k < N; ++k) {
    out.states.row(k) = x.transpose();
    out.z(k) = (d.C * x)(0) + d.D * u(k);
    if (k + 1 < N) x = d.Ad * x + d.Bd * u(k) + Lq * draw(n);
  }
  return out;
}

EventRecord lebesgue_sample(const Vector& z, double tau, double delta) {
  if (!(tau > 0.0)) throw std::invalid_argument("lebesgue_sample: tau must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("lebesgue_sample: delta must be > 0");
  if (z.size() < 1) throw std::invalid_argument("lebesgue_sample: empty signal");

  EventRecord ev;
  ev.tau = tau;
  ev.initial_value = robust_floor(z(0) / tau) * tau;

  double last = ev.initial_value;
  for (Eigen::Index k = 1; k < z.size(); ++k) {
    double diff = z(k) - last;
    double tol = 4.0 * kEps * std::max({tau, std::abs(last), std::abs(z(k))});
    if (std::abs(diff) > tau - tol) {
      last = (diff > 0.0) ? last + tau : last - tau;
      ev.times.push_back(static_cast<double>(k) * delta);
      ev.values.push_back(last);
    }
  }
  return ev;
}

QuantizedTrace build_trace(const EventRecord& events, int N, double delta) {
  if (N < 1) throw std::invalid_argument("build_trace: N must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("build_trace: delta must be > 0");
  if (events.times.size() != events.values.size())
    throw std::invalid_argument("build_trace: times/values length mismatch");

  QuantizedTrace tr;
  tr.delta = delta;
  tr.tau = events.tau;
  tr.y.resize(N);
  tr.a.resize(N);
  tr.b.resize(N);
  tr.event_flag.assign(N, 0);

  std::vector<int> idx(events.times.size());
  for (size_t l = 0; l < events.times.size(); ++l) {
    double pos = events.times[l] / delta;
    int k = static_cast<int>(std::llround(pos));
    if (std::abs(pos - k) > 1e-9 * std::max(1.0, std::abs(pos)) || k < 0 || k >= N)
      throw std::invalid_argument("build_trace: event time off the delta grid");
    idx[l] = k;
  }

  double level = events.initial_value;
  bool seen_event = false;
  size_t l = 0;
  for (int k = 0; k < N; ++k) {
    if (l < idx.size() && idx[l] == k) {
      level = events.values[l];
      tr.event_flag[k] = 1;
      seen_event = true;
      ++l;
    }
    tr.y(k) = level;
    if (seen_event) {
      tr.a(k) = level - events.tau;
      tr.b(k) = level + events.tau;
    } else {
      tr.a(k) = events.initial_value;
      tr.b(k) = events.initial_value + events.tau;
    }
  }
  return tr;
}

int count_band_violations(const QuantizedTrace& trace, const Vector& z) {
  if (z.size() != trace.y.size())
    throw std::invalid_argument("count_band_violations: length mismatch");
  int count = 0;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (z(k) < trace.a(k) || z(k) > trace.b(k)) ++count;
  return count;
}

CensorInterval censoring_interval(const QuantizedTrace& trace, int k) {
  if (k < 0 || k >= trace.size())
    throw std::invalid_argument("censoring_interval: step out of range");
  if (k > 0 && trace.event_flag[k] && trace.a(k) < trace.b(k)) {
    const double inf = std::numeric_limits<double>::infinity();
    double jump = trace.y(k) - trace.y(k - 1);
    if (jump > 0.0) return {trace.y(k), inf};
    if (jump < 0.0) return {-inf, trace.y(k)};
  }
  return {trace.a(k), trace.b(k)};
}

}  // namespace lsid
