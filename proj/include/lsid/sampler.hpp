#pragma once

// SDE simulation on the fast grid and the send-on-delta sampler with
// hysteresis: events fire when the output moves a full tau away from the last
// recorded level, and the recorded value is the crossed level itself. The
// resulting trace carries the per-step censoring interval [a_k, b_k] consumed
// by the filter.

#include <cstdint>
#include <vector>

#include "lsid/model.hpp"

namespace lsid {

struct EventRecord {
  std::vector<double> times;   // event instants t_l (seconds), strictly increasing
  std::vector<double> values;  // recorded levels; consecutive values differ by exactly tau
  double initial_value = 0.0;  // floor-quantized output at t = 0
  double tau = 0.0;
};

struct QuantizedTrace {
  Vector y;  // held output, piecewise constant between events
  Vector a;  // per-step lower censoring bound, a_k <= y_k
  Vector b;  // per-step upper censoring bound, y_k <= b_k
  std::vector<std::uint8_t> event_flag;
  double delta = 0.0;
  double tau = 0.0;
  int size() const { return static_cast<int>(y.size()); }
};

struct SimulatedPath {
  Matrix states;  // N x n, row k is x_{k+1}' on the grid t_k = k*delta
  Vector z;       // noiseless output C x + D u
};

// Exact discrete recursion x_{k+1} = Ad x_k + Bd u_k + w_k, w_k ~ N(0, Qd),
// x_1 ~ N(mu1, P1), ZOH input. Deterministic per seed.
SimulatedPath simulate_sde(const ContinuousModel& m, const Vector& u, double delta,
                           std::uint64_t seed);

// Scan z on the grid: initial level floor(z_1/tau)*tau, then an event at the
// first index where |z_k - last| exceeds tau; the recorded value is last one
// plus or minus tau (the crossed level), never the overshooting grid value.
// The threshold comparison tolerates a few ulp so held signals whose jumps
// equal tau exactly re-trigger reliably.
EventRecord lebesgue_sample(const Vector& z, double tau, double delta);

// Zero-order hold of the event record onto an N-point grid plus censoring
// bands: floor band [init, init + tau] before the first event, hysteresis band
// [y_k - tau, y_k + tau] from the first event on.
QuantizedTrace build_trace(const EventRecord& events, int N, double delta);

// Steps whose true output escapes [a_k, b_k]; possible only when z jumps more
// than tau within one grid step.
int count_band_violations(const QuantizedTrace& trace, const Vector& z);

// The interval that actually informs a measurement update at step k. Between
// events it is the stored band. An event step certifies a crossing: the output
// landed beyond the crossed level, so the information is one-sided --
// [y_k, +inf) for an upward event, (-inf, y_k] for a downward one -- and the
// symmetric band only constrains the steps that follow. Dropping the crossing
// side lets sluggish models explain the data with paths that never reach the
// threshold, which biases every estimated gain downward. The direction is the
// sign of the held-value jump; a zero-width interval (a direct observation)
// and an event at the very first step (no recorded previous level) keep the
// stored bounds.
struct CensorInterval {
  double a = 0.0;
  double b = 0.0;
};
CensorInterval censoring_interval(const QuantizedTrace& trace, int k);

}  // namespace lsid
