#pragma once

// Scalar Gaussian kernels for interval-censored measurements: probability mass of
// N(mean, eps^2) over an interval and the mean of the truncated distribution, both
// stable arbitrarily far into the tails. Also the reproducible normal stream used
// by every randomized component.

#include <cstdint>
#include <random>

namespace lsid {

// Floor for probabilities entering a log; keeps log-weights finite when an
// interval sits tens of sigma from the mean.
inline constexpr double kWeightFloor = 1e-300;

double normal_pdf(double x);
double normal_cdf(double x);

// Q(x)/phi(x) for x >= 0: upper tail mass over density. Continued fraction in the
// far tail, direct erfc otherwise.
double mills_ratio(double x);

// log P(Z > t) for standard normal Z, any t. The upper tail goes through
// mills_ratio, so the result stays finite long after the mass itself has
// underflowed; the lower tail uses log1p on the complementary mass.
double log_normal_tail(double t);

// P(a < Z < b) for Z ~ N(m, eps^2). Endpoints may be +/-inf, a <= b. The
// difference is taken tail-first so nothing cancels; underflows to 0 only once
// the whole interval is past ~38 sigma.
double interval_likelihood(double m, double eps, double a, double b);

// E{Z | a < Z < b} for Z ~ N(m, eps^2), a < b. Stable in the far tails (no
// pdf/cdf ratio of underflowed terms); the result is clamped into (a, b).
double truncated_gaussian_mean(double m, double eps, double a, double b);

// N(0,1) stream built from mt19937_64 + Box-Muller rather than
// std::normal_distribution, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  uint64_t next_u64() { return gen_(); }
  double uniform();  // (0, 1]
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Decorrelated child seed (splitmix64 finalizer); used to give each run,
// iteration and stream its own generator.
uint64_t mix_seed(uint64_t base, uint64_t salt);

}  // namespace lsid
