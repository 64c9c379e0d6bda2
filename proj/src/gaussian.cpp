#include "lsid/gaussian.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsid {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kSqrtHalf = 0.7071067811865475244;
constexpr double kTwoPi = 6.2831853071795864769;
constexpr double kLogSqrt2Pi = 0.9189385332046727418;

bool neg_inf(double x) { return std::isinf(x) && x < 0; }
bool pos_inf(double x) { return std::isinf(x) && x > 0; }

// Q(alpha) - Q(beta) for 0 <= alpha < beta, without forming either tail mass on
// its own: phi(alpha) * (R(alpha) - e^{-d} R(beta)), d = (beta^2 - alpha^2)/2.
double tail_mass(double alpha, double beta) {
  if (pos_inf(beta)) return normal_pdf(alpha) * mills_ratio(alpha);
  double d = 0.5 * (beta - alpha) * (beta + alpha);
  double bracket = mills_ratio(alpha) - std::exp(-d) * mills_ratio(beta);
  return normal_pdf(alpha) * bracket;
}

// phi(a)/Q(a) for any alpha; the one-sided truncated-mean kernel.
double hazard(double alpha) {
  if (alpha >= 0.0) return 1.0 / mills_ratio(alpha);
  double q = normal_cdf(-alpha);  // in (0.5, 1], no cancellation
  return normal_pdf(alpha) / q;
}

// (phi(a) - phi(b)) / (Q(a) - Q(b)) for 0 <= alpha < beta < inf. Both numerator
// and denominator are scaled by phi(alpha), so nothing underflows even for
// alpha in the hundreds.
double two_sided_kernel(double alpha, double beta) {
  double d = 0.5 * (beta - alpha) * (beta + alpha);
  double num = -std::expm1(-d);
  double den = mills_ratio(alpha) - std::exp(-d) * mills_ratio(beta);
  return num / den;
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kSqrtHalf); }

double mills_ratio(double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("mills_ratio: x must be >= 0");
  if (x < 7.0) return normal_cdf(-x) / normal_pdf(x);
  // Laplace continued fraction 1/(x + 1/(x + 2/(x + ...))), evaluated backwards.
  double tail = x;
  for (int k = 100; k >= 1; --k) tail = x + k / tail;
  return 1.0 / tail;
}

double log_normal_tail(double t) {
  if (std::isinf(t)) return t > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  if (t >= 0.0) return -0.5 * t * t - kLogSqrt2Pi + std::log(mills_ratio(t));
  return std::log1p(-normal_pdf(t) * mills_ratio(-t));
}

double interval_likelihood(double m, double eps, double a, double b) {
  if (!(eps > 0.0)) throw std::invalid_argument("interval_likelihood: eps must be > 0");
  if (a > b) throw std::invalid_argument("interval_likelihood: need a <= b");
  if (a == b) return 0.0;
  double alpha = (a - m) / eps;
  double beta = (b - m) / eps;
  if (neg_inf(alpha) && pos_inf(beta)) return 1.0;
  if (neg_inf(alpha)) return normal_cdf(beta);
  if (pos_inf(beta)) return normal_cdf(-alpha);
  if (alpha >= 0.0) return tail_mass(alpha, beta);
  if (beta <= 0.0) return tail_mass(-beta, -alpha);
  // Interval straddles the mean: sum of two nonnegative erf halves, no
  // cancellation however narrow the interval.
  return 0.5 * (std::erf(beta * kSqrtHalf) + std::erf(-alpha * kSqrtHalf));
}

double truncated_gaussian_mean(double m, double eps, double a, double b) {
  if (!(eps > 0.0)) throw std::invalid_argument("truncated_gaussian_mean: eps must be > 0");
  if (!(a < b)) throw std::invalid_argument("truncated_gaussian_mean: need a < b");
  double alpha = (a - m) / eps;
  double beta = (b - m) / eps;
  bool lo_open = neg_inf(alpha);
  bool hi_open = pos_inf(beta);

  double g;  // standardized shift: result = mean + eps * g
  if (lo_open && hi_open) {
    g = 0.0;
  } else if (hi_open) {
    g = hazard(alpha);
  } else if (lo_open) {
    g = -hazard(-beta);
  } else if (alpha >= 0.0) {
    g = two_sided_kernel(alpha, beta);
  } else if (beta <= 0.0) {
    g = -two_sided_kernel(-beta, -alpha);
  } else {
    double mass = 0.5 * (std::erf(beta * kSqrtHalf) + std::erf(-alpha * kSqrtHalf));
    // phi(a) - phi(b) via expm1, exact for nearly equal endpoints. Factor out
    // whichever pdf is larger so the exponential shrinks instead of blowing up
    // when one endpoint is far out in a tail.
    double d = 0.5 * (beta - alpha) * (beta + alpha);  // (beta^2 - alpha^2) / 2
    double diff = d >= 0.0 ? -normal_pdf(alpha) * std::expm1(-d)
                           : normal_pdf(beta) * std::expm1(d);
    g = diff / mass;
  }

  double r = m + eps * g;
  if (!lo_open && r <= a) r = std::nextafter(a, std::numeric_limits<double>::infinity());
  if (!hi_open && r >= b) r = std::nextafter(b, -std::numeric_limits<double>::infinity());
  return r;
}

double Rng::uniform() {
  return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double r = std::sqrt(-2.0 * std::log(uniform()));
  double th = kTwoPi * uniform();
  spare_ = r * std::sin(th);
  have_spare_ = true;
  return r * std::cos(th);
}

uint64_t mix_seed(uint64_t base, uint64_t salt) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace lsid
