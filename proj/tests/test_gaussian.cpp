#include "lsid/gaussian.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

using namespace lsid;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

// The case grid shared by the mean and mass checks: scale placements from
// on-center to 40 sigma displaced, both-sided and one-sided.
struct Kase {
    double m, eps, a, b;
};

std::vector<Kase> kernel_grid() {
    const double ms[] = {-2.0, 0.0, 1.5, 10.0};
    const double epss[] = {0.01, 0.1, 0.5, 1.0, 3.0};
    const double edges[] = {-40.0, -5.0, -1.0, -0.2, 0.0, 0.2, 1.0, 5.0, 40.0};
    std::vector<Kase> grid;
    for (double m : ms)
        for (double eps : epss) {
            for (double alpha : edges)
                for (double beta : edges)
                    if (alpha < beta) grid.push_back({m, eps, m + alpha * eps, m + beta * eps});
            for (double edge : edges) {
                grid.push_back({m, eps, -kInf, m + edge * eps});
                grid.push_back({m, eps, m + edge * eps, kInf});
            }
        }
    return grid;
}
}  // namespace

TEST_CASE("normal pdf and cdf basics") {
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
    CHECK(normal_cdf(-38.0) > 0.0);  // still representable
    CHECK(normal_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mills ratio against extended-precision reference") {
    // Crosses the erfc/continued-fraction switch at x = 7.
    for (double x : {0.0, 0.3, 1.0, 2.5, 5.0, 6.9, 7.0, 7.1, 10.0, 20.0, 37.0, 50.0, 80.0}) {
        double ref = static_cast<double>(oracle::mills_ref(x));
        CHECK(mills_ratio(x) == doctest::Approx(ref).epsilon(1e-13));
    }

    SUBCASE("asymptotics") {
        CHECK(mills_ratio(0.0) == doctest::Approx(std::sqrt(3.14159265358979323846 / 2.0)));
        // R(x) ~ 1/x for large x
        CHECK(mills_ratio(1e3) == doctest::Approx(1e-3).epsilon(1e-5));
    }
}

TEST_CASE("log normal tail") {
    SUBCASE("matches the direct cdf where the mass is representable") {
        for (double t : {-6.0, -2.0, -0.5, 0.0, 0.7, 1.0, 3.0, 6.9, 7.1, 15.0, 30.0}) {
            CHECK(log_normal_tail(t) ==
                  doctest::Approx(std::log(normal_cdf(-t))).epsilon(1e-13));
        }
    }

    SUBCASE("stays finite and accurate far past cdf underflow") {
        // Extended-precision references for log Q(t).
        CHECK(log_normal_tail(40.0) == doctest::Approx(-804.6084420137538).epsilon(1e-14));
        CHECK(log_normal_tail(150.0) == doctest::Approx(-11255.929618266808).epsilon(1e-14));
        CHECK(std::isfinite(log_normal_tail(1e6)));
    }

    SUBCASE("monotone decreasing, extreme limits pinned") {
        double prev = 0.0;
        for (double t : {-40.0, -8.0, -1.0, 0.0, 1.0, 8.0, 40.0, 300.0}) {
            double cur = log_normal_tail(t);
            CHECK(cur <= prev);
            prev = cur;
        }
        CHECK(log_normal_tail(-50.0) == 0.0);  // mass indistinguishable from 1
        CHECK(log_normal_tail(kInf) == -kInf);
        CHECK(log_normal_tail(-kInf) == 0.0);
    }
}

TEST_CASE("interval likelihood") {
    SUBCASE("reference values") {
        // One-sigma mass
        CHECK(interval_likelihood(0.0, 1.0, -1.0, 1.0) ==
              doctest::Approx(0.6826894921370859).epsilon(1e-14));
        CHECK(interval_likelihood(0.0, 1.0, -kInf, kInf) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(interval_likelihood(0.0, 1.0, -kInf, 0.0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(interval_likelihood(2.0, 0.5, 2.0, kInf) == doctest::Approx(0.5).epsilon(1e-14));
    }

    SUBCASE("agrees with quadrature over the moderate part of the grid") {
        for (const auto& k : kernel_grid()) {
            double lo = std::isinf(k.a) ? -35.0 : (k.a - k.m) / k.eps;
            double hi = std::isinf(k.b) ? 35.0 : (k.b - k.m) / k.eps;
            if (lo < -35.0 || hi > 35.0) continue;  // past double mass representability
            double ref = oracle::interval_mass(k.m, k.eps, k.a, k.b);
            CHECK(interval_likelihood(k.m, k.eps, k.a, k.b) ==
                  doctest::Approx(ref).epsilon(1e-11));
        }
    }

    SUBCASE("tail difference keeps relative accuracy") {
        // Both endpoints far out on the same side: naive cdf subtraction loses
        // everything, the tail-first form keeps ~13 digits.
        long double ref = 0.5L * (erfcl(30.0L / 1.41421356237309504880L) -
                                  erfcl(31.0L / 1.41421356237309504880L));
        CHECK(interval_likelihood(0.0, 1.0, 30.0, 31.0) ==
              doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
        CHECK(interval_likelihood(0.0, 1.0, 30.0, 31.0) > 0.0);
    }

    SUBCASE("reflection symmetry") {
        for (const auto& k : kernel_grid()) {
            double fwd = interval_likelihood(k.m, k.eps, k.a, k.b);
            double rev = interval_likelihood(-k.m, k.eps, -k.b, -k.a);
            CHECK(fwd == doctest::Approx(rev).epsilon(1e-13));
        }
    }

    SUBCASE("monotone in the upper endpoint") {
        double prev = 0.0;
        for (double beta : {-3.0, -1.0, 0.0, 1.0, 3.0, kInf}) {
            double cur = interval_likelihood(0.3, 0.7, -kInf, 0.3 + beta * 0.7);
            CHECK(cur >= prev);
            prev = cur;
        }
    }

    SUBCASE("additive over adjacent intervals") {
        double whole = interval_likelihood(0.0, 1.0, -2.0, 3.0);
        double parts = interval_likelihood(0.0, 1.0, -2.0, 0.5) +
                       interval_likelihood(0.0, 1.0, 0.5, 3.0);
        CHECK(whole == doctest::Approx(parts).epsilon(1e-13));
    }

    SUBCASE("degenerate and far-underflow cases") {
        CHECK(interval_likelihood(0.0, 1.0, 2.0, 2.0) == 0.0);
        // Entire interval ~40 sigma out: mass is below the double range.
        CHECK(interval_likelihood(0.0, 1.0, 40.0, 41.0) == 0.0);
        CHECK(interval_likelihood(0.0, 1.0, 40.0, 41.0) >= 0.0);
    }
}

TEST_CASE("truncated gaussian mean") {
    SUBCASE("matches quadrature over the full case grid, 40 sigma included") {
        int cases = 0;
        for (const auto& k : kernel_grid()) {
            if (!(k.a < k.b)) continue;
            double ref = oracle::truncated_mean(k.m, k.eps, k.a, k.b);
            double got = truncated_gaussian_mean(k.m, k.eps, k.a, k.b);
            INFO("m=" << k.m << " eps=" << k.eps << " a=" << k.a << " b=" << k.b
                      << " got=" << got << " ref=" << ref);
            CHECK(std::abs(got - ref) <= 1e-6);
            ++cases;
        }
        CHECK(cases > 1000);
    }

    SUBCASE("half-line values") {
        // E{Z | Z > 0} = sqrt(2/pi) for the standard normal
        CHECK(truncated_gaussian_mean(0.0, 1.0, 0.0, kInf) ==
              doctest::Approx(0.7978845608028654).epsilon(1e-13));
        CHECK(truncated_gaussian_mean(0.0, 1.0, -kInf, 0.0) ==
              doctest::Approx(-0.7978845608028654).epsilon(1e-13));
    }

    SUBCASE("symmetric interval pins the mean exactly") {
        CHECK(truncated_gaussian_mean(0.3, 0.05, 0.3 - 0.2, 0.3 + 0.2) == 0.3);
    }

    SUBCASE("result always lies strictly inside the interval") {
        for (const auto& k : kernel_grid()) {
            double mean = truncated_gaussian_mean(k.m, k.eps, k.a, k.b);
            CHECK(mean > k.a);
            CHECK(mean < k.b);
        }
    }

    SUBCASE("far displaced interval collapses to the near edge") {
        // 40 sigma out the conditional mass hugs the boundary.
        double mean = truncated_gaussian_mean(0.0, 1.0, 40.0, 41.0);
        CHECK(mean > 40.0);
        CHECK(mean < 40.1);
        CHECK(mean == doctest::Approx(oracle::truncated_mean(0.0, 1.0, 40.0, 41.0))
                          .epsilon(1e-9));
    }

    SUBCASE("reflection symmetry") {
        for (const auto& k : kernel_grid()) {
            double fwd = truncated_gaussian_mean(k.m, k.eps, k.a, k.b);
            double rev = truncated_gaussian_mean(-k.m, k.eps, -k.b, -k.a);
            CHECK(fwd == doctest::Approx(-rev).epsilon(1e-12).scale(std::abs(fwd) + 1.0));
        }
    }
}

TEST_CASE("rng stream") {
    SUBCASE("deterministic per seed") {
        Rng a(42), b(42), c(43);
        bool all_equal = true, any_diff = false;
        for (int i = 0; i < 64; ++i) {
            double x = a.normal(), y = b.normal(), z = c.normal();
            all_equal = all_equal && (x == y);
            any_diff = any_diff || (x != z);
        }
        CHECK(all_equal);
        CHECK(any_diff);
    }

    SUBCASE("uniform stays in (0, 1]") {
        Rng r(7);
        for (int i = 0; i < 10000; ++i) {
            double u = r.uniform();
            CHECK(u > 0.0);
            CHECK(u <= 1.0);
        }
    }

    SUBCASE("normal sample moments") {
        Rng r(1234);
        const int n = 200000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double x = r.normal();
            s += x;
            s2 += x * x;
        }
        CHECK(std::abs(s / n) < 0.01);
        CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
    }

    SUBCASE("mix_seed decorrelates") {
        CHECK(mix_seed(1, 0) != mix_seed(1, 1));
        CHECK(mix_seed(1, 0) != mix_seed(2, 0));
        CHECK(mix_seed(5, 3) == mix_seed(5, 3));
    }
}
