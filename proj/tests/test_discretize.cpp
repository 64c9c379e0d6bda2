#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "lsid/discretize.hpp"
#include "lsid/gaussian.hpp"
#include "oracles.hpp"

using namespace lsid;

namespace {

// Random model with guaranteed-stable A (spectrum shifted left of -0.1) and a
// random PSD Q; plenty for exercising the discretization maps.
ContinuousModel random_stable(int n, Rng& rng) {
    ContinuousModel m;
    Matrix R(n, n), G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            R(i, j) = rng.normal();
            G(i, j) = 0.5 * rng.normal();
        }
    m.A = R - (R.norm() + 0.1) * Matrix::Identity(n, n);
    m.B = Matrix(n, 1);
    for (int i = 0; i < n; ++i) m.B(i, 0) = rng.normal();
    m.C = Matrix(1, n);
    for (int j = 0; j < n; ++j) m.C(0, j) = rng.normal();
    m.D = 0.1 * rng.normal();
    m.Q = G * G.transpose();
    m.mu1 = Vector::Zero(n);
    m.P1 = Matrix::Identity(n, n);
    return m;
}

ContinuousModel scalar_model(double a, double b, double q) {
    ContinuousModel m;
    m.A = Matrix::Constant(1, 1, a);
    m.B = Matrix::Constant(1, 1, b);
    m.C = Matrix::Constant(1, 1, 1.0);
    m.D = 0.0;
    m.Q = Matrix::Constant(1, 1, q);
    m.mu1 = Vector::Zero(1);
    m.P1 = Matrix::Identity(1, 1);
    return m;
}

ContinuousModel spring_mass() {
    ContinuousModel m;
    m.A = Matrix(2, 2);
    m.A << 0.0, 1.0, -2.0, -3.0;
    m.B = Matrix(2, 1);
    m.B << 0.0, 1.0;
    m.C = Matrix(1, 2);
    m.C << 1.0, 0.0;
    m.D = 0.0;
    m.Q = Matrix(2, 2);
    m.Q << 0.3, 0.1, 0.1, 0.2;
    m.mu1 = Vector::Zero(2);
    m.P1 = Matrix::Identity(2, 2);
    return m;
}

}  // namespace

TEST_CASE("matrix exponential") {
    SUBCASE("nilpotent block") {
        Matrix N(2, 2);
        N << 0.0, 1.0, 0.0, 0.0;
        Matrix E = matrix_exponential(N);
        CHECK(E(0, 0) == doctest::Approx(1.0));
        CHECK(E(0, 1) == doctest::Approx(1.0));
        CHECK(E(1, 0) == doctest::Approx(0.0));
        CHECK(E(1, 1) == doctest::Approx(1.0));
    }

    SUBCASE("rotation generator gives cosine and sine") {
        double th = 0.73;
        Matrix W(2, 2);
        W << 0.0, -th, th, 0.0;
        Matrix E = matrix_exponential(W);
        CHECK(E(0, 0) == doctest::Approx(std::cos(th)).epsilon(1e-12));
        CHECK(E(1, 0) == doctest::Approx(std::sin(th)).epsilon(1e-12));
    }

    SUBCASE("matches the eigendecomposition oracle on random matrices") {
        Rng rng(314);
        for (int n = 1; n <= 4; ++n) {
            Matrix M(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) M(i, j) = rng.normal();
            Matrix got = matrix_exponential(M);
            Matrix ref = oracle::expm_eig(M, 1.0);
            CHECK((got - ref).norm() < 1e-10 * std::max(ref.norm(), 1.0));
        }
    }

    SUBCASE("non-finite input throws") {
        Matrix M = Matrix::Zero(2, 2);
        M(0, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(matrix_exponential(M), std::invalid_argument);
    }
}

TEST_CASE("zero-order-hold discretization") {
    SUBCASE("first-order closed forms") {
        // a = -1, b = 0.7, q = 0.5, delta = 0.01:
        //   Ad = e^{-0.01}, Bd = b (1 - e^{-0.01}), Qd = q (1 - e^{-0.02}) / 2
        ShiftModel d = c2d_shift(scalar_model(-1.0, 0.7, 0.5), 0.01);
        CHECK(d.Ad(0, 0) == doctest::Approx(0.99004983374916811).epsilon(1e-14));
        CHECK(d.Bd(0, 0) == doctest::Approx(0.0069651163755823234).epsilon(1e-13));
        CHECK(d.Qd(0, 0) == doctest::Approx(0.0049503316733311869).epsilon(1e-13));
        CHECK(d.delta == 0.01);
        CHECK(d.C(0, 0) == 1.0);
    }

    SUBCASE("integrator (singular A) still gets exact Bd and Qd") {
        // A = 0: Ad = 1, Bd = b delta, Qd = q delta.
        ShiftModel d = c2d_shift(scalar_model(0.0, 2.0, 0.3), 0.5);
        CHECK(d.Ad(0, 0) == doctest::Approx(1.0));
        CHECK(d.Bd(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(d.Qd(0, 0) == doctest::Approx(0.15).epsilon(1e-13));
    }

    SUBCASE("Bd matches input-response quadrature") {
        Rng rng(2718);
        for (int n = 1; n <= 3; ++n) {
            ContinuousModel m = random_stable(n, rng);
            double delta = 0.3;
            ShiftModel d = c2d_shift(m, delta);

            Vector x, w;
            oracle::gauss_legendre(40, x, w);
            Matrix ref = Matrix::Zero(n, 1);
            for (int i = 0; i < 40; ++i) {
                double s = 0.5 * delta * (1.0 + x(i));
                ref += (0.5 * delta * w(i)) * oracle::expm_eig(m.A, s) * m.B;
            }
            CHECK((d.Bd - ref).norm() < 1e-10 * std::max(ref.norm(), 1.0));
        }
    }

    SUBCASE("Qd matches covariance quadrature") {
        Rng rng(99);
        for (int n = 1; n <= 3; ++n) {
            ContinuousModel m = random_stable(n, rng);
            double delta = 0.25;
            ShiftModel d = c2d_shift(m, delta);
            Matrix ref = oracle::qd_quadrature(m.A, m.Q, delta);
            CHECK((d.Qd - ref).norm() < 1e-10 * std::max(ref.norm(), 1e-12));
            // And the result is what it claims to be: symmetric PSD.
            CHECK((d.Qd - d.Qd.transpose()).norm() == 0.0);
            Eigen::SelfAdjointEigenSolver<Matrix> es(d.Qd);
            CHECK(es.eigenvalues().minCoeff() > -1e-14 * std::max(d.Qd.norm(), 1.0));
        }
    }

    SUBCASE("delta must be positive") {
        CHECK_THROWS_AS(c2d_shift(scalar_model(-1.0, 1.0, 1.0), 0.0), std::invalid_argument);
        CHECK_THROWS_AS(c2d_shift(scalar_model(-1.0, 1.0, 1.0), -0.1), std::invalid_argument);
    }
}

TEST_CASE("incremental form") {
    SUBCASE("approaches the continuous matrices at first order in delta") {
        ContinuousModel m = spring_mass();
        double errA[3], errB[3], errQ[3];
        double deltas[3] = {1e-1, 1e-2, 1e-3};
        for (int i = 0; i < 3; ++i) {
            IncrementalModel inc = shift_to_incremental(c2d_shift(m, deltas[i]));
            errA[i] = (inc.Ain - m.A).norm();
            errB[i] = (inc.Bin - m.B).norm();
            errQ[i] = (inc.Qin - m.Q).norm();
        }
        // First-order convergence: shrinking delta tenfold shrinks the error
        // tenfold, up to the next-order term.
        for (int i = 0; i < 2; ++i) {
            CHECK(errA[i] / errA[i + 1] > 8.0);
            CHECK(errA[i] / errA[i + 1] < 12.0);
            CHECK(errB[i] / errB[i + 1] > 8.0);
            CHECK(errB[i] / errB[i + 1] < 12.0);
            CHECK(errQ[i] / errQ[i + 1] > 8.0);
            CHECK(errQ[i] / errQ[i + 1] < 12.0);
        }
    }

    SUBCASE("shift and incremental forms are an exact inverse pair") {
        Rng rng(555);
        ContinuousModel m = random_stable(3, rng);
        ShiftModel d = c2d_shift(m, 0.07);
        ShiftModel back = incremental_to_shift(shift_to_incremental(d));
        CHECK((back.Ad - d.Ad).norm() < 1e-14 * d.Ad.norm());
        CHECK((back.Bd - d.Bd).norm() < 1e-14 * std::max(d.Bd.norm(), 1.0));
        CHECK((back.Qd - d.Qd).norm() < 1e-14 * std::max(d.Qd.norm(), 1.0));
        CHECK(back.delta == d.delta);

        IncrementalModel inc = shift_to_incremental(d);
        IncrementalModel inc2 = shift_to_incremental(incremental_to_shift(inc));
        CHECK((inc2.Ain - inc.Ain).norm() < 1e-14 * std::max(inc.Ain.norm(), 1.0));
        CHECK((inc2.Qin - inc.Qin).norm() < 1e-14 * std::max(inc.Qin.norm(), 1.0));
    }

    SUBCASE("conversions reject a missing step size") {
        ShiftModel d;
        d.Ad = Matrix::Identity(1, 1);
        d.Bd = Matrix::Zero(1, 1);
        d.C = Matrix::Identity(1, 1);
        d.Qd = Matrix::Identity(1, 1);
        CHECK_THROWS_AS(shift_to_incremental(d), std::invalid_argument);

        IncrementalModel inc;
        inc.Ain = Matrix::Zero(1, 1);
        inc.Bin = Matrix::Zero(1, 1);
        inc.C = Matrix::Identity(1, 1);
        inc.Qin = Matrix::Identity(1, 1);
        CHECK_THROWS_AS(incremental_to_shift(inc), std::invalid_argument);
    }
}
