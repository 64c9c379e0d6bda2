#pragma once

// Slow reference implementations used only by tests. Everything here is built
// from first principles (quadrature, eigendecomposition, extended precision) so
// it shares no code path with the library routines it checks.

#include <cmath>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

namespace oracle {

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double lo,
                                   double hi, double flo, double fmid, double fhi,
                                   double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double flmid = f(lmid);
    const double frmid = f(rmid);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, lo, mid, flo, flmid, fmid, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, mid, hi, fmid, frmid, fhi, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                               double tol = 1e-13) {
    if (!(hi > lo)) return 0.0;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return adaptive_simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

// Truncated-Gaussian reference in shifted standardized coordinates. With
// alpha = (a-m)/eps, beta = (b-m)/eps and z0 the in-interval point closest to
// the mode, phi(z0 + s) = phi(z0) * g(s) with g(s) = exp(-s^2/2 - z0 s), and
// g never underflows on the integration range used. The mean is a ratio, so
// phi(z0) cancels and the reference stays valid arbitrarily far out.
struct ShiftedInterval {
    double z0, s_lo, s_hi;
};

inline ShiftedInterval shift_interval(double alpha, double beta) {
    const double z0 = std::min(std::max(0.0, alpha), beta);
    // Cut where the exponent passes -60: the remainder is ~1e-26 of the mass,
    // and a tight range keeps the boundary layer visible to the first Simpson
    // samples (a wide dead range would zero every seed point and terminate the
    // refinement instantly).
    const double w = std::abs(z0);
    const double cap = -w + std::sqrt(w * w + 120.0);
    ShiftedInterval si;
    si.z0 = z0;
    si.s_lo = std::max(alpha - z0, -cap);
    si.s_hi = std::min(beta - z0, cap);
    return si;
}

inline double truncated_mean(double m, double eps, double a, double b) {
    if (!(eps > 0.0)) throw std::invalid_argument("oracle::truncated_mean: eps <= 0");
    if (!(a < b)) throw std::invalid_argument("oracle::truncated_mean: need a < b");
    const double alpha = (a - m) / eps;
    const double beta = (b - m) / eps;
    const ShiftedInterval si = shift_interval(alpha, beta);
    auto g = [&](double s) { return std::exp(-0.5 * s * s - si.z0 * s); };
    auto sg = [&](double s) { return s * std::exp(-0.5 * s * s - si.z0 * s); };
    const double i0 = adaptive_simpson(g, si.s_lo, si.s_hi);
    const double i1 = adaptive_simpson(sg, si.s_lo, si.s_hi);
    return m + eps * (si.z0 + i1 / i0);
}

// Interval mass; representable (non-underflowing) only while the nearest
// endpoint is within ~37 sigma of the mean.
inline double interval_mass(double m, double eps, double a, double b) {
    const double alpha = (a - m) / eps;
    const double beta = (b - m) / eps;
    if (!(beta > alpha)) return 0.0;
    const ShiftedInterval si = shift_interval(alpha, beta);
    auto g = [&](double s) { return std::exp(-0.5 * s * s - si.z0 * s); };
    const double i0 = adaptive_simpson(g, si.s_lo, si.s_hi);
    return std::exp(-0.5 * si.z0 * si.z0) / std::sqrt(2.0 * 3.14159265358979323846) * i0;
}

// Upper-tail Mills ratio Q(x)/phi(x) in extended precision; erfcl keeps
// digits far past the double underflow point.
inline long double mills_ref(long double x) {
    const long double sqrt2 = 1.41421356237309504880168872420969808L;
    const long double sqrt2pi = 2.50662827463100050241576528481104525L;
    long double q = 0.5L * erfcl(x / sqrt2);
    long double phi = expl(-0.5L * x * x) / sqrt2pi;
    return q / phi;
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the Legendre
// recurrence; no tabulated constants.
inline void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes(n - 1 - i) = x;
        weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

// e^{As} through the eigendecomposition of A (diagonalizable A only);
// independent of any Pade/scaling-squaring code.
inline Eigen::MatrixXd expm_eig(const Eigen::MatrixXd& A, double s) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A);
    Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd E = V * (lam * s).array().exp().matrix().asDiagonal() *
                         V.fullPivLu().inverse();
    return E.real();
}

// int_0^delta e^{As} Q e^{A's} ds by composite Gauss-Legendre quadrature.
inline Eigen::MatrixXd qd_quadrature(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                     double delta, int panels = 4, int order = 40) {
    Eigen::VectorXd x, w;
    gauss_legendre(order, x, w);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    const double h = delta / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (int i = 0; i < order; ++i) {
            const double s = mid + 0.5 * h * x(i);
            Eigen::MatrixXd E = expm_eig(A, s);
            acc += (0.5 * h * w(i)) * E * Q * E.transpose();
        }
    }
    return acc;
}

}  // namespace oracle
