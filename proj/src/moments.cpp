#include "lsid/smoothing.hpp"

#include <stdexcept>

#include "lsid/gaussian.hpp"

namespace lsid {

namespace {

MomentSet zero_moments(int n, int N) {
  MomentSet mom;
  mom.N = N;
  mom.Gxx = Matrix::Zero(n, n);
  mom.Gqq = Matrix::Zero(n, n);
  mom.Gxq = Matrix::Zero(n, n);
  mom.Gux = Matrix::Zero(1, n);
  mom.Guq = Matrix::Zero(1, n);
  mom.Gxz = Matrix::Zero(n, 1);
  return mom;
}

}  // namespace

void fill_difference_moments(MomentSet& mom, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("fill_difference_moments: delta must be > 0");
  mom.Gxd = (mom.Gxq - mom.Gxx) / delta;
  mom.Gud = (mom.Guq - mom.Gux) / delta;
  mom.Gdd = (mom.Gqq - mom.Gxq - mom.Gxq.transpose() + mom.Gxx) / (delta * delta);
}

MomentSet estep_moments(const SmoothedEnsemble& ens, const Vector& u,
                        const QuantizedTrace& trace, const ShiftModel& model, double eps) {
  const int N = ens.size();
  const int n = model.order();
  if (N < 1) throw std::invalid_argument("estep_moments: empty ensemble");
  if (u.size() != N || trace.size() != N)
    throw std::invalid_argument("estep_moments: length mismatch");
  if (!(eps > 0.0)) throw std::invalid_argument("estep_moments: eps must be > 0");

  MomentSet mom = zero_moments(n, N);

  for (int k = 0; k < N; ++k) {
    const Matrix& X = ens.particles[k];
    const Vector& w = ens.weights[k];
    Vector mean = X.transpose() * w;
    Matrix second = X.transpose() * w.asDiagonal() * X;

    mom.Gxx += second;
    mom.Gux += u(k) * mean.transpose();
    mom.Guu += u(k) * u(k);

    // z_k marginalizes analytically: its conditional mean given the particle
    // is the mean of the measurement Gaussian truncated to the interval. A
    // zero-width interval pins z_k to the recorded value.
    CensorInterval ci = censoring_interval(trace, k);
    Vector zhat(X.rows());
    for (int i = 0; i < X.rows(); ++i) {
      double m = (model.C * X.row(i).transpose())(0) + model.D * u(k);
      zhat(i) = (ci.a == ci.b) ? ci.a : truncated_gaussian_mean(m, eps, ci.a, ci.b);
    }
    mom.Gxz += X.transpose() * w.cwiseProduct(zhat);
    mom.Guz += u(k) * w.dot(zhat);

    if (k == 0) {
      mom.m1 = mean;
      mom.S1 = second;
    }
    if (k > 0) {
      mom.Gqq += second;
      mom.Guq += u(k - 1) * mean.transpose();
    }
    if (k < N - 1) mom.Gxq += ens.pair_xq[k];
  }

  // k = N boundary: moments of x_{N+1} by exact pushforward of the last
  // smoothed marginal through the transition.
  {
    const Matrix& X = ens.particles[N - 1];
    const Vector& w = ens.weights[N - 1];
    Matrix mu = X * model.Ad.transpose();
    Vector bu = model.Bd * u(N - 1);
    mu.rowwise() += bu.transpose();
    Vector mean_next = mu.transpose() * w;
    mom.Gqq += mu.transpose() * w.asDiagonal() * mu + model.Qd;
    mom.Gxq += X.transpose() * w.asDiagonal() * mu;
    mom.Guq += u(N - 1) * mean_next.transpose();
  }

  fill_difference_moments(mom, model.delta);
  return mom;
}

MomentSet kalman_smoother_moments(const ShiftModel& model, const Vector& u, const Vector& y,
                                  double r, const StatePrior& prior) {
  KalmanResult ks = kalman_smooth(model, u, y, r, prior);
  const int N = static_cast<int>(y.size());
  const int n = model.order();

  MomentSet mom = zero_moments(n, N);

  auto second_moment = [&](int k) {
    Vector ms = ks.smoothed_mean.row(k).transpose();
    return Matrix(ks.smoothed_cov[k] + ms * ms.transpose());
  };

  for (int k = 0; k < N; ++k) {
    Vector ms = ks.smoothed_mean.row(k).transpose();
    Matrix second = second_moment(k);

    mom.Gxx += second;
    mom.Gux += u(k) * ms.transpose();
    mom.Guu += u(k) * u(k);
    mom.Gxz += ms * y(k);
    mom.Guz += u(k) * y(k);

    if (k == 0) {
      mom.m1 = ms;
      mom.S1 = second;
    }
    if (k > 0) {
      mom.Gqq += second;
      mom.Guq += u(k - 1) * ms.transpose();
      Vector prev = ks.smoothed_mean.row(k - 1).transpose();
      mom.Gxq += ks.lag_cov[k - 1] + prev * ms.transpose();
    }
  }

  // k = N boundary: exact pushforward of the last smoothed marginal.
  {
    Vector ms = ks.smoothed_mean.row(N - 1).transpose();
    Matrix second = second_moment(N - 1);
    double uN = u(N - 1);
    Vector mean_next = model.Ad * ms + model.Bd * uN;
    mom.Gqq += model.Ad * second * model.Ad.transpose() +
               model.Ad * ms * uN * model.Bd.transpose() +
               model.Bd * uN * ms.transpose() * model.Ad.transpose() +
               model.Bd * (uN * uN) * model.Bd.transpose() + model.Qd;
    mom.Gxq += second * model.Ad.transpose() + ms * uN * model.Bd.transpose();
    mom.Guq += uN * mean_next.transpose();
  }

  fill_difference_moments(mom, model.delta);
  return mom;
}

}  // namespace lsid
