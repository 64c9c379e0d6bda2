#include "lsid/smoothing.hpp"

#include <cmath>
#include <stdexcept>

namespace lsid {

KalmanResult kalman_smooth(const ShiftModel& model, const Vector& u, const Vector& y,
                           double r, const StatePrior& prior) {
  const int N = static_cast<int>(y.size());
  const int n = model.order();
  if (N < 1) throw std::invalid_argument("kalman_smooth: empty observation sequence");
  if (u.size() != N) throw std::invalid_argument("kalman_smooth: input/output length mismatch");
  if (!(r > 0.0)) throw std::invalid_argument("kalman_smooth: observation variance must be > 0");

  KalmanResult out;
  out.filtered_mean.resize(N, n);
  out.smoothed_mean.resize(N, n);
  out.filtered_cov.resize(N);
  out.smoothed_cov.resize(N);
  out.lag_cov.resize(std::max(N - 1, 0));

  std::vector<Vector> pred_mean(N);
  std::vector<Matrix> pred_cov(N);

  Vector m = prior.mean;
  Matrix P = symmetrize(prior.cov);
  const Matrix I = Matrix::Identity(n, n);
  constexpr double log_2pi = 1.8378770664093454836;

  for (int k = 0; k < N; ++k) {
    pred_mean[k] = m;
    pred_cov[k] = P;

    double yhat = (model.C * m)(0) + model.D * u(k);
    double S = (model.C * P * model.C.transpose())(0, 0) + r;
    double innov = y(k) - yhat;
    out.neg2_loglik += log_2pi + std::log(S) + innov * innov / S;

    Vector K = P * model.C.transpose() / S;
    m += K * innov;
    Matrix A = I - K * model.C;  // Joseph form keeps P symmetric PSD
    P = symmetrize(A * P * A.transpose() + r * K * K.transpose());

    out.filtered_mean.row(k) = m.transpose();
    out.filtered_cov[k] = P;

    if (k + 1 < N) {
      m = model.Ad * m + model.Bd * u(k);
      P = symmetrize(model.Ad * P * model.Ad.transpose() + model.Qd);
    }
  }

  Vector ms = m;
  Matrix Ps = P;
  out.smoothed_mean.row(N - 1) = ms.transpose();
  out.smoothed_cov[N - 1] = Ps;

  for (int k = N - 2; k >= 0; --k) {
    Vector mf = out.filtered_mean.row(k).transpose();
    const Matrix& Pf = out.filtered_cov[k];
    Vector mp = model.Ad * mf + model.Bd * u(k);
    Matrix Pp = symmetrize(model.Ad * Pf * model.Ad.transpose() + model.Qd);

    Matrix G = Pp.ldlt().solve(model.Ad * Pf).transpose();
    ms = mf + G * (ms - mp);
    Ps = symmetrize(Pf + G * (Ps - Pp) * G.transpose());

    out.smoothed_mean.row(k) = ms.transpose();
    out.smoothed_cov[k] = Ps;
    out.lag_cov[k] = G * out.smoothed_cov[k + 1];
  }
  return out;
}

}  // namespace lsid
