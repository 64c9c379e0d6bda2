#include "lsid/discretize.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace lsid {

Matrix matrix_exponential(const Matrix& M) {
  if (!M.allFinite()) throw std::invalid_argument("matrix_exponential: non-finite entries");
  return M.exp();
}

ShiftModel c2d_shift(const ContinuousModel& m, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("c2d_shift: delta must be > 0");
  const Eigen::Index n = m.A.rows();

  ShiftModel d;
  d.delta = delta;
  d.C = m.C;
  d.D = m.D;
  d.Ad = matrix_exponential(m.A * delta);

  // exp(delta * [[A, B],[0, 0]]) carries int_0^delta e^{As} ds B in its
  // top-right block; works for singular A.
  Matrix aug = Matrix::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = m.A;
  aug.topRightCorner(n, 1) = m.B;
  d.Bd = matrix_exponential(aug * delta).topRightCorner(n, 1);

  // exp(delta * [[-A, Q],[0, A']]) = [[F1, G1],[0, F2]] with F2' = e^{A delta}
  // and F2' G1 the covariance integral.
  Matrix van = Matrix::Zero(2 * n, 2 * n);
  van.topLeftCorner(n, n) = -m.A;
  van.topRightCorner(n, n) = m.Q;
  van.bottomRightCorner(n, n) = m.A.transpose();
  Matrix H = matrix_exponential(van * delta);
  d.Qd = symmetrize(H.bottomRightCorner(n, n).transpose() * H.topRightCorner(n, n));
  return d;
}

IncrementalModel shift_to_incremental(const ShiftModel& m) {
  if (!(m.delta > 0.0)) throw std::invalid_argument("shift_to_incremental: delta must be > 0");
  IncrementalModel out;
  out.delta = m.delta;
  out.Ain = (m.Ad - Matrix::Identity(m.Ad.rows(), m.Ad.cols())) / m.delta;
  out.Bin = m.Bd / m.delta;
  out.C = m.C;
  out.D = m.D;
  out.Qin = m.Qd / m.delta;
  return out;
}

ShiftModel incremental_to_shift(const IncrementalModel& m) {
  if (!(m.delta > 0.0)) throw std::invalid_argument("incremental_to_shift: delta must be > 0");
  ShiftModel out;
  out.delta = m.delta;
  out.Ad = Matrix::Identity(m.Ain.rows(), m.Ain.cols()) + m.delta * m.Ain;
  out.Bd = m.delta * m.Bin;
  out.C = m.C;
  out.D = m.D;
  out.Qd = m.delta * m.Qin;
  return out;
}

}  // namespace lsid
