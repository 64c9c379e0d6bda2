#pragma once

// Core model types: the continuous-time system, its discrete-time equivalents at
// step delta, and the similarity-invariant parameter vector used for reporting
// and convergence checks.

#include <Eigen/Dense>

namespace lsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// dx = (A x + B u) dt + dw with incremental covariance Cov{dw} = Q dt,
// z = C x + D u, x(0) ~ N(mu1, P1). Single input, single output.
struct ContinuousModel {
  Matrix A;   // n x n
  Matrix B;   // n x 1
  Matrix C;   // 1 x n
  double D = 0.0;
  Matrix Q;   // n x n, symmetric PSD
  Vector mu1;
  Matrix P1;  // symmetric PSD
  int order() const { return static_cast<int>(A.rows()); }
};

// Exact zero-order-hold equivalent: x_{k+1} = Ad x_k + Bd u_k + w_k,
// Cov{w_k} = Qd, z_k = C x_k + D u_k.
struct ShiftModel {
  Matrix Ad, Bd, C;
  double D = 0.0;
  Matrix Qd;
  double delta = 0.0;
  int order() const { return static_cast<int>(Ad.rows()); }
};

// Difference form (x_{k+1} - x_k)/delta = Ain x_k + Bin u_k + wbar_k; the
// matrices approach the continuous-time ones as delta -> 0.
struct IncrementalModel {
  Matrix Ain, Bin, C;
  double D = 0.0;
  Matrix Qin;
  double delta = 0.0;
  int order() const { return static_cast<int>(Ain.rows()); }
};

// Initial-state prior, carried separately where only discrete matrices travel.
struct StatePrior {
  Vector mean;
  Matrix cov;
};

// Quantities unchanged by a state-basis change x -> Tx, in fixed order so runs
// can be aggregated: poles sorted by (re, im), then C*B, D, C*Q*C'.
struct InvariantParameters {
  Eigen::VectorXcd poles;
  double cb = 0.0;
  double d = 0.0;
  double cqc = 0.0;
  Vector flat() const;  // [re_1, im_1, ..., re_n, im_n, cb, d, cqc]
};

inline Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

// Checks dimensions and that Q, P1 are symmetric PSD; returns the model with
// both symmetrized. Throws std::invalid_argument with a field-naming message.
ContinuousModel validate(const ContinuousModel& m);

InvariantParameters invariant_parameters(const ContinuousModel& m);

// || flat(a) - flat(b) || / max(||flat(b)||, tiny); convergence metric.
double relative_change(const InvariantParameters& a, const InvariantParameters& b);

}  // namespace lsid
