#include "lsid/model.hpp"

#include <algorithm>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lsid {

namespace {

void check_symmetric_psd(const Matrix& M, const char* name) {
  double scale = M.norm();
  double asym = (M - M.transpose()).norm();
  if (asym > 1e-12 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << "validate: " << name << " is not symmetric (relative asymmetry "
       << asym / std::max(scale, 1.0) << ")";
    throw std::invalid_argument(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << "validate: " << name << " is not positive semidefinite (min eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Vector InvariantParameters::flat() const {
  Vector v(2 * poles.size() + 3);
  for (Eigen::Index i = 0; i < poles.size(); ++i) {
    v(2 * i) = poles(i).real();
    v(2 * i + 1) = poles(i).imag();
  }
  v(2 * poles.size()) = cb;
  v(2 * poles.size() + 1) = d;
  v(2 * poles.size() + 2) = cqc;
  return v;
}

ContinuousModel validate(const ContinuousModel& m) {
  const Eigen::Index n = m.A.rows();
  if (n < 1) throw std::invalid_argument("validate: state dimension must be >= 1");
  if (m.A.cols() != n) throw std::invalid_argument("validate: A must be square");
  if (m.B.rows() != n || m.B.cols() != 1)
    throw std::invalid_argument("validate: B must be n x 1");
  if (m.C.rows() != 1 || m.C.cols() != n)
    throw std::invalid_argument("validate: C must be 1 x n");
  if (m.Q.rows() != n || m.Q.cols() != n)
    throw std::invalid_argument("validate: Q must be n x n");
  if (m.mu1.size() != n) throw std::invalid_argument("validate: mu1 must have length n");
  if (m.P1.rows() != n || m.P1.cols() != n)
    throw std::invalid_argument("validate: P1 must be n x n");
  if (!m.A.allFinite() || !m.B.allFinite() || !m.C.allFinite() || !std::isfinite(m.D) ||
      !m.Q.allFinite() || !m.mu1.allFinite() || !m.P1.allFinite())
    throw std::invalid_argument("validate: non-finite entries");

  check_symmetric_psd(m.Q, "Q");
  check_symmetric_psd(m.P1, "P1");

  ContinuousModel out = m;
  out.Q = symmetrize(m.Q);
  out.P1 = symmetrize(m.P1);
  return out;
}

InvariantParameters invariant_parameters(const ContinuousModel& m) {
  InvariantParameters p;
  Eigen::EigenSolver<Matrix> es(m.A);
  std::vector<std::complex<double>> eigs(es.eigenvalues().data(),
                                         es.eigenvalues().data() + m.A.rows());
  std::sort(eigs.begin(), eigs.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  p.poles = Eigen::Map<const Eigen::VectorXcd>(eigs.data(), eigs.size());
  p.cb = (m.C * m.B)(0, 0);
  p.d = m.D;
  p.cqc = (m.C * m.Q * m.C.transpose())(0, 0);
  return p;
}

double relative_change(const InvariantParameters& a, const InvariantParameters& b) {
  Vector fa = a.flat(), fb = b.flat();
  if (fa.size() != fb.size()) return 1.0;
  return (fa - fb).norm() / std::max(fb.norm(), 1e-12);
}

}  // namespace lsid
