#include "lsid/em.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "lsid/discretize.hpp"
#include "lsid/gaussian.hpp"

namespace lsid {

MStepForm parse_form(const std::string& name) {
  if (name == "shift") return MStepForm::kShift;
  if (name == "incremental") return MStepForm::kIncremental;
  throw std::invalid_argument("unknown M-step form '" + name + "' (use shift or incremental)");
}

std::string to_string(MStepForm form) {
  return form == MStepForm::kShift ? "shift" : "incremental";
}

namespace {

Matrix gram_matrix(const MomentSet& mom) {
  const int n = static_cast<int>(mom.Gxx.rows());
  Matrix G(n + 1, n + 1);
  G.topLeftCorner(n, n) = mom.Gxx;
  G.topRightCorner(n, 1) = mom.Gux.transpose();
  G.bottomLeftCorner(1, n) = mom.Gux;
  G(n, n) = mom.Guu;
  return symmetrize(G);
}

Eigen::LDLT<Matrix> factor_gram(const Matrix& G) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  double amax = es.eigenvalues().cwiseAbs().maxCoeff();
  double amin = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(amin > 1e-12 * amax)) {
    std::ostringstream msg;
    msg << "m-step: Gram matrix is near singular (condition number "
        << (amin > 0.0 ? amax / amin : std::numeric_limits<double>::infinity())
        << "); the input is not exciting enough";
    throw std::runtime_error(msg.str());
  }
  return G.ldlt();
}

Matrix clip_psd(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().transpose();
}

// Keeps the smoother's transition density proper when the noise estimate
// degenerates; the floor is far below any statistically meaningful scale.
Matrix floor_qd(const Matrix& Qd) {
  const int n = static_cast<int>(Qd.rows());
  double scale = Qd.trace() / n;
  if (!(scale > 0.0)) scale = 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Qd));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(1e-12 * scale).asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

ShiftModel mstep_shift(const MomentSet& mom, int N) {
  if (N < 1) throw std::invalid_argument("mstep_shift: N must be >= 1");
  const int n = static_cast<int>(mom.Gxx.rows());
  Eigen::LDLT<Matrix> gram = factor_gram(gram_matrix(mom));

  Matrix rhs(n + 1, n + 1);
  rhs.topLeftCorner(n, n) = mom.Gxq;
  rhs.topRightCorner(n, 1) = mom.Gxz;
  rhs.bottomLeftCorner(1, n) = mom.Guq;
  rhs(n, n) = mom.Guz;
  Matrix theta = gram.solve(rhs).transpose();

  ShiftModel out;
  out.Ad = theta.topLeftCorner(n, n);
  out.Bd = theta.block(0, n, n, 1);
  out.C = theta.block(n, 0, 1, n);
  out.D = theta(n, n);

  Matrix R(n + 1, n);
  R.topRows(n) = mom.Gxq;
  R.bottomRows(1) = mom.Guq;
  out.Qd = clip_psd((mom.Gqq - R.transpose() * gram.solve(R)) / N);
  return out;
}

IncrementalModel mstep_delta(const MomentSet& mom, int N, double delta) {
  if (N < 1) throw std::invalid_argument("mstep_delta: N must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("mstep_delta: delta must be > 0");
  const int n = static_cast<int>(mom.Gxx.rows());
  Matrix Gxd = mom.Gxd.size() ? mom.Gxd : Matrix((mom.Gxq - mom.Gxx) / delta);
  Matrix Gud = mom.Gud.size() ? mom.Gud : Matrix((mom.Guq - mom.Gux) / delta);
  Matrix Gdd = mom.Gdd.size()
                   ? mom.Gdd
                   : Matrix((mom.Gqq - mom.Gxq - mom.Gxq.transpose() + mom.Gxx) /
                            (delta * delta));

  Eigen::LDLT<Matrix> gram = factor_gram(gram_matrix(mom));

  Matrix rhs(n + 1, n + 1);
  rhs.topLeftCorner(n, n) = Gxd;
  rhs.topRightCorner(n, 1) = mom.Gxz;
  rhs.bottomLeftCorner(1, n) = Gud;
  rhs(n, n) = mom.Guz;
  Matrix theta = gram.solve(rhs).transpose();

  IncrementalModel out;
  out.Ain = theta.topLeftCorner(n, n);
  out.Bin = theta.block(0, n, n, 1);
  out.C = theta.block(n, 0, 1, n);
  out.D = theta(n, n);

  Matrix R(n + 1, n);
  R.topRows(n) = Gxd;
  R.bottomRows(1) = Gud;
  out.Qin = clip_psd((delta / N) * (Gdd - R.transpose() * gram.solve(R)));
  out.delta = delta;
  return out;
}

double em_objective(const ShiftModel& model, const MomentSet& mom, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("em_objective: eps must be > 0");
  Eigen::LLT<Matrix> llt(symmetrize(model.Qd));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("em_objective: Qd is not positive definite");
  double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();

  const Matrix& C = model.C;
  const double D = model.D;
  double output_block = D * D * mom.Guu - 2.0 * (C * mom.Gxz)(0, 0) - 2.0 * D * mom.Guz +
                        2.0 * D * (mom.Gux * C.transpose())(0, 0) +
                        (C * mom.Gxx * C.transpose())(0, 0);

  const Matrix& Ad = model.Ad;
  const Matrix& Bd = model.Bd;
  Matrix T = mom.Gqq + Ad * mom.Gxx * Ad.transpose() + mom.Guu * Bd * Bd.transpose() -
             Ad * mom.Gxq - mom.Gxq.transpose() * Ad.transpose() - Bd * mom.Guq -
             mom.Guq.transpose() * Bd.transpose() +
             Ad * mom.Gux.transpose() * Bd.transpose() +
             Bd * mom.Gux * Ad.transpose();

  return mom.N * logdet + output_block / (eps * eps) + llt.solve(T).trace();
}

namespace {

struct EStepOutput {
  MomentSet mom;
  double neg2_loglik = 0.0;
};

template <typename EStep>
std::pair<ContinuousModel, EMTrace> run_em(const ContinuousModel& init, double delta,
                                           const EMConfig& cfg, double noise_std,
                                           EStep&& estep) {
  if (cfg.max_iters < 1) throw std::invalid_argument("em: max_iters must be >= 1");
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("em: rel_tol must be > 0");

  ShiftModel cur = c2d_shift(init, delta);
  cur.Qd = floor_qd(cur.Qd);
  InvariantParameters prev = invariant_parameters(init);

  EMTrace trace;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      EStepOutput e = estep(cur, iter);

      ShiftModel next;
      if (cfg.form == MStepForm::kShift) {
        next = mstep_shift(e.mom, e.mom.N);
        next.delta = delta;
      } else {
        next = incremental_to_shift(mstep_delta(e.mom, e.mom.N, delta));
      }
      if (!cfg.estimate_cd) {
        next.C = cur.C;
        next.D = cur.D;
      }
      next.Qd = floor_qd(next.Qd);

      IncrementalModel inc = shift_to_incremental(next);
      ContinuousModel view{inc.Ain, inc.Bin, inc.C, inc.D, inc.Qin, init.mu1, init.P1};

      EMIterationRecord rec;
      rec.estimate = inc;
      rec.invariants = invariant_parameters(view);
      rec.objective = em_objective(next, e.mom, noise_std);
      rec.neg2_loglik = e.neg2_loglik;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      trace.iterations.push_back(std::move(rec));

      double change = relative_change(trace.iterations.back().invariants, prev);
      prev = trace.iterations.back().invariants;
      cur = next;
      if (change <= cfg.rel_tol) {
        trace.converged = true;
        break;
      }
    } catch (const EMError&) {
      throw;
    } catch (const std::exception& ex) {
      throw EMError(iter, ex.what());
    }
  }

  IncrementalModel fin = shift_to_incremental(cur);
  ContinuousModel est{fin.Ain, fin.Bin, fin.C, fin.D, symmetrize(fin.Qin), init.mu1, init.P1};
  return {est, trace};
}

}  // namespace

std::pair<ContinuousModel, EMTrace> em_identify(const Vector& u, const QuantizedTrace& trace,
                                                const ContinuousModel& init0,
                                                const EMConfig& cfg) {
  ContinuousModel init = validate(init0);
  if (u.size() != trace.size()) throw std::invalid_argument("em_identify: input/trace length mismatch");
  if (cfg.particles < 2) throw std::invalid_argument("em_identify: need at least 2 particles");
  if (!(cfg.ess_threshold >= 0.0 && cfg.ess_threshold <= 1.0))
    throw std::invalid_argument("em_identify: ess_threshold must lie in [0,1]");
  double eps = cfg.eps < 0.0 ? 0.01 * trace.tau : cfg.eps;
  if (!(eps > 0.0)) throw std::invalid_argument("em_identify: eps must resolve to a positive value");

  StatePrior prior{init.mu1, init.P1};
  auto estep = [&](const ShiftModel& model, int iter) {
    FilterResult fr = particle_filter(model, u, trace, prior, eps, cfg.particles,
                                      mix_seed(cfg.seed, static_cast<std::uint64_t>(iter)),
                                      cfg.ess_threshold);
    SmoothedEnsemble ens = particle_smoother(fr, model, u);
    return EStepOutput{estep_moments(ens, u, trace, model, eps), fr.neg2_loglik};
  };
  return run_em(init, trace.delta, cfg, eps, estep);
}

std::pair<ContinuousModel, EMTrace> ks_em_identify(const Vector& u, const Vector& y,
                                                   const ContinuousModel& init0,
                                                   const EMConfig& cfg, double delta) {
  ContinuousModel init = validate(init0);
  if (u.size() != y.size()) throw std::invalid_argument("ks_em_identify: input/output length mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("ks_em_identify: delta must be > 0");
  double r = cfg.baseline_r;
  if (!(r > 0.0))
    throw std::invalid_argument("ks_em_identify: baseline_r must be set to a positive variance");

  StatePrior prior{init.mu1, init.P1};
  auto estep = [&](const ShiftModel& model, int) {
    KalmanResult kr = kalman_smooth(model, u, y, r, prior);
    return EStepOutput{kalman_smoother_moments(model, u, y, r, prior), kr.neg2_loglik};
  };
  return run_em(init, delta, cfg, std::sqrt(r), estep);
}

}  // namespace lsid
