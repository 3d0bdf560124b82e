#include "flowcert/sdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Marginal: return "Marginal";
  }
  return "?";
}

static double json_safe(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? 1e308 : -1e308;
}

json SolveReport::to_json() const {
  json j{{"status", status_name(status)},
         {"objective", json_safe(objective)},
         {"max_block_eigenvalue", json_safe(max_block_eigenvalue)},
         {"max_equality_residual", max_equality_residual},
         {"min_sign_value", json_safe(min_sign_value)},
         {"iterations", iterations},
         {"unbounded", unbounded},
         {"diagnostic", diagnostic},
         {"assignment", assignment}};
  j["block_residuals"] = json::object();
  for (const auto& [n, v] : block_residuals) j["block_residuals"][n] = json_safe(v);
  j["equality_residuals"] = json::object();
  for (const auto& [n, v] : equality_residuals) j["equality_residuals"][n] = v;
  return j;
}

// ================================================================ barrier core

namespace {

MatrixXd eval_cone_block(const ConeBlock& b, const VectorXd& y) {
  MatrixXd M = b.C;
  for (const auto& [j, A] : b.A) M.noalias() += y[j] * A;
  return M;
}

// Cholesky factor and log-determinant; false when M is not positive definite.
bool factor(const MatrixXd& M, MatrixXd& L, double& logdet) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  logdet = 0.0;
  for (int i = 0; i < L.rows(); ++i) {
    const double d = L(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    logdet += 2.0 * std::log(d);
  }
  return true;
}

bool total_logdet(const ConeProblem& P, const VectorXd& y, double& sum) {
  sum = 0.0;
  MatrixXd L;
  for (const auto& b : P.blocks) {
    double ld;
    if (!factor(eval_cone_block(b, y), L, ld)) return false;
    sum += ld;
  }
  return true;
}

}  // namespace

BarrierResult barrier_minimize(const ConeProblem& P, const VectorXd& y0, const BarrierOptions& opt) {
  const int n = P.nvar;
  BarrierResult res;
  res.y = y0;
  if (n == 0) {
    res.value = 0.0;
    res.converged = true;
    return res;
  }
  const double R2 = std::pow(std::max(opt.ball_radius, 10.0 * y0.norm()), 2);
  // log det of every block plus log(R^2 - |y|^2)
  auto logdet_all = [&](const VectorXd& y, double& sum) {
    const double room = R2 - y.squaredNorm();
    if (!(room > 0.0)) return false;
    if (!total_logdet(P, y, sum)) return false;
    sum += std::log(room);
    return true;
  };
  double logdet;
  if (!logdet_all(y0, logdet)) throw std::logic_error("barrier_minimize: start point not interior");
  int nu = 1;
  for (const auto& b : P.blocks) nu += b.dim;

  VectorXd& y = res.y;
  double t = 1.0;
  MatrixXd L;
  VectorXd g(n);
  MatrixXd H(n, n);
  std::vector<MatrixXd> Ms;

  for (int outer = 0; outer < 200; ++outer) {
    // centering
    for (int inner = 0; inner < 200; ++inner) {
      if (res.newton_steps >= opt.max_newton) return res;
      g = t * P.cost;
      H.setZero();
      for (const auto& b : P.blocks) {
        double ld;
        factor(eval_cone_block(b, y), L, ld);
        const auto Lt = L.triangularView<Eigen::Lower>();
        Ms.resize(b.A.size());
        for (size_t a = 0; a < b.A.size(); ++a) {
          MatrixXd X = Lt.solve(b.A[a].second);
          Ms[a] = Lt.solve(X.transpose());
          g[b.A[a].first] -= Ms[a].trace();
        }
        for (size_t a = 0; a < b.A.size(); ++a)
          for (size_t c = a; c < b.A.size(); ++c) {
            const double v = Ms[a].cwiseProduct(Ms[c].transpose()).sum();
            const int ja = b.A[a].first, jc = b.A[c].first;
            H(ja, jc) += v;
            if (ja != jc) H(jc, ja) += v;
          }
      }
      {
        const double room = R2 - y.squaredNorm();
        g += (2.0 / room) * y;
        H.diagonal().array() += 2.0 / room;
        H.noalias() += (4.0 / (room * room)) * y * y.transpose();
      }
      // Jacobi-scaled Newton system
      VectorXd D(n);
      for (int i = 0; i < n; ++i) D[i] = H(i, i) > 0.0 ? 1.0 / std::sqrt(H(i, i)) : 1.0;
      MatrixXd Hs = D.asDiagonal() * H * D.asDiagonal();
      VectorXd rhs = -(D.asDiagonal() * g);
      VectorXd dir;
      double ridge = 0.0;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::LDLT<MatrixXd> ldlt(Hs + ridge * MatrixXd::Identity(n, n));
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          dir = ldlt.solve(rhs);
          if (dir.allFinite()) break;
        }
        ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0;
        dir.resize(0);
      }
      if (dir.size() == 0) return res;
      dir = D.asDiagonal() * dir;
      const double slope = g.dot(dir);
      const double dec2 = -slope;
      if (!(dec2 > 1e-10)) break;  // centered

      // backtracking on the barrier difference (avoids cancellation at large t)
      double step = 1.0;
      bool moved = false;
      const double cdir = P.cost.dot(dir);
      while (step > 1e-14) {
        const VectorXd yn = y + step * dir;
        double ldn;
        if (logdet_all(yn, ldn)) {
          const double df = t * step * cdir - (ldn - logdet);
          if (df <= 0.25 * step * slope) {
            y = yn;
            logdet = ldn;
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      ++res.newton_steps;
      res.value = P.cost.dot(y);
      if (res.value <= opt.stop_value) {
        res.converged = true;
        return res;
      }
      if (res.value < opt.unbounded_value || y.lpNorm<Eigen::Infinity>() > opt.y_bound) {
        res.unbounded = true;
        return res;
      }
      if (!moved) break;
    }
    res.value = P.cost.dot(y);
    res.t_final = t;
    if (nu / t <= opt.gap_tol * std::max(1.0, std::abs(res.value))) {
      res.converged = true;
      break;
    }
    t *= 10.0;
  }
  if (y.squaredNorm() > 0.25 * R2) res.unbounded = true;
  return res;
}

// ================================================================ LMI layer

namespace {

// x = x0 + N z solving E x = d; false when inconsistent.
bool affine_solution(const MatrixXd& E, const VectorXd& d, int n, VectorXd& x0, MatrixXd& N) {
  if (E.rows() == 0) {
    x0 = VectorXd::Zero(n);
    N = MatrixXd::Identity(n, n);
    return true;
  }
  if (n == 0) {
    x0 = VectorXd::Zero(0);
    N = MatrixXd(0, 0);
    return d.lpNorm<Eigen::Infinity>() <= 1e-10;
  }
  Eigen::JacobiSVD<MatrixXd> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * std::max(1.0, smax)) ++r;
  const MatrixXd& U = svd.matrixU();
  const MatrixXd& V = svd.matrixV();
  x0 = VectorXd::Zero(n);
  for (int i = 0; i < r; ++i) x0 += V.col(i) * (U.col(i).dot(d) / sv[i]);
  N = V.rightCols(n - r);
  const double resid = (E * x0 - d).lpNorm<Eigen::Infinity>();
  return resid <= 1e-10 * (1.0 + d.lpNorm<Eigen::Infinity>());
}

// Orthonormal basis of the row space of K (columns of the returned matrix).
MatrixXd row_space(const MatrixXd& K, int p) {
  if (K.rows() == 0 || p == 0) return MatrixXd(p, 0);
  Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * std::max(1.0, smax)) ++r;
  return svd.matrixV().leftCols(r);
}

// lower-triangle entry list of one sense-normalized block over x
struct DenseBlock {
  std::string name;
  int dim = 0;
  std::vector<std::pair<int, int>> ij;  // lower-tri positions
  MatrixXd coef;                        // entries x variables
  VectorXd cst;
};

std::vector<DenseBlock> dense_blocks(const LmiSystem& lmi) {
  const int n = lmi.num_variables();
  std::vector<DenseBlock> out;
  for (const auto& b : lmi.blocks()) {
    DenseBlock d;
    d.name = b.name;
    d.dim = b.dim;
    const double sgn = b.sense == Sense::NegSemidef ? 1.0 : -1.0;
    const int ne = b.dim * (b.dim + 1) / 2;
    d.coef = MatrixXd::Zero(ne, n);
    d.cst = VectorXd::Zero(ne);
    int e = 0;
    for (int i = 0; i < b.dim; ++i)
      for (int j = 0; j <= i; ++j, ++e) {
        const Affine& a = b.at(i, j);
        d.ij.emplace_back(i, j);
        d.cst[e] = sgn * a.constant;
        for (const auto& [k, c] : a.terms) d.coef(e, k) = sgn * c;
      }
    out.push_back(std::move(d));
  }
  return out;
}

int entry_index(int i, int j) {
  if (j > i) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

// Block restricted to `active` rows as an affine matrix function of v where x = x0 + T v.
void restrict_block(const DenseBlock& b, const std::vector<int>& active, const VectorXd& x0,
                    const MatrixXd& T, MatrixXd& C, std::vector<MatrixXd>& A) {
  const int m = static_cast<int>(active.size());
  const int p = static_cast<int>(T.cols());
  C = MatrixXd::Zero(m, m);
  A.assign(p, MatrixXd::Zero(m, m));
  for (int a = 0; a < m; ++a)
    for (int c = 0; c <= a; ++c) {
      const int e = entry_index(active[a], active[c]);
      const double v0 = b.cst[e] + b.coef.row(e).dot(x0);
      C(a, c) = C(c, a) = v0;
      const Eigen::RowVectorXd row = b.coef.row(e) * T;
      for (int j = 0; j < p; ++j) A[j](a, c) = A[j](c, a) = row[j];
    }
}

void push_block(ConeProblem& P, const MatrixXd& C, const std::vector<std::pair<int, MatrixXd>>& A) {
  ConeBlock cb;
  cb.dim = static_cast<int>(C.rows());
  cb.C = C;
  for (const auto& [j, M] : A)
    if (M.cwiseAbs().maxCoeff() > 0.0) cb.A.emplace_back(j, M);
  P.blocks.push_back(std::move(cb));
}

double max_eig(const MatrixXd& M) {
  if (M.rows() == 0) return -kInf;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

SolveReport evaluate_assignment(const LmiSystem& lmi, const VectorXd& x, const SolverOptions& opt) {
  SolveReport r;
  r.x = x;
  r.assignment = lmi.assignment_map(x);
  r.max_block_eigenvalue = lmi.blocks().empty() ? 0.0 : -kInf;
  for (const auto& b : lmi.blocks()) {
    MatrixXd M = b.eval(x);
    if (b.sense == Sense::PosSemidef) M = -M;
    const double e = max_eig(M);
    r.block_residuals.emplace_back(b.name, e);
    r.max_block_eigenvalue = std::max(r.max_block_eigenvalue, e);
  }
  for (const auto& eq : lmi.equalities()) {
    const double v = std::abs(eq.expr.eval(x));
    r.equality_residuals.emplace_back(eq.name, v);
    r.max_equality_residual = std::max(r.max_equality_residual, v);
  }
  for (int i = 0; i < lmi.num_variables(); ++i)
    if (lmi.variables()[i].sign == Sign::NonNeg) r.min_sign_value = std::min(r.min_sign_value, x[i]);
  r.objective = r.max_block_eigenvalue;
  const double worst = std::max(r.max_block_eigenvalue, -std::min(0.0, r.min_sign_value));
  if (worst <= opt.feasibility_tol && r.max_equality_residual <= opt.equality_tol) {
    r.status = SolveStatus::Feasible;
  } else if (worst <= opt.marginal_band && r.max_equality_residual <= opt.marginal_band) {
    r.status = SolveStatus::Marginal;
  } else {
    r.status = SolveStatus::Infeasible;
  }
  return r;
}

SolveReport minimize_max_eigenvalue(const LmiSystem& lmi, const SolverOptions& opt) {
  const int n = lmi.num_variables();
  const std::vector<DenseBlock> blocks = dense_blocks(lmi);

  MatrixXd E(static_cast<int>(lmi.equalities().size()), n);
  VectorXd d(E.rows());
  E.setZero();
  for (int k = 0; k < E.rows(); ++k) {
    const auto& ex = lmi.equalities()[k].expr;
    for (const auto& [i, c] : ex.terms) E(k, i) = c;
    d[k] = -ex.constant;
  }

  VectorXd x0;
  MatrixXd N;
  if (!affine_solution(E, d, n, x0, N)) {
    SolveReport r = evaluate_assignment(lmi, x0, opt);
    r.status = SolveStatus::Infeasible;
    r.objective = kInf;
    r.diagnostic = "ill-posed equalities: inconsistent linear system";
    return r;
  }

  // facial reduction: an identically zero diagonal forces its row to vanish
  std::vector<std::vector<int>> active(blocks.size());
  for (size_t k = 0; k < blocks.size(); ++k)
    for (int i = 0; i < blocks[k].dim; ++i) active[k].push_back(i);
  MatrixXd Ex = E;
  VectorXd dx = d;
  bool reduced_any = false;
  if (opt.facial_reduction) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t k = 0; k < blocks.size() && !changed; ++k) {
        const DenseBlock& b = blocks[k];
        const double scale = 1.0 + std::max(b.cst.cwiseAbs().maxCoeff(),
                                            b.coef.size() ? b.coef.cwiseAbs().maxCoeff() : 0.0);
        for (size_t a = 0; a < active[k].size() && !changed; ++a) {
          const int i = active[k][a];
          const int e = entry_index(i, i);
          const double v0 = b.cst[e] + b.coef.row(e).dot(x0);
          const double slope = N.cols() ? (b.coef.row(e) * N).cwiseAbs().maxCoeff() : 0.0;
          if (std::abs(v0) > 1e-12 * scale || slope > 1e-12 * scale) continue;
          for (int j : active[k]) {
            if (j == i) continue;
            const int f = entry_index(i, j);
            Ex.conservativeResize(Ex.rows() + 1, Eigen::NoChange);
            dx.conservativeResize(dx.size() + 1);
            Ex.row(Ex.rows() - 1) = b.coef.row(f);
            dx[dx.size() - 1] = -b.cst[f];
          }
          active[k].erase(active[k].begin() + static_cast<long>(a));
          changed = true;
        }
      }
      if (changed) {
        reduced_any = true;
        VectorXd nx0;
        MatrixXd nN;
        if (!affine_solution(Ex, dx, n, nx0, nN)) {
          // forced rows cannot vanish: solve the unreduced problem instead
          SolverOptions o2 = opt;
          o2.facial_reduction = false;
          SolveReport r = minimize_max_eigenvalue(lmi, o2);
          r.diagnostic += (r.diagnostic.empty() ? "" : "; ") +
                          std::string("facial reduction inconsistent, unreduced solve");
          return r;
        }
        x0 = nx0;
        N = nN;
      }
    }
  }

  // sign rows; variables pinned by the equalities are checked, not barriered
  std::vector<int> sign_rows;
  for (int i = 0; i < n; ++i) {
    if (lmi.variables()[i].sign != Sign::NonNeg) continue;
    const double slope = N.cols() ? N.row(i).cwiseAbs().maxCoeff() : 0.0;
    if (slope <= 1e-12) {
      if (x0[i] < -opt.equality_tol) {
        SolveReport r = evaluate_assignment(lmi, x0, opt);
        r.status = SolveStatus::Infeasible;
        r.objective = kInf;
        r.diagnostic = "sign constraint on " + lmi.variables()[i].name + " contradicts equalities";
        return r;
      }
      continue;
    }
    sign_rows.push_back(i);
  }

  // drop directions that touch no block entry and no sign row
  MatrixXd T = N;
  {
    std::vector<Eigen::RowVectorXd> rows;
    for (size_t k = 0; k < blocks.size(); ++k)
      for (size_t a = 0; a < active[k].size(); ++a)
        for (size_t c = 0; c <= a; ++c)
          rows.push_back(blocks[k].coef.row(entry_index(active[k][a], active[k][c])) * N);
    for (int i : sign_rows) rows.push_back(N.row(i));
    MatrixXd K(static_cast<int>(rows.size()), N.cols());
    for (size_t r = 0; r < rows.size(); ++r) K.row(static_cast<int>(r)) = rows[r];
    T = N * row_space(K, static_cast<int>(N.cols()));
  }
  const int p = static_cast<int>(T.cols());

  // restricted blocks
  std::vector<MatrixXd> Cs;
  std::vector<std::vector<MatrixXd>> As;
  for (size_t k = 0; k < blocks.size(); ++k) {
    if (active[k].empty()) continue;
    MatrixXd C;
    std::vector<MatrixXd> A;
    restrict_block(blocks[k], active[k], x0, T, C, A);
    Cs.push_back(C);
    As.push_back(A);
  }

  // start: multipliers at 1, free variables at 0, projected on the affine set
  VectorXd xinit = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if (lmi.variables()[i].sign == Sign::NonNeg) xinit[i] = 1.0;
  VectorXd v = p ? VectorXd(T.transpose() * (xinit - x0)) : VectorXd(0);
  auto sign_val = [&](int i, const VectorXd& vv) { return x0[i] + (p ? T.row(i).dot(vv) : 0.0); };

  int steps = 0;
  bool hard_signs = true;
  if (!sign_rows.empty()) {
    double worst = kInf;
    for (int i : sign_rows) worst = std::min(worst, sign_val(i, v));
    if (!(worst > 1e-9)) {
      // phase 1: maximize the smallest sign slack
      ConeProblem P1;
      P1.nvar = p + 1;
      P1.cost = VectorXd::Zero(p + 1);
      P1.cost[p] = 1.0;
      for (int i : sign_rows) {
        std::vector<std::pair<int, MatrixXd>> A;
        for (int j = 0; j < p; ++j) A.emplace_back(j, MatrixXd::Constant(1, 1, T(i, j)));
        A.emplace_back(p, MatrixXd::Constant(1, 1, 1.0));
        push_block(P1, MatrixXd::Constant(1, 1, x0[i]), A);
      }
      VectorXd y0(p + 1);
      y0.head(p) = v;
      y0[p] = -worst + 1.0;
      BarrierOptions bo;
      bo.stop_value = -1.0;
      bo.gap_tol = 1e-10;
      const BarrierResult r1 = barrier_minimize(P1, y0, bo);
      steps += r1.newton_steps;
      if (r1.value < -1e-9 || r1.unbounded) {
        v = r1.y.head(p);
      } else {
        hard_signs = false;
      }
    }
  }

  // main problem: min s  s.t.  s I - B_k(v) > 0,  sign rows > 0 (or > -s)
  ConeProblem P;
  P.nvar = p + 1;
  P.cost = VectorXd::Zero(p + 1);
  P.cost[p] = 1.0;
  double s0 = -kInf;
  for (size_t k = 0; k < Cs.size(); ++k) {
    MatrixXd B = Cs[k];
    for (int j = 0; j < p; ++j) B += v[j] * As[k][j];
    s0 = std::max(s0, max_eig(B));
    std::vector<std::pair<int, MatrixXd>> A;
    for (int j = 0; j < p; ++j) A.emplace_back(j, -As[k][j]);
    A.emplace_back(p, MatrixXd::Identity(Cs[k].rows(), Cs[k].rows()));
    push_block(P, -Cs[k], A);
  }
  for (int i : sign_rows) {
    std::vector<std::pair<int, MatrixXd>> A;
    for (int j = 0; j < p; ++j) A.emplace_back(j, MatrixXd::Constant(1, 1, T(i, j)));
    if (!hard_signs) {
      A.emplace_back(p, MatrixXd::Constant(1, 1, 1.0));
      s0 = std::max(s0, -sign_val(i, v));
    }
    push_block(P, MatrixXd::Constant(1, 1, x0[i]), A);
  }

  double objective;
  bool unbounded = false, unattained = false;
  VectorXd vstar = v;
  if (Cs.empty() && (hard_signs || sign_rows.empty())) {
    objective = 0.0;  // every row was forced to zero
  } else {
    VectorXd y0(p + 1);
    y0.head(p) = v;
    y0[p] = s0 + 1.0;
    // Moderate ball first. Ending on its boundary means either a truly
    // unbounded objective or an infimum approached only as |v| grows; a much
    // wider ball tells them apart.
    const double base = std::max(1.0, y0.norm());
    BarrierOptions bo;
    bo.gap_tol = opt.gap_tol;
    bo.ball_radius = 1e4 * base;
    BarrierResult r = barrier_minimize(P, y0, bo);
    steps += r.newton_steps;
    if (r.unbounded) {
      BarrierOptions wide = bo;
      wide.ball_radius = 1e9 * base;
      wide.y_bound = 1e8 * base;
      const BarrierResult r2 = barrier_minimize(P, y0, wide);
      steps += r2.newton_steps;
      if (r2.y[p] < r.y[p] - std::max(1.0, std::abs(r.y[p]))) {
        r = r2;
        r.unbounded = true;
      } else {
        r.unbounded = false;
        unattained = true;
      }
    }
    vstar = r.y.head(p);
    objective = r.y[p];
    unbounded = r.unbounded;
    if (Cs.empty()) objective = std::max(objective, 0.0);
  }

  const VectorXd x = x0 + (p ? VectorXd(T * vstar) : VectorXd::Zero(n));
  SolveReport rep = evaluate_assignment(lmi, x, opt);
  rep.objective = objective;
  rep.iterations = steps;
  rep.unbounded = unbounded;
  if (unbounded) rep.diagnostic = "unbounded below";
  if (unattained) rep.diagnostic = "infimum not attained at bounded scale";
  if (!hard_signs) rep.diagnostic += std::string(rep.diagnostic.empty() ? "" : "; ") + "no strict sign interior";
  if (reduced_any) rep.diagnostic += std::string(rep.diagnostic.empty() ? "" : "; ") + "facial reduction applied";

  const double worst = std::max({objective, rep.max_block_eigenvalue, -std::min(0.0, rep.min_sign_value)});
  if (worst <= opt.feasibility_tol && rep.max_equality_residual <= opt.equality_tol) {
    rep.status = SolveStatus::Feasible;
  } else if (std::abs(worst) <= opt.marginal_band && rep.max_equality_residual <= opt.marginal_band) {
    rep.status = SolveStatus::Marginal;
  } else {
    rep.status = SolveStatus::Infeasible;
  }
  return rep;
}

// ================================================================ primal

namespace {

// Linear functional on (G, F) packed as [lower-tri G, F].
struct PrimalLayout {
  int n = 0, m = 0;
  int size() const { return n * (n + 1) / 2 + m; }
  int g(int i, int j) const {
    if (j > i) std::swap(i, j);
    return i * (i + 1) / 2 + j;
  }
  int f(int k) const { return n * (n + 1) / 2 + k; }
  VectorXd functional(const MatrixXd& A, const VectorXd& b) const {
    VectorXd w = VectorXd::Zero(size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) w[g(i, j)] = (i == j) ? A(i, i) : A(i, j) + A(j, i);
    for (int k = 0; k < m; ++k) w[f(k)] = b[k];
    return w;
  }
  void unpack(const VectorXd& x, MatrixXd& G, VectorXd& F) const {
    G.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) G(i, j) = G(j, i) = x[g(i, j)];
    F = x.tail(m);
  }
};

}  // namespace

PrimalSolution solve_primal(const PrimalSdp& sdp, const SolverOptions& opt) {
  (void)opt;
  sdp.validate();
  PrimalLayout lay{sdp.gram_dimension, sdp.F_dimension};
  const int nx = lay.size();
  const VectorXd obj = lay.functional(sdp.A0, sdp.b0);
  std::vector<VectorXd> rows;
  for (const auto& c : sdp.constraints) rows.push_back(lay.functional(c.A, c.b));

  PrimalSolution sol;
  MatrixXd E(0, nx);
  VectorXd d(0);
  if (sdp.normalization) {
    E = lay.functional(sdp.normalization->A, sdp.normalization->b).transpose();
    d = VectorXd::Constant(1, sdp.normalization->value);
  }
  VectorXd x0;
  MatrixXd N;
  if (!affine_solution(E, d, nx, x0, N)) {
    sol.diagnostic = "normalization row is zero";
    return sol;
  }
  // G block entries as functionals
  auto gram_of = [&](const VectorXd& x) {
    MatrixXd G;
    VectorXd F;
    lay.unpack(x, G, F);
    return G;
  };

  // directions that touch neither G nor any constraint row
  std::vector<Eigen::RowVectorXd> krows;
  for (int i = 0; i < lay.n; ++i)
    for (int j = 0; j <= i; ++j) krows.push_back(N.row(lay.g(i, j)));
  for (const auto& r : rows) krows.push_back(r.transpose() * N);
  MatrixXd K(static_cast<int>(krows.size()), N.cols());
  for (size_t r = 0; r < krows.size(); ++r) K.row(static_cast<int>(r)) = krows[r];
  const MatrixXd W = row_space(K, static_cast<int>(N.cols()));
  const MatrixXd T = N * W;
  const int p = static_cast<int>(T.cols());
  {
    const VectorXd cfull = N.transpose() * obj;
    const VectorXd cflat = cfull - W * (W.transpose() * cfull);
    if (cflat.norm() > 1e-10 * std::max(1.0, cfull.norm())) {
      sol.unbounded = true;
      sol.diagnostic = "objective grows along an unconstrained direction";
      return sol;
    }
  }

  // cone blocks over v: G(v) > 0, rows(v) > 0
  ConeProblem P;
  P.nvar = p;
  const VectorXd cvec = T.transpose() * obj;
  const bool constant_objective = cvec.norm() <= 1e-12 * std::max(1.0, obj.norm());
  {
    std::vector<std::pair<int, MatrixXd>> A;
    for (int j = 0; j < p; ++j) A.emplace_back(j, gram_of(T.col(j)));
    push_block(P, gram_of(x0), A);
  }
  std::vector<int> live_rows;
  for (size_t k = 0; k < rows.size(); ++k) {
    const VectorXd cr = T.transpose() * rows[k];
    const double c0 = rows[k].dot(x0);
    if (cr.cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, rows[k].cwiseAbs().maxCoeff())) {
      if (c0 < -1e-10) {
        sol.diagnostic = "constraint row is a violated constant";
        return sol;
      }
      continue;
    }
    std::vector<std::pair<int, MatrixXd>> A;
    for (int j = 0; j < p; ++j) A.emplace_back(j, MatrixXd::Constant(1, 1, cr[j]));
    push_block(P, MatrixXd::Constant(1, 1, c0), A);
    live_rows.push_back(static_cast<int>(k));
  }

  // phase 1: max s with every block >= s I
  VectorXd v = VectorXd::Zero(p);
  {
    ConeProblem P1 = P;
    P1.nvar = p + 1;
    P1.cost = VectorXd::Zero(p + 1);
    P1.cost[p] = 1.0;
    double worst = kInf;
    for (auto& b : P1.blocks) {
      b.A.emplace_back(p, MatrixXd::Identity(b.dim, b.dim));
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.C, Eigen::EigenvaluesOnly);
      worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    VectorXd y0 = VectorXd::Zero(p + 1);
    y0[p] = -worst + 1.0;
    BarrierOptions bo;
    bo.stop_value = -1.0;
    bo.gap_tol = 1e-10;
    const BarrierResult r1 = barrier_minimize(P1, y0, bo);
    sol.iterations += r1.newton_steps;
    if (!(r1.value < -1e-9) && !r1.unbounded) {
      sol.diagnostic = "no strictly feasible primal point";
      return sol;
    }
    v = r1.y.head(p);
  }

  // main: maximize objective (or minimize trace when the objective is constant)
  if (constant_objective) {
    VectorXd tr = VectorXd::Zero(nx);
    for (int i = 0; i < lay.n; ++i) tr[lay.g(i, i)] = 1.0;
    P.cost = T.transpose() * tr;
  } else {
    P.cost = -cvec;
  }
  BarrierOptions bo;
  bo.gap_tol = opt.gap_tol;
  bo.unbounded_value = -1e8;
  const BarrierResult r = barrier_minimize(P, v, bo);
  sol.iterations += r.newton_steps;
  if (r.unbounded) {
    sol.unbounded = true;
    sol.diagnostic = "primal objective unbounded above";
    const VectorXd x = x0 + T * r.y;
    lay.unpack(x, sol.G, sol.F);
    sol.objective = obj.dot(x);
    return sol;
  }
  VectorXd x = x0 + T * r.y;
  lay.unpack(x, sol.G, sol.F);
  sol.objective = obj.dot(x);
  sol.solved = true;

  // polish: Gauss-Newton on G = Y Y^T over the dominant eigenspace, with
  // near-active rows and the normalization imposed as equations
  if (!constant_objective && r.t_final > 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.G);
    const double gmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    std::vector<int> keep;
    for (int i = 0; i < lay.n; ++i)
      if (gmax > 0.0 && es.eigenvalues()[i] > 1e-6 * gmax) keep.push_back(i);
    const int rk = static_cast<int>(keep.size());
    MatrixXd Y0(lay.n, rk);
    for (int a = 0; a < rk; ++a)
      Y0.col(a) = es.eigenvectors().col(keep[a]) * std::sqrt(es.eigenvalues()[keep[a]]);
    const double rootgap = std::sqrt(1.0 / r.t_final);
    for (double level : {1e3, 1.0}) {
      std::vector<int> act;
      for (int k : live_rows) {
        const double sc = std::max(1.0, rows[k].cwiseAbs().maxCoeff());
        if (rows[k].dot(x) <= level * rootgap * sc) act.push_back(k);
      }
      // equations h(Y, F) = 0
      std::vector<MatrixXd> eqA;
      std::vector<VectorXd> eqb;
      std::vector<double> eqc;
      for (int k : act) {
        eqA.push_back(sdp.constraints[k].A);
        eqb.push_back(sdp.constraints[k].b);
        eqc.push_back(0.0);
      }
      if (sdp.normalization) {
        eqA.push_back(sdp.normalization->A);
        eqb.push_back(sdp.normalization->b);
        eqc.push_back(sdp.normalization->value);
      }
      if (eqA.empty()) break;
      const int ny = lay.n * rk;
      MatrixXd Y = Y0;
      VectorXd F = sol.F;
      double resid = kInf;
      for (int it = 0; it < 50; ++it) {
        const int ne = static_cast<int>(eqA.size());
        VectorXd h(ne);
        MatrixXd J(ne, ny + lay.m);
        for (int e = 0; e < ne; ++e) {
          h[e] = eqb[e].dot(F) + (eqA[e] * Y * Y.transpose()).trace() - eqc[e];
          const MatrixXd dY = 2.0 * eqA[e] * Y;
          J.row(e).head(ny) = Eigen::Map<const Eigen::RowVectorXd>(dY.data(), ny);
          J.row(e).tail(lay.m) = eqb[e].transpose();
        }
        resid = h.lpNorm<Eigen::Infinity>();
        if (resid <= 1e-15 * (1.0 + gmax)) break;
        const VectorXd step = J.completeOrthogonalDecomposition().solve(-h);
        Y += Eigen::Map<const MatrixXd>(step.data(), lay.n, rk);
        F += step.tail(lay.m);
      }
      if (!(resid <= 1e-11 * (1.0 + gmax))) continue;
      const MatrixXd Gp = Y * Y.transpose();
      VectorXd xp(nx);
      for (int i = 0; i < lay.n; ++i)
        for (int j = 0; j <= i; ++j) xp[lay.g(i, j)] = Gp(i, j);
      xp.tail(lay.m) = F;
      bool ok = true;
      for (int k : live_rows)
        if (rows[k].dot(xp) < -1e-11 * std::max(1.0, rows[k].cwiseAbs().maxCoeff())) ok = false;
      const double objp = obj.dot(xp);
      if (objp < sol.objective - 1e-9 * std::max(1.0, std::abs(sol.objective))) ok = false;
      if (ok) {
        sol.G = Gp;
        sol.F = F;
        sol.objective = objp;
        sol.polished = true;
        break;
      }
    }
  }
  return sol;
}

}  // namespace flowcert
