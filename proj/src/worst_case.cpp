#include "flowcert/worst_case.hpp"

#include "flowcert/builders.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace flowcert {

Eigen::MatrixXd gram_factor(const Eigen::MatrixXd& G, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::vector<int> keep;
  for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i)
    if (ev(i) > cutoff) keep.push_back(i);
  Eigen::MatrixXd Y(keep.size(), G.cols());
  for (size_t r = 0; r < keep.size(); ++r) {
    Eigen::VectorXd v = es.eigenvectors().col(keep[r]);
    // deterministic sign: largest-magnitude entry positive
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
    Y.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(keep[r])) * v.transpose();
  }
  return Y;
}

WorstCaseData extract_worst_case(const FlowSpec& flow, const FunctionClass& cls, double tau,
                                 const SolverOptions& opt) {
  if (!std::holds_alternative<GradientFlow>(flow))
    throw std::invalid_argument("extract_worst_case: only the gradient flow has a primal here, got " + flow_name(flow));
  if (cls.smooth()) throw std::invalid_argument("extract_worst_case: needs L = inf");

  WorstCaseData out;
  out.tau = tau;
  out.mu = cls.mu;
  out.primal = solve_primal(build_gf_primal(cls, 1.0, 0.0, tau, true), opt);
  if (out.primal.unbounded)
    throw std::runtime_error("extract_worst_case: primal unbounded at tau = " + std::to_string(tau));
  if (!out.primal.solved) throw std::runtime_error("extract_worst_case: primal solve failed: " + out.primal.diagnostic);
  // with V = 1 fixed the primal stays bounded above the rate; its optimum turns positive instead
  if (out.primal.objective > 1e-6)
    throw std::runtime_error("extract_worst_case: tau = " + std::to_string(tau) + " not certified (primal optimum " +
                             std::to_string(out.primal.objective) + ")");

  out.gram = out.primal.G;
  out.values = out.primal.F.array() - out.primal.F(1);
  const Eigen::MatrixXd Y = gram_factor(out.gram);
  out.rank = static_cast<int>(Y.rows());
  const int d = std::max(out.rank, 1);

  InterpolationTriplet xt, star;
  xt.x = Eigen::VectorXd::Zero(d);
  xt.g = Eigen::VectorXd::Zero(d);
  if (out.rank > 0) {
    xt.x = Y.col(0);
    xt.g = Y.col(1);
    if (xt.x(0) < 0) {  // reflect so the first coordinate of X_t is >= 0
      xt.x(0) = -xt.x(0);
      xt.g(0) = -xt.g(0);
    }
  }
  xt.f = out.values(0);
  star.x = Eigen::VectorXd::Zero(d);
  star.g = Eigen::VectorXd::Zero(d);
  star.f = 0.0;
  out.triplets = {xt, star};
  out.interpolant_samples = build_interpolant(out.triplets, cls);
  return out;
}

double eval_interpolant(const std::vector<InterpolationTriplet>& triplets, double mu, const Eigen::VectorXd& x) {
  double best = -kInf;
  for (const auto& tr : triplets) {
    const Eigen::VectorXd dx = x - tr.x;
    best = std::max(best, tr.f + tr.g.dot(dx) + 0.5 * mu * dx.squaredNorm());
  }
  return best;
}

std::vector<std::pair<double, double>> build_interpolant(const std::vector<InterpolationTriplet>& triplets,
                                                         const FunctionClass& cls, int n_points) {
  if (triplets.empty()) throw std::invalid_argument("build_interpolant: no triplets");
  if (cls.smooth()) throw std::invalid_argument("build_interpolant: only L = inf is supported");
  if (n_points < 2) throw std::invalid_argument("build_interpolant: need at least 2 points");
  const auto dim = triplets[0].x.size();
  for (const auto& tr : triplets)
    if (tr.x.size() != dim || tr.g.size() != dim) throw std::invalid_argument("build_interpolant: dimension mismatch");
  for (size_t i = 0; i < triplets.size(); ++i)
    for (size_t j = 0; j < triplets.size(); ++j) {
      if (i == j) continue;
      const double s = interpolation_slack(cls, triplets[i], triplets[j]);
      if (s < -1e-7)
        throw std::invalid_argument("build_interpolant: triplets " + std::to_string(i) + "," + std::to_string(j) +
                                    " not interpolable (slack " + std::to_string(s) + ")");
    }

  double R = 0.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  if (dim > 0) u(0) = 1.0;
  for (const auto& tr : triplets) {
    const double n = tr.x.norm();
    if (n > R) {
      R = n;
      u = tr.x / n;
    }
  }
  if (R == 0.0) R = 1.0;
  if (dim == 1) u(0) = 1.0;  // keep the natural orientation in 1-D

  std::vector<std::pair<double, double>> samples(static_cast<size_t>(n_points));
  for (int k = 0; k < n_points; ++k) {
    const double s = -R + 2.0 * R * k / (n_points - 1);
    samples[static_cast<size_t>(k)] = {s, eval_interpolant(triplets, cls.mu, s * u)};
  }
  return samples;
}

json WorstCaseData::to_json() const {
  json j;
  j["tau"] = tau;
  j["mu"] = mu;
  j["gram"] = matrix_to_json(gram);
  j["values"] = std::vector<double>(values.data(), values.data() + values.size());
  j["rank"] = rank;
  json tr = json::array();
  for (const auto& t : triplets)
    tr.push_back({{"x", std::vector<double>(t.x.data(), t.x.data() + t.x.size())},
                  {"g", std::vector<double>(t.g.data(), t.g.data() + t.g.size())},
                  {"f", t.f}});
  j["triplets"] = tr;
  j["samples"] = interpolant_samples;
  return j;
}

}  // namespace flowcert
