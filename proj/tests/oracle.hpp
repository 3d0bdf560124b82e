// Independent reference routines for tests; no Eigen decompositions here.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

// cyclic Jacobi rotations, returns ascending eigenvalues
inline std::vector<double> jacobi_eigenvalues(Mat a) {
  const int n = static_cast<int>(a.size());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

template <class M>
Mat to_mat(const M& m) {
  Mat out(m.rows(), std::vector<double>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

template <class M>
double max_eigenvalue(const M& m) {
  return jacobi_eigenvalues(to_mat(m)).back();
}

// closed form for [[a, b], [b, c]]
inline std::pair<double, double> eig2(double a, double b, double c) {
  const double m = 0.5 * (a + c), r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return {m - r, m + r};
}

// composite Simpson on [lo, hi]
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 20000) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
