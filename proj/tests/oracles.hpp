#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the curvature or defect code under test.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Central-difference Jacobian of an embedding R^n -> R^m.
inline Mat jacobian(const std::function<Vec(const Vec&)>& X, const Vec& x, double h = 1e-6) {
  const Vec f0 = X(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    J.col(i) = (X(a) - X(b)) / (2.0 * h);
  }
  return J;
}

// Induced metric J^T J of an embedding.
inline Mat pullback(const std::function<Vec(const Vec&)>& X, const Vec& x, double h = 1e-6) {
  const Mat J = jacobian(X, x, h);
  return J.transpose() * J;
}

// Fourth-order central difference of a matrix field along axis i.
inline Mat partial(const std::function<Mat(const Vec&)>& g, const Vec& x, int i, double h) {
  Vec e = Vec::Zero(x.size());
  e[i] = h;
  return (-g(x + 2 * e) + 8.0 * g(x + e) - 8.0 * g(x - e) + g(x - 2 * e)) / (12.0 * h);
}

// Riemann tensor R(d_i, d_j, d_k, d_l) = g(R(d_i,d_j)d_k, d_l) (sectional
// curvature R(x,y,y,x)/|x^y|^2) from nested finite differences of the metric
// alone: Christoffel symbols of the second kind by differencing g, then
// R^m_{ijk} = d_i Gamma^m_{jk} - d_j Gamma^m_{ik} + Gamma^m_{ip}Gamma^p_{jk} - Gamma^m_{jp}Gamma^p_{ik}.
inline std::vector<double> riemann_fd(const std::function<Mat(const Vec&)>& g, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  auto gamma2 = [&](const Vec& y) {
    std::vector<Mat> dg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) dg[static_cast<std::size_t>(i)] = partial(g, y, i, h);
    const Mat ginv = g(y).inverse();
    // G[m](j,k) = Gamma^m_{jk}
    std::vector<Mat> G(static_cast<std::size_t>(n), Mat::Zero(n, n));
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l)
            s += ginv(m, l) * (dg[j](k, l) + dg[k](j, l) - dg[l](j, k));
          G[m](j, k) = 0.5 * s;
        }
    return G;
  };
  const auto G = gamma2(x);
  // dG[i][m](j,k) = d_i Gamma^m_{jk}
  std::vector<std::vector<Mat>> dG(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = h;
    const auto a = gamma2(x + e), b = gamma2(x - e);
    for (int m = 0; m < n; ++m) dG[i].push_back((a[m] - b[m]) / (2.0 * h));
  }
  const Mat g0 = g(x);
  std::vector<double> R(static_cast<std::size_t>(n * n * n * n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec up(n);  // R^m_{ijk}: (R(d_i,d_j)d_k)^m
        for (int m = 0; m < n; ++m) {
          double s = dG[i][m](j, k) - dG[j][m](i, k);
          for (int p = 0; p < n; ++p) s += G[m](i, p) * G[p](j, k) - G[m](j, p) * G[p](i, k);
          up[m] = s;
        }
        const Vec low = g0 * up;
        for (int l = 0; l < n; ++l) R[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] = low[l];
      }
  return R;
}

inline double at(const std::vector<double>& R, int n, int i, int j, int k, int l) {
  return R[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
}

}  // namespace oracle
