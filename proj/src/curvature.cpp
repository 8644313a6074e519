#include "geodefect/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "geodefect/error.hpp"

namespace geodefect {

Tensor4 Tensor4::in_frame(const Mat& F) const {
  const int n = n_;
  // Contract one slot at a time: n^5 instead of n^8.
  Tensor4 a(n), b(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += (*this)(i, j, k, l) * F(l, d);
          a(i, j, k, d) = s;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += a(i, j, k, d) * F(k, c);
          b(i, j, c, d) = s;
        }
  for (int i = 0; i < n; ++i)
    for (int bb = 0; bb < n; ++bb)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += b(i, j, c, d) * F(j, bb);
          a(i, bb, c, d) = s;
        }
  Tensor4 out(n);
  for (int aa = 0; aa < n; ++aa)
    for (int bb = 0; bb < n; ++bb)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += a(i, bb, c, d) * F(i, aa);
          out(aa, bb, c, d) = s;
        }
  return out;
}

double CurvatureData::riemann_form(const Vec& x, const Vec& y, const Vec& z, const Vec& w) const {
  const int n = dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x[i] == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (y[j] == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        if (z[k] == 0.0) continue;
        const double xyz = x[i] * y[j] * z[k];
        for (int l = 0; l < n; ++l) s += xyz * riemann(i, j, k, l) * w[l];
      }
    }
  }
  return s;
}

Tensor3 christoffel_first_kind(const MetricJet& jet) {
  const int n = jet.dim();
  if (jet.d1.size() != static_cast<std::size_t>(n))
    throw ConfigError("christoffel symbols need first metric partials");
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        gamma(i, j, k) = 0.5 * (jet.d1[static_cast<std::size_t>(i)](j, k) +
                                jet.d1[static_cast<std::size_t>(j)](i, k) -
                                jet.d1[static_cast<std::size_t>(k)](i, j));
  return gamma;
}

Tensor3 christoffel_first_kind(const MetricField& m, const Vec& x) {
  return christoffel_first_kind(m.jet(x, 1));
}

CurvatureData curvature_from_jet(const Vec& point, const MetricJet& jet) {
  const int n = jet.dim();
  if (jet.d2.size() != static_cast<std::size_t>(n * n))
    throw ConfigError("curvature needs second metric partials");
  CurvatureData c;
  c.point = point;
  c.g = jet.g;
  Eigen::LLT<Mat> llt(jet.g);
  if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite");
  c.ginv = symmetrize(llt.solve(Mat::Identity(n, n)));
  c.gamma = christoffel_first_kind(jet);

  // d_i Gamma_{jk,l} = 1/2 (d_i d_j g_kl + d_i d_k g_jl - d_i d_l g_jk)
  c.gamma_partial = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          c.gamma_partial(i, j, k, l) =
              0.5 * (jet.second(i, j)(k, l) + jet.second(i, k)(j, l) - jet.second(i, l)(j, k));

  // Gamma with the last index raised: up(i,j,s) = g^{s t} Gamma_{ij,t}.
  Tensor3 up(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int s = 0; s < n; ++s) {
        double acc = 0.0;
        for (int t = 0; t < n; ++t) acc += c.ginv(s, t) * c.gamma(i, j, t);
        up(i, j, s) = acc;
      }

  // R_ijkl = d_i Gamma_{jk,l} - d_j Gamma_{ik,l}
  //          + g^{st} (Gamma_{ik,s} Gamma_{jl,t} - Gamma_{jk,s} Gamma_{il,t})
  c.riemann = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double quad = 0.0;
          for (int s = 0; s < n; ++s)
            quad += up(i, k, s) * c.gamma(j, l, s) - up(j, k, s) * c.gamma(i, l, s);
          c.riemann(i, j, k, l) = c.gamma_partial(i, j, k, l) - c.gamma_partial(j, i, k, l) + quad;
        }
  return c;
}

CurvatureData riemann_tensor(const MetricField& m, const Vec& x) {
  const Vec p = m.chart().reduce(x);
  return curvature_from_jet(p, m.jet(p, 2));
}

Mat jacobi_form(const CurvatureData& c, const Vec& v) {
  const int n = c.dim();
  Mat L = Mat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int j = 0; j < n; ++j) {
      if (v[j] == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        const double vv = v[j] * v[k];
        if (vv == 0.0) continue;
        for (int d = 0; d < n; ++d) L(b, d) += vv * c.riemann(b, j, k, d);
      }
    }
  return L;
}

Mat jacobi_operator(const CurvatureData& c, const Vec& v) {
  if (!(v.norm() > 0.0)) throw ConfigError("jacobi operator needs a nonzero vector");
  // Column b of J holds the components a of R(E_b, v)v: J(a, b) = g^{ad} L(b, d).
  return c.ginv * jacobi_form(c, v).transpose();
}

double sectional(const CurvatureData& c, const Vec& x, const Vec& y) {
  const double xx = x.dot(c.g * x), yy = y.dot(c.g * y), xy = x.dot(c.g * y);
  const double area = xx * yy - xy * xy;
  if (!(area > 1e-14 * xx * yy)) throw NumericalError("sectional curvature of a degenerate plane");
  return c.riemann_form(x, y, y, x) / area;
}

double symmetry_residual(const CurvatureData& c) {
  const int n = c.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(c.gamma(i, j, k) - c.gamma(j, i, k)));
  const Tensor4& R = c.riemann;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double r = R(i, j, k, l);
          worst = std::max({worst, std::abs(r + R(j, i, k, l)), std::abs(r + R(i, j, l, k)),
                            std::abs(r - R(k, l, i, j)),
                            std::abs(r + R(j, k, i, l) + R(k, i, j, l))});
        }
  return worst;
}

}  // namespace geodefect
