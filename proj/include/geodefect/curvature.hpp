#pragma once

#include <vector>

#include "geodefect/manifold.hpp"

namespace geodefect {

// Dense rank-3/rank-4 arrays over {0..n-1}, row-major in index order.
class Tensor3 {
 public:
  explicit Tensor3(int n = 0) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t idx(int i, int j, int k) const { return static_cast<std::size_t>((i * n_ + j) * n_ + k); }
  int n_;
  std::vector<double> data_;
};

class Tensor4 {
 public:
  explicit Tensor4(int n = 0) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}
  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[idx(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[idx(i, j, k, l)]; }
  const std::vector<double>& data() const { return data_; }

  // T(a,b,c,d) = sum T(i,j,k,l) F(i,a) F(j,b) F(k,c) F(l,d): components in
  // the frame given by the columns of F.
  Tensor4 in_frame(const Mat& F) const;

 private:
  std::size_t idx(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * n_ + j) * n_ + k) * n_ + l);
  }
  int n_;
  std::vector<double> data_;
};

// Curvature quantities at one point, all in the coordinate frame.
//   gamma(i,j,k)        = Gamma_{ij,k} = g(nabla_i d_j, d_k)
//   gamma_partial(i,j,k,l) = d_i Gamma_{jk,l}
//   riemann(i,j,k,l)    = g(R(d_i, d_j) d_k, d_l), so R(x,y,y,x) is the
//                         sectional numerator.
struct CurvatureData {
  Vec point;
  Mat g;
  Mat ginv;
  Tensor3 gamma;
  Tensor4 gamma_partial;
  Tensor4 riemann;

  int dim() const { return static_cast<int>(g.rows()); }
  // R(x, y, z, w) for vectors.
  double riemann_form(const Vec& x, const Vec& y, const Vec& z, const Vec& w) const;
};

Tensor3 christoffel_first_kind(const MetricJet& jet);
Tensor3 christoffel_first_kind(const MetricField& m, const Vec& x);

// Full curvature data from the 2-jet of the metric. d_i Gamma comes straight
// from second metric partials, not from differencing Gamma.
CurvatureData curvature_from_jet(const Vec& point, const MetricJet& jet);
CurvatureData riemann_tensor(const MetricField& m, const Vec& x);

// Jacobi operator R(., v)v as an endomorphism matrix J (J(:, b) holds the
// components of R(E_b, v)v). G*J is symmetric.
Mat jacobi_operator(const CurvatureData& c, const Vec& v);

// Symmetric bilinear form L(b, c) = R(E_b, v, v, E_c) = (G J)(c, b).
Mat jacobi_form(const CurvatureData& c, const Vec& v);

double sectional(const CurvatureData& c, const Vec& x, const Vec& y);

// Largest violation of Gamma symmetry, the Riemann symmetries, and the
// first Bianchi identity.
double symmetry_residual(const CurvatureData& c);

}  // namespace geodefect
