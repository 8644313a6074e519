#pragma once

#include <functional>

#include <nlohmann/json.hpp>

#include "geodefect/curvature.hpp"
#include "geodefect/manifold.hpp"

namespace geodefect {

// Tolerance set shared by the defect, scanner and deformation code. The
// partially-geodesic threshold depends on the derivative backend.
struct Tolerances {
  double orthonormal = 1e-10;
  double symmetry = 1e-8;
  double partially_geodesic = 1e-7;

  static Tolerances analytic() { return {}; }
  static Tolerances finite_difference() { return {1e-10, 1e-4, 1e-3}; }
  static Tolerances for_backend(const DerivativeBackend& b) {
    return b.mode == DerivativeBackend::Mode::analytic ? analytic() : finite_difference();
  }
};

// l-dimensional subspace of the tangent space at `point`, with a
// G(point)-orthonormal basis in the columns of `basis`.
struct TangentPlane {
  Vec point;
  Mat basis;

  int rank() const { return static_cast<int>(basis.cols()); }
  int ambient() const { return static_cast<int>(basis.rows()); }
};

// Orthonormalizes the columns of V with respect to the metric at `point`.
// Throws ConfigError unless 2 <= l <= n - 1.
TangentPlane make_plane(const MetricField& m, const Vec& point, const Mat& V);
TangentPlane make_plane(const Mat& G, const Vec& point, const Mat& V);

struct OffBlock {
  double value = 0.0;
  Vec argmax;   // G-unit vector of the plane attaining the value
  Vec witness;  // G-unit normal direction receiving the largest component
};

// Max over G-unit w in the plane of |Phi(w)^perp|_G for the G-self-adjoint
// endomorphism J (column convention: J(:, b) is the image of E_b). Computed
// as the top singular value of Q^T G J B with Q a G-orthonormal basis of the
// complement. Throws NumericalError if G*J is not symmetric to sym_tol
// (relative to its largest entry).
OffBlock offblock_invariant(const Mat& J, const Mat& G, const Mat& B, double sym_tol = 1e-8);

// Literal maximization over `density` unit vectors of the plane (a half
// circle for l = 2, a Fibonacci hemisphere for l = 3, a product grid in
// hyperspherical angles otherwise). Test oracle.
double offblock_oracle(const Mat& J, const Mat& G, const Mat& B, int density);

// Deterministic unit vectors covering the unit sphere of R^l up to sign.
std::vector<Vec> sphere_grid(int l, int density);

struct SphereMax {
  Vec coef;  // unit, first clearly nonzero coordinate positive
  double value = 0.0;
  int evaluations = 0;
};

// Maximizes an even function on the unit sphere of R^l: grid search (ties
// to the lexicographically smallest point), then a simplex search in the
// tangent chart around the best grid point.
SphereMax maximize_on_sphere(int l, int density, int refine_evals, const std::function<double(const Vec&)>& f);

struct DefectOptions {
  int grid_density = 0;    // 0 picks a default by plane rank
  int refine_evals = 200;  // simplex budget after the grid search
  double sym_tol = 1e-8;

  int density_for(int l) const;
};

struct DefectReport {
  TangentPlane plane;
  double defect = 0.0;
  Vec vstar;
  Vec witness;
  int grid_density = 0;
  int refine_evaluations = 0;

  nlohmann::json to_json() const;
};

// max over G-unit v in P of the off-block invariant of the Jacobi operator
// R(., v)v, by grid search on the unit sphere of P followed by simplex
// refinement from the best grid point (ties to the lexicographically
// smallest coordinates).
DefectReport plane_defect(const CurvatureData& c, const TangentPlane& P, const DefectOptions& opt = {});
DefectReport plane_defect(const MetricField& m, const TangentPlane& P, const DefectOptions& opt = {});

// Off-block invariant of R_v for a single v in P. v is used as given.
double invariant_at(const CurvatureData& c, const TangentPlane& P, const Vec& v);

// Evaluates the objective v -> I_{R_v}(P) for v = B c, |c| = 1, through
// frame components of the curvature tensor.
class DefectObjective {
 public:
  DefectObjective(const CurvatureData& c, const TangentPlane& P);

  // Top singular value for plane coordinates `coef` (need not be unit).
  double operator()(const Vec& coef) const;
  // Same, also returning right/left singular vectors in frame coordinates.
  double evaluate(const Vec& coef, Vec* right, Vec* left) const;

  const Mat& complement() const { return complement_; }
  int rank() const { return l_; }

 private:
  Mat offblock(const Vec& coef) const;

  int l_ = 0;
  int codim_ = 0;
  Mat complement_;
  std::vector<double> frame_;  // R(B_a, B_al, B_be, Q_m), indexed [a][al][be][m]
};

}  // namespace geodefect
