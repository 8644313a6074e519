#include "geodefect/defect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "geodefect/error.hpp"
#include "geodefect/nelder_mead.hpp"

namespace geodefect {

namespace {

// Flip so the first clearly nonzero coordinate is positive (v and -v span
// the same direction and give the same invariant).
Vec canonical_sign(Vec v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

Vec top_singular(const Mat& M, double* sigma, Vec* left) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  *sigma = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  if (left) *left = svd.matrixU().col(0);
  return svd.matrixV().col(0);
}

}  // namespace

TangentPlane make_plane(const Mat& G, const Vec& point, const Mat& V) {
  const auto n = G.rows();
  const auto l = V.cols();
  if (V.rows() != n) throw ConfigError("plane basis has the wrong ambient dimension");
  if (l < 2 || l > n - 1) throw ConfigError("plane rank must lie in [2, n-1]");
  return TangentPlane{point, gram_schmidt_g(G, V)};
}

TangentPlane make_plane(const MetricField& m, const Vec& point, const Mat& V) {
  const Vec p = m.chart().reduce(point);
  return make_plane(m.metric_at(p), p, V);
}

std::vector<Vec> sphere_grid(int l, int density) {
  std::vector<Vec> out;
  if (density < 1) throw ConfigError("sphere grid density must be positive");
  const double pi = std::numbers::pi;
  if (l == 1) {
    out.push_back(Vec::Ones(1));
  } else if (l == 2) {
    for (int k = 0; k < density; ++k) {
      const double t = pi * k / density;
      Vec c(2);
      c << std::cos(t), std::sin(t);
      out.push_back(c);
    }
  } else if (l == 3) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < density; ++k) {
      const double z = 1.0 - (k + 0.5) / density;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      Vec c(3);
      c << r * std::cos(phi), r * std::sin(phi), z;
      out.push_back(c);
    }
  } else {
    const int angles = l - 1;
    const int m = std::max(2, static_cast<int>(std::lround(std::pow(density, 1.0 / angles))));
    std::vector<int> idx(static_cast<std::size_t>(angles), 0);
    while (true) {
      Vec c(l);
      double sin_prod = 1.0;
      for (int a = 0; a < angles; ++a) {
        const double theta = pi * (idx[static_cast<std::size_t>(a)] + 0.5) / m;
        c[a] = sin_prod * std::cos(theta);
        sin_prod *= std::sin(theta);
      }
      c[l - 1] = sin_prod;
      out.push_back(c);
      int a = 0;
      while (a < angles && ++idx[static_cast<std::size_t>(a)] == m) idx[static_cast<std::size_t>(a++)] = 0;
      if (a == angles) break;
    }
  }
  return out;
}

OffBlock offblock_invariant(const Mat& J, const Mat& G, const Mat& B, double sym_tol) {
  const Mat GJ = G * J;
  const double scale = std::max(1.0, GJ.cwiseAbs().maxCoeff());
  if ((GJ - GJ.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw NumericalError("offblock invariant: operator is not self-adjoint");
  if (B.cols() >= B.rows()) throw NumericalError("offblock invariant: plane has no complement");
  const Mat Q = orthogonal_complement_g(G, B);
  const Mat M = Q.transpose() * GJ * B;
  OffBlock out;
  Vec left;
  const Vec right = canonical_sign(top_singular(M, &out.value, &left));
  out.argmax = B * right;
  Vec u = left;
  // Keep the witness consistent with the sign chosen for the argmax.
  if ((M * right).dot(u) < 0.0) u = -u;
  out.witness = Q * u;
  return out;
}

double offblock_oracle(const Mat& J, const Mat& G, const Mat& B, int density) {
  double best = 0.0;
  for (const Vec& c : sphere_grid(static_cast<int>(B.cols()), density)) {
    const Vec w = B * c;
    const Vec image = J * w;
    const Vec perp = image - B * (B.transpose() * G * image);
    best = std::max(best, std::sqrt(std::max(0.0, perp.dot(G * perp))));
  }
  return best;
}

int DefectOptions::density_for(int l) const {
  if (grid_density > 0) return grid_density;
  if (l == 2) return 48;
  if (l == 3) return 256;
  return 1296;
}

nlohmann::json DefectReport::to_json() const {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  std::vector<std::vector<double>> basis;
  for (Eigen::Index j = 0; j < plane.basis.cols(); ++j) basis.push_back(vec(plane.basis.col(j)));
  return nlohmann::json{{"point", vec(plane.point)},
                        {"basis", basis},
                        {"defect", defect},
                        {"vstar", vec(vstar)},
                        {"witness", vec(witness)},
                        {"meta", {{"grid_density", grid_density}, {"refine_evaluations", refine_evaluations}}}};
}

DefectObjective::DefectObjective(const CurvatureData& c, const TangentPlane& P)
    : l_(P.rank()), codim_(P.ambient() - P.rank()) {
  const int n = P.ambient();
  complement_ = orthogonal_complement_g(c.g, P.basis);
  Mat frame(n, n);
  frame << P.basis, complement_;
  const Tensor4 R = c.riemann.in_frame(frame);
  frame_.resize(static_cast<std::size_t>(l_ * l_ * l_ * codim_));
  std::size_t k = 0;
  for (int a = 0; a < l_; ++a)
    for (int al = 0; al < l_; ++al)
      for (int be = 0; be < l_; ++be)
        for (int m = 0; m < codim_; ++m) frame_[k++] = R(a, al, be, l_ + m);
}

Mat DefectObjective::offblock(const Vec& coef) const {
  Mat M = Mat::Zero(codim_, l_);
  std::size_t k = 0;
  for (int a = 0; a < l_; ++a)
    for (int al = 0; al < l_; ++al)
      for (int be = 0; be < l_; ++be) {
        const double cc = coef[al] * coef[be];
        for (int m = 0; m < codim_; ++m) M(m, a) += cc * frame_[k++];
      }
  return M;
}

double DefectObjective::operator()(const Vec& coef) const {
  const Mat M = offblock(coef);
  if (M.rows() == 1 || M.cols() == 1) return M.norm();
  return Eigen::JacobiSVD<Mat>(M).singularValues()[0];
}

double DefectObjective::evaluate(const Vec& coef, Vec* right, Vec* left) const {
  double sigma = 0.0;
  const Vec r = top_singular(offblock(coef), &sigma, left);
  if (right) *right = r;
  return sigma;
}

double invariant_at(const CurvatureData& c, const TangentPlane& P, const Vec& v) {
  const Mat J = jacobi_operator(c, v);
  return offblock_invariant(J, c.g, P.basis).value;
}

SphereMax maximize_on_sphere(int l, int density, int refine_evals, const std::function<double(const Vec&)>& f) {
  SphereMax out;
  out.coef = Vec::Zero(l);
  out.value = -std::numeric_limits<double>::infinity();
  for (const Vec& coef : sphere_grid(l, density)) {
    const Vec cand = canonical_sign(coef);
    const double val = f(cand);
    ++out.evaluations;
    if (val > out.value || (val == out.value && lex_less(cand, out.coef))) {
      out.value = val;
      out.coef = cand;
    }
  }
  if (refine_evals > 0 && out.value > 0.0 && l > 1) {
    const Vec start = out.coef;
    const Mat tangent = orthogonal_complement_g(Mat::Identity(l, l), start);
    auto chart = [&](const Vec& u) { return Vec((start + tangent * u).normalized()); };
    const double step = std::numbers::pi / std::pow(static_cast<double>(density), 1.0 / (l - 1));
    const auto res = nelder_mead([&](const Vec& u) { return -f(chart(u)); }, Vec::Zero(l - 1), 0.5 * step,
                                 refine_evals, 1e-15 * std::max(1.0, out.value));
    out.evaluations += res.evaluations;
    if (-res.value > out.value) {
      out.value = -res.value;
      out.coef = canonical_sign(chart(res.x));
    }
  }
  return out;
}

DefectReport plane_defect(const CurvatureData& c, const TangentPlane& P, const DefectOptions& opt) {
  const DefectObjective objective(c, P);
  const int density = opt.density_for(P.rank());
  const SphereMax best = maximize_on_sphere(P.rank(), density, opt.refine_evals, objective);

  DefectReport report;
  report.plane = P;
  report.grid_density = density;
  report.refine_evaluations = best.evaluations;
  Vec right, left;
  report.defect = objective.evaluate(best.coef, &right, &left);
  report.vstar = P.basis * best.coef;
  report.witness = objective.complement() * canonical_sign(left);
  return report;
}

DefectReport plane_defect(const MetricField& m, const TangentPlane& P, const DefectOptions& opt) {
  return plane_defect(riemann_tensor(m, P.point), P, opt);
}

}  // namespace geodefect
