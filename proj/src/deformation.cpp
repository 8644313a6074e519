#include "geodefect/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

#include "geodefect/error.hpp"
#include "geodefect/random.hpp"
#include "geodefect/scanner.hpp"

namespace geodefect {

namespace {

constexpr double kWindowLo = std::numbers::sqrt2 * 2.01;
constexpr double kWindowHi = 3.99;

double bump_eta(double K, double eps) { return eps / (4.0 * K); }

// exp(-1/t) and its first two derivatives; zero for t <= 0.
std::array<double, 3> mollifier(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  const double e = std::exp(-1.0 / t);
  const double t2 = t * t;
  return {e, e / t2, e * (1.0 / (t2 * t2) - 2.0 / (t2 * t))};
}

std::vector<double> vec_of(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

// Uniform point of the ball of radius r in R^n.
Vec ball_point(Rng& rng, int n, double r) {
  Vec u = rng.gaussian(n, 1).col(0);
  u.normalize();
  return u * (r * std::pow(rng.uniform(), 1.0 / n));
}

double spectral_norm(const Mat& m) { return Eigen::JacobiSVD<Mat>(m).singularValues()[0]; }

// Largest factor in (0, 1] that keeps a ball of x-radius r around p clear of
// chart boundaries and short of half a period on periodic axes.
double support_fit(const Chart& chart, const Vec& p, double r) {
  double factor = 1.0;
  for (int i = 0; i < chart.dim(); ++i) {
    const double room = chart.periodic(i) ? 0.45 * chart.period(i)
                                          : 0.95 * std::min(p[i] - chart.lo()[i], chart.hi()[i] - p[i]);
    factor = std::min(factor, room / r);
  }
  return factor;
}

void check_placement(const Chart& chart, const DeformationSpec& spec) {
  const double r = spec.f.cutoff.outer() * spectral_norm(spec.frame.frame);
  for (int i = 0; i < chart.dim(); ++i) {
    const bool fits = chart.periodic(i)
                          ? r < 0.5 * chart.period(i)
                          : r < std::min(spec.frame.point[i] - chart.lo()[i], chart.hi()[i] - spec.frame.point[i]);
    if (!fits) {
      std::ostringstream os;
      os << "deformation support (x-radius " << r << ") does not fit the chart along axis " << i;
      throw ConfigError(os.str());
    }
  }
}

MetricField assemble(const MetricField& base, const std::vector<DeformationSpec>& specs) {
  const int n = base.dim();
  const Chart chart = base.chart();
  MetricFn value = [base, specs, n](const Vec& x) {
    MetricJet j;
    j.g = base.raw(x);
    for (const auto& s : specs) s.add_to(base.chart(), x, 0, &j);
    (void)n;
    return j.g;
  };
  JetFn jet = [base, specs](const Vec& x, int order) {
    MetricJet j = base.jet(x, order);
    for (const auto& s : specs) s.add_to(base.chart(), x, order, &j);
    return j;
  };
  return MetricField(chart, value, DerivativeBackend::analytic(), jet);
}

// Positive definiteness of the summed metric on the support of `spec`.
bool spd_on_support(const MetricField& m, const DeformationSpec& spec, int samples) {
  Rng rng(mix_seed(0x5eed, static_cast<std::uint64_t>(samples)));
  const int n = m.dim();
  for (int k = 0; k <= samples; ++k) {
    const Vec y = k == 0 ? Vec::Zero(n) : ball_point(rng, n, spec.f.cutoff.outer());
    const Vec x = m.chart().reduce(spec.frame.point + spec.frame.frame * y);
    const Mat g = m.raw(x);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success || !g.allFinite()) return false;
  }
  return true;
}

}  // namespace

double BumpPair::h(int which, double t, int order) const {
  const double u = t / eta;
  const double A = amplitude();
  const double s = std::sin(u), c = std::cos(u);
  if (which == 0) {
    switch (order) {
      case 0: return A * s;
      case 1: return A / eta * c;
      default: return -A / (eta * eta) * s;
    }
  }
  switch (order) {
    case 0: return A * c;
    case 1: return -A / eta * s;
    default: return -A / (eta * eta) * c;
  }
}

double BumpPair::c1_norm() const { return std::max(amplitude(), amplitude() / eta); }

BumpPair build_bump_pair(double K, double eps) {
  if (!(K > 1.0)) throw ConfigError("bump pair needs K > 1");
  if (!(eps > 0.0)) throw ConfigError("bump pair needs eps > 0");
  BumpPair b{K, eps, 0.5 * (kWindowLo + kWindowHi), bump_eta(K, eps)};
  const int samples = 10000;
  const double period = 2.0 * std::numbers::pi * b.eta;
  for (int k = 0; k < samples; ++k) {
    const double t = period * k / samples;
    const double d2 = std::max(std::abs(b.h(0, t, 2)), std::abs(b.h(1, t, 2)));
    if (!(d2 > 2.01 * K && d2 < 3.99 * K)) throw NumericalError("bump pair: second-derivative window violated");
    for (int i = 0; i < 2; ++i)
      if (!(std::abs(b.h(i, t, 0)) < eps && std::abs(b.h(i, t, 1)) < eps))
        throw NumericalError("bump pair: C^1 bound violated");
  }
  return b;
}

std::array<double, 3> smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const auto a = mollifier(t);
  const auto m = mollifier(1.0 - t);
  const std::array<double, 3> b{m[0], -m[1], m[2]};
  const double D = a[0] + b[0], D1 = a[1] + b[1], D2 = a[2] + b[2];
  const double num1 = a[1] * D - a[0] * D1;
  return {a[0] / D, num1 / (D * D), (a[2] * D - a[0] * D2) / (D * D) - 2.0 * num1 * D1 / (D * D * D)};
}

std::array<double, 3> CutoffSpec::profile(double r) const {
  if (r <= rho) return {1.0, 0.0, 0.0};
  if (r >= outer()) return {0.0, 0.0, 0.0};
  const auto s = smooth_step((outer() - r) / pad);
  return {s[0], -s[1] / pad, s[2] / (pad * pad)};
}

double CutoffSpec::value(const Vec& y) const { return profile(y.norm())[0]; }

void CutoffSpec::eval(const Vec& y, double* chi, Vec* grad, Mat* hess) const {
  const auto n = y.size();
  const double r = y.norm();
  const auto p = profile(r);
  if (chi) *chi = p[0];
  const bool flat = r <= rho || r >= outer();
  if (grad) *grad = flat ? Vec(Vec::Zero(n)) : Vec(p[1] / r * y);
  if (hess) {
    if (flat) {
      *hess = Mat::Zero(n, n);
    } else {
      const Vec u = y / r;
      *hess = p[2] * u * u.transpose() + p[1] / r * (Mat::Identity(n, n) - u * u.transpose());
    }
  }
}

CutoffSpec build_cutoff(double rho, double pad) {
  if (!(rho > 0.0) || !(pad > 0.0)) throw ConfigError("cutoff radii must be positive");
  CutoffSpec c{rho, pad, 1.0};
  const int samples = 10000;
  for (int k = 0; k <= samples; ++k) {
    const double r = rho + pad * k / samples;
    const auto p = c.profile(r);
    c.c2_bound = std::max({c.c2_bound, std::abs(p[1]), std::abs(p[2]), std::abs(p[1]) / r});
  }
  return c;
}

std::array<FPair::Jet, 2> FPair::eval(const Vec& y, int order) const {
  const auto n = y.size();
  std::array<Jet, 2> out;
  double chi = 0.0;
  Vec dchi;
  Mat hchi;
  cutoff.eval(y, &chi, &dchi, &hchi);
  const bool off = y.norm() >= cutoff.outer();
  for (int i = 0; i < 2; ++i) {
    Jet& f = out[static_cast<std::size_t>(i)];
    f.grad = Vec::Zero(n);
    f.hess = Mat::Zero(n, n);
    if (off) continue;
    const double t = t_of(y);
    const double h = bump.h(i, t, 0);
    f.value = chi * h;
    if (order < 1) continue;
    const double h1 = bump.h(i, t, 1);
    f.grad = h * dchi;
    f.grad[0] += chi * h1;
    if (order < 2) continue;
    f.hess = h * hchi;
    f.hess.row(0) += h1 * dchi.transpose();
    f.hess.col(0) += h1 * dchi;
    f.hess(0, 0) += chi * bump.h(i, t, 2);
  }
  return out;
}

FPairCheck check_f_pair(const FPair& f, int n, int samples) {
  FPairCheck c;
  c.min_inner = std::numeric_limits<double>::infinity();
  Rng rng(12345);
  const double rho = f.cutoff.rho, outer = f.cutoff.outer();
  for (int k = 0; k < samples; ++k) {
    Vec y;
    int region = k % 3;  // inner ball, transition shell, outside
    if (region == 0) {
      y = ball_point(rng, n, rho);
    } else {
      Vec u = rng.gaussian(n, 1).col(0);
      u.normalize();
      y = u * (region == 1 ? rng.uniform(rho, outer) : rng.uniform(outer, 1.5 * outer));
    }
    const auto jets = f.eval(y, 2);
    double d11 = 0.0;
    for (const auto& jt : jets) {
      d11 = std::max(d11, std::abs(jt.hess(0, 0)));
      double mixed = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 1; b < n; ++b) mixed = std::max(mixed, std::abs(jt.hess(a, b)));
      const double c1 = std::max(std::abs(jt.value), jt.grad.cwiseAbs().maxCoeff());
      c.max_mixed = std::max(c.max_mixed, mixed);
      c.max_c1 = std::max(c.max_c1, c1);
      if (region == 2 && (jt.value != 0.0 || !jt.grad.isZero(0.0) || !jt.hess.isZero(0.0))) c.outer_zero = false;
    }
    c.max_d11 = std::max(c.max_d11, d11);
    if (region == 0) c.min_inner = std::min(c.min_inner, d11);
    ++c.samples;
  }
  c.inner_lower = c.min_inner > 2.0 * f.K;
  c.global_upper = c.max_d11 <= 4.0 * f.K;
  c.mixed_small = c.max_mixed < f.eps && c.max_c1 < f.eps;
  return c;
}

FPair build_f_pair(double K, double eps, const CutoffSpec& cutoff, int n, double phase_fraction) {
  if (!(eps > 0.0)) throw ConfigError("f pair needs eps > 0");
  double inner = eps / (2.0 * cutoff.c2_bound);
  for (int halvings = 0; halvings <= 30; ++halvings) {
    const BumpPair bump = build_bump_pair(K, inner);
    FPair f{bump, cutoff, K, eps, halvings, phase_fraction * std::numbers::pi * bump.eta};
    if (check_f_pair(f, n).ok()) return f;
    inner *= 0.5;
  }
  throw NumericalError("f pair: sampled properties still fail after 30 halvings of the internal epsilon");
}

AdaptedFrame frame_from_columns(const Vec& point, int l, bool hypersurface, const Mat& frame) {
  if (frame.rows() != frame.cols() || frame.rows() != point.size()) throw ConfigError("adapted frame: bad shape");
  return AdaptedFrame{point, l, hypersurface, frame, frame.inverse()};
}

AdaptedFrame adapted_frame(const MetricField& m, const TangentPlane& P) {
  const int n = m.dim();
  const int l = P.rank();
  if (n < 4) throw ConfigError("the deformation needs dimension at least 4");
  if (l < 2 || l > n - 1) throw ConfigError("plane rank must lie in [2, n-1]");
  const Vec p = m.chart().reduce(P.point);
  const Mat G = m.metric_at(p);
  const Mat B = gram_schmidt_g(G, P.basis);
  const Mat Q = orthogonal_complement_g(G, B);
  const bool hyper = l == n - 1;
  Mat quad(n, 4);
  if (hyper)
    quad << B.col(0), Q.col(0), B.col(1), B.col(2);
  else
    quad << B.col(0), B.col(1), Q.col(0), Q.col(1);
  Mat frame(n, n);
  frame.leftCols(4) = quad;
  if (n > 4) frame.rightCols(n - 4) = orthogonal_complement_g(G, quad);
  return frame_from_columns(p, l, hyper, frame);
}

nlohmann::json DeformationSpec::to_json() const {
  std::vector<std::vector<double>> cols;
  for (Eigen::Index j = 0; j < frame.frame.cols(); ++j) cols.push_back(vec_of(frame.frame.col(j)));
  return nlohmann::json{{"center", vec_of(frame.point)},
                        {"l", frame.l},
                        {"hypersurface", frame.hypersurface},
                        {"frame", cols},
                        {"K", f.K},
                        {"eps", f.eps},
                        {"bump_eps", f.bump.eps},
                        {"delta", f.bump.delta()},
                        {"four_minus_delta", f.bump.four_minus_delta},
                        {"eta", f.bump.eta},
                        {"rho", f.cutoff.rho},
                        {"pad", f.cutoff.pad},
                        {"c2_bound", f.cutoff.c2_bound},
                        {"halvings", f.halvings},
                        {"phase", f.phase},
                        {"s", s}};
}

DeformationSpec DeformationSpec::from_json(const nlohmann::json& j) {
  try {
    const Vec center = vec_from(j.at("center"));
    const auto cols = j.at("frame").get<std::vector<std::vector<double>>>();
    const auto n = center.size();
    if (static_cast<Eigen::Index>(cols.size()) != n) throw ConfigError("deformation spec: frame has the wrong size");
    Mat F(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& col = cols[static_cast<std::size_t>(c)];
      if (static_cast<Eigen::Index>(col.size()) != n) throw ConfigError("deformation spec: frame has the wrong size");
      for (Eigen::Index r = 0; r < n; ++r) F(r, c) = col[static_cast<std::size_t>(r)];
    }
    DeformationSpec spec;
    spec.frame = frame_from_columns(center, j.at("l").get<int>(), j.at("hypersurface").get<bool>(), F);
    const double K = j.at("K").get<double>();
    const double bump_eps = j.at("bump_eps").get<double>();
    spec.f.K = K;
    spec.f.eps = j.at("eps").get<double>();
    spec.f.halvings = j.at("halvings").get<int>();
    spec.f.phase = j.value("phase", 0.0);
    spec.f.bump = BumpPair{K, bump_eps, j.at("four_minus_delta").get<double>(), bump_eta(K, bump_eps)};
    spec.f.cutoff = CutoffSpec{j.at("rho").get<double>(), j.at("pad").get<double>(), j.at("c2_bound").get<double>()};
    spec.s = j.at("s").get<double>();
    if (!(spec.s >= 0.0)) throw ConfigError("deformation spec: s must be non-negative");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("deformation spec: ") + e.what());
  }
}

Vec DeformationSpec::adapted_coordinates(const Chart& chart, const Vec& x) const {
  return frame.inverse * chart.displacement(chart.reduce(x), frame.point);
}

bool DeformationSpec::in_support(const Chart& chart, const Vec& x) const {
  return adapted_coordinates(chart, x).norm() < f.cutoff.outer();
}

void DeformationSpec::add_to(const Chart& chart, const Vec& x, int order, MetricJet* jet) const {
  const Vec y = adapted_coordinates(chart, x);
  if (!(y.norm() < f.cutoff.outer())) return;
  const Mat& A = frame.inverse;
  const Vec a1 = A.row(1).transpose(), a2 = A.row(2).transpose(), a3 = A.row(3).transpose();
  const Mat U1 = a1 * a2.transpose() + a2 * a1.transpose();
  const Mat U2 = a1 * a3.transpose() + a3 * a1.transpose();
  const auto fj = f.eval(y, order);
  jet->g += s * (fj[0].value * U1 + fj[1].value * U2);
  if (order >= 1) {
    const Vec g1 = A.transpose() * fj[0].grad, g2 = A.transpose() * fj[1].grad;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      jet->d1[static_cast<std::size_t>(i)] += s * (g1[i] * U1 + g2[i] * U2);
  }
  if (order >= 2) {
    const Mat H1 = A.transpose() * fj[0].hess * A, H2 = A.transpose() * fj[1].hess * A;
    for (int i = 0; i < y.size(); ++i)
      for (int j = 0; j < y.size(); ++j) jet->second(i, j) += s * (H1(i, j) * U1 + H2(i, j) * U2);
  }
}

DeformedMetric deform(const MetricField& base, const std::vector<DeformationSpec>& specs) {
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& spec = specs[k];
    if (spec.frame.point.size() != base.dim()) throw ConfigError("deformation spec has the wrong dimension");
    if (!(spec.s >= 0.0)) throw ConfigError("deformation amplitude s must be non-negative");
    check_placement(base.chart(), spec);
    const std::vector<DeformationSpec> prefix(specs.begin(), specs.begin() + static_cast<std::ptrdiff_t>(k) + 1);
    if (!spd_on_support(assemble(base, prefix), spec, 64)) {
      // Largest s / 2^j that still validates, for the message.
      DeformationSpec trial = spec;
      double ok_s = 0.0;
      for (int j = 1; j <= 60; ++j) {
        trial.s = spec.s * std::ldexp(1.0, -j);
        auto attempt = prefix;
        attempt.back() = trial;
        if (spd_on_support(assemble(base, attempt), trial, 64)) {
          ok_s = trial.s;
          break;
        }
      }
      std::ostringstream os;
      os << "deformed metric loses positive definiteness at s = " << spec.s << "; largest validated s = " << ok_s;
      throw NumericalError(os.str());
    }
  }
  return DeformedMetric{base, specs, assemble(base, specs)};
}

DeformedMetric perturb(const MetricField& base, const DeformationSpec& spec) { return deform(base, {spec}); }

std::array<double, 2> predicted_curvature_delta(const Chart& chart, const DeformationSpec& spec, double s,
                                                const Vec& x) {
  const Vec y = spec.adapted_coordinates(chart, x);
  if (!(y.norm() < spec.f.cutoff.outer())) return {0.0, 0.0};
  const auto fj = spec.f.eval(y, 2);
  // Calibrated against the full curvature recomputation on the flat base.
  return {-0.5 * s * fj[0].hess(0, 0), -0.5 * s * fj[1].hess(0, 0)};
}

bool designated_entry(int i, int j, int k, int l) {
  using Idx = std::tuple<int, int, int, int>;
  static const std::set<Idx> orbit = [] {
    std::set<Idx> out;
    for (int last : {2, 3}) {
      const int a = 1, b = 0, c = 0, d = last;
      // R(a,b,c,d): antisymmetric in (a,b) and (c,d), symmetric under pair swap.
      for (const Idx& t : {Idx{a, b, c, d}, Idx{b, a, c, d}, Idx{a, b, d, c}, Idx{b, a, d, c}, Idx{c, d, a, b},
                           Idx{d, c, a, b}, Idx{c, d, b, a}, Idx{d, c, b, a}})
        out.insert(t);
    }
    return out;
  }();
  return orbit.count(Idx{i, j, k, l}) > 0;
}

std::vector<double> geometric_schedule(int lo_exp, int hi_exp, double scale) {
  if (lo_exp > hi_exp) throw ConfigError("schedule exponents must be ordered");
  std::vector<double> out;
  for (int e = lo_exp; e <= hi_exp; ++e) out.push_back(scale * std::ldexp(1.0, -e));
  return out;
}

nlohmann::json BreakMeasurement::to_json() const {
  return nlohmann::json{{"s", s},
                        {"near_min", near_min},
                        {"global_max", global_max},
                        {"far_max", far_max},
                        {"center_defect", center_defect},
                        {"near_ok", near_ok},
                        {"global_ok", global_ok},
                        {"far_ok", far_ok},
                        {"spd", spd},
                        {"ok", ok()}};
}

nlohmann::json LocalBreakResult::report() const {
  auto rows = nlohmann::json::array();
  for (const auto& m : measurements) rows.push_back(m.to_json());
  return nlohmann::json{{"center", vec_of(frame.point)},
                        {"l", frame.l},
                        {"hypersurface", frame.hypersurface},
                        {"K", f.K},
                        {"eps", f.eps},
                        {"rho", f.cutoff.rho},
                        {"pad", f.cutoff.pad},
                        {"selected_s", selected_s},
                        {"eps0", eps0},
                        {"measurements", rows}};
}

double invariant_change(const CurvatureData& before, const CurvatureData& after, const Mat& basis, const Vec& v) {
  const Mat B0 = gram_schmidt_g(before.g, basis);
  const Mat B1 = gram_schmidt_g(after.g, basis);
  const double old_value = offblock_invariant(jacobi_operator(before, v), before.g, B0).value;
  const double new_value = offblock_invariant(jacobi_operator(after, v), after.g, B1).value;
  return new_value - old_value;
}

double max_invariant_change(const CurvatureData& before, const CurvatureData& after, const Mat& basis,
                            int density, int refine_evals) {
  const Mat B0 = gram_schmidt_g(before.g, basis);
  const Mat B1 = gram_schmidt_g(after.g, basis);
  const int l = static_cast<int>(basis.cols());
  if (density <= 0) density = DefectOptions{}.density_for(l);
  auto f = [&](const Vec& c) {
    const Vec v = B0 * c;
    const double a = offblock_invariant(jacobi_operator(before, v), before.g, B0).value;
    const double b = offblock_invariant(jacobi_operator(after, v), after.g, B1).value;
    return std::abs(b - a);
  };
  return maximize_on_sphere(l, density, refine_evals, f).value;
}

LocalBreakResult local_break(const MetricField& base, const TangentPlane& P, double K, double eps, double rho,
                             double pad, const LocalBreakOptions& opt) {
  if (opt.s_schedule.empty()) throw ConfigError("the s schedule is empty");
  for (double s : opt.s_schedule)
    if (!(s > 0.0)) throw ConfigError("schedule amplitudes must be positive");
  if (!(rho > 0.0) || !(pad > 0.0)) throw ConfigError("deformation radii must be positive");

  const int n = base.dim();
  const Chart& chart = base.chart();
  LocalBreakResult out;
  out.frame = adapted_frame(base, P);
  const Vec& p = out.frame.point;
  const Mat& F = out.frame.frame;
  const double fnorm = spectral_norm(F);
  const double shrink = support_fit(chart, p, (rho + pad) * fnorm);
  rho *= shrink;
  pad *= shrink;
  out.f = build_f_pair(K, eps, build_cutoff(rho, pad), n);
  const double outer = rho + pad;

  // Sample planes: near P (base point and angle within rho), over the
  // support, and beyond it.
  struct Sample {
    Vec x;
    Mat basis;
    int kind;  // 0 near, 1 support, 2 far
  };
  std::vector<Sample> planes;
  Rng rng(mix_seed(opt.seed, 0x10ca1));
  const int l = P.rank();
  const Mat B = gram_schmidt_g(base.metric_at(p), P.basis);
  const Mat Q = orthogonal_complement_g(base.metric_at(p), B);
  planes.push_back({p, B, 0});
  const double near_r = 0.5 * rho / std::max(1.0, fnorm);
  for (int k = 1; k < opt.near_planes; ++k) {
    Vec y = rng.gaussian(n, 1).col(0);
    y *= near_r / y.norm();
    Mat Z = rng.gaussian(n - l, l);
    Z /= spectral_norm(Z);
    double t = std::tan(0.5 * rho);
    Mat V = B + t * Q * Z;
    while (principal_angle(V, B) >= rho) {
      t *= 0.5;
      V = B + t * Q * Z;
    }
    planes.push_back({chart.reduce(p + F * y), V, 0});
  }
  for (int k = 0; k < opt.support_planes; ++k) {
    Vec u = rng.gaussian(n, 1).col(0);
    u.normalize();
    const Vec y = u * (outer * rng.uniform());
    planes.push_back({chart.reduce(p + F * y), rng.gaussian(n, l), 1});
  }
  for (int k = 0, tries = 0; k < opt.far_planes && tries < 50 * opt.far_planes; ++tries) {
    Vec u = rng.gaussian(n, 1).col(0);
    u.normalize();
    const Vec x = p + F * (u * (outer * rng.uniform(1.05, 1.5)));
    if (!chart.contains(x)) continue;
    planes.push_back({chart.reduce(x), rng.gaussian(n, l), 2});
    ++k;
  }

  std::vector<CurvatureData> before;
  for (const auto& s : planes) before.push_back(riemann_tensor(base, s.x));

  std::vector<double> schedule = opt.s_schedule;
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  for (double s : schedule) {
    BreakMeasurement m;
    m.s = s;
    DeformationSpec spec{out.frame, out.f, s};
    std::optional<DeformedMetric> deformed;
    try {
      deformed = perturb(base, spec);
    } catch (const NumericalError&) {
      m.spd = false;
      out.measurements.push_back(m);
      continue;
    }
    m.near_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < planes.size(); ++k) {
      const CurvatureData after = riemann_tensor(deformed->metric, planes[k].x);
      const double d = max_invariant_change(before[k], after, planes[k].basis, opt.density, opt.refine_evals);
      m.global_max = std::max(m.global_max, d);
      if (planes[k].kind == 0) m.near_min = std::min(m.near_min, d);
      if (planes[k].kind == 2) m.far_max = std::max(m.far_max, d);
    }
    m.center_defect = plane_defect(deformed->metric, make_plane(deformed->metric, p, B)).defect;
    m.near_ok = m.near_min > K * s;
    m.global_ok = m.global_max <= 2.0 * K * s;
    m.far_ok = m.far_max <= eps * s;
    out.measurements.push_back(m);
    if (m.ok()) {
      if (out.passing.empty()) {
        out.selected_s = s;
        out.eps0 = m.far_max / s;
      }
      out.passing.push_back(spec);
      if (!opt.full_sweep) break;
    }
  }
  if (out.passing.empty()) {
    std::ostringstream os;
    os << "local break: no amplitude in the schedule satisfies the near/global/far bounds";
    for (const auto& m : out.measurements)
      os << "; s=" << m.s << (m.spd ? "" : " (not SPD)") << " near/Ks=" << m.near_min / (K * m.s)
         << " global/Ks=" << m.global_max / (K * m.s) << " far/s=" << m.far_max / m.s;
    throw NumericalError(os.str());
  }
  return out;
}

}  // namespace geodefect
