#include "geodefect/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "geodefect/curvature.hpp"
#include "geodefect/deformation.hpp"
#include "geodefect/models.hpp"
#include "geodefect/random.hpp"

namespace geodefect {

namespace {

CheckResult upper(std::string name, double measured, double tol, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.tolerance = tol;
  r.margin = tol - measured;
  r.passed = std::isfinite(measured) && measured < tol;
  r.detail = std::move(detail);
  return r;
}

CheckResult lower(std::string name, double measured, double tol, std::string detail = {}) {
  CheckResult r = upper(std::move(name), measured, tol, std::move(detail));
  r.lower_bound = true;
  r.margin = measured - tol;
  r.passed = std::isfinite(measured) && measured > tol;
  return r;
}

MetricField model(const std::string& type, int n, nlohmann::json params = nlohmann::json::object(),
                  std::uint64_t seed = 0) {
  return make_model(ModelDescriptor{type, n, std::move(params), seed});
}

Vec uniform_point(Rng& rng, int n, double lo, double hi) {
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

double max_abs(const Tensor4& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

nlohmann::json CheckResult::to_json() const {
  return {{"name", name}, {"passed", passed}, {"measured", measured}, {"tolerance", tolerance},
          {"bound", lower_bound ? "lower" : "upper"},
          {"margin", margin}, {"detail", detail}};
}

nlohmann::json verify_report(const std::vector<CheckResult>& checks) {
  auto list = nlohmann::json::array();
  bool all = true;
  for (const auto& c : checks) {
    list.push_back(c.to_json());
    all = all && c.passed;
  }
  return {{"passed", all}, {"checks", list}};
}

std::vector<CheckResult> run_verify_suite(const VerifyConfig& cfg) {
  std::vector<CheckResult> out;
  Rng rng(cfg.seed);
  const int samples = cfg.quick ? 20 : 100;
  const double sign = cfg.flip_curvature_sign ? -1.0 : 1.0;

  {  // round sphere: every sectional curvature is 1
    const MetricField s4 = model("sphere", 4);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
      const Vec x = uniform_point(rng, 4, -1.5, 1.5);
      const CurvatureData c = riemann_tensor(s4, x);
      const Mat V = rng.gaussian(4, 2);
      worst = std::max(worst, std::abs(sign * sectional(c, V.col(0), V.col(1)) - 1.0));
    }
    out.push_back(upper("sphere_sectional_is_one", worst, 1e-6));
  }
  {  // flat torus: zero tensor
    const MetricField t4 = model("torus", 4);
    double worst = 0.0;
    for (int k = 0; k < samples / 4 + 1; ++k)
      worst = std::max(worst, max_abs(riemann_tensor(t4, uniform_point(rng, 4, 0.0, 6.0)).riemann));
    out.push_back(upper("torus_curvature_is_zero", worst, 1e-10));
  }
  {  // symmetries and Bianchi on every zoo model
    double worst = 0.0;
    const std::vector<std::pair<MetricField, std::pair<double, double>>> fields = {
        {model("sphere", 4), {-1.5, 1.5}},
        {model("ellipsoid", 4), {-0.2, 0.2}},
        {model("warped", 4), {0.5, 2.0}},
        {model("random-trig", 4, {{"amplitude", 0.1}}, 7), {0.0, 6.0}}};
    for (const auto& [m, box] : fields)
      for (int k = 0; k < samples / 4 + 1; ++k)
        worst = std::max(worst, symmetry_residual(riemann_tensor(m, uniform_point(rng, 4, box.first, box.second))));
    out.push_back(upper("curvature_symmetry_residual", worst, 1e-8));
  }
  {  // central differences converge at second order to the analytic tensor
    const MetricField e = model("ellipsoid", 4);
    const Vec x = uniform_point(rng, 4, -0.2, 0.2);
    const CurvatureData exact = riemann_tensor(e, x);
    const double h = cfg.fd_step;
    const double err_h = max_abs_diff(riemann_tensor(e.with_backend(DerivativeBackend::central(h)), x).riemann,
                                      exact.riemann);
    const double err_2h = max_abs_diff(
        riemann_tensor(e.with_backend(DerivativeBackend::central(2.0 * h)), x).riemann, exact.riemann);
    const double order = std::log2(err_2h / err_h);
    std::ostringstream os;
    os << "h = " << h << ", error " << err_h << ", observed order " << order;
    CheckResult r = upper("finite_difference_convergence", err_h, 1e-4, os.str());
    r.passed = r.passed && std::abs(order - 2.0) < 0.5;
    out.push_back(r);
  }
  {  // bump pairs
    double worst = 0.0;
    for (double K : {2.0, 10.0, 100.0})
      for (double eps : {0.1, 0.01}) {
        const BumpPair b = build_bump_pair(K, eps);
        for (int k = 0; k < 10000; ++k) {
          const double t = 2.0 * std::numbers::pi * b.eta * k / 10000.0;
          const double d2 = std::max(std::abs(b.h(0, t, 2)), std::abs(b.h(1, t, 2))) / K;
          worst = std::max({worst, std::max(2.01 - d2, d2 - 3.99) + 1.0, b.c1_norm() / eps});
        }
      }
    out.push_back(upper("bump_pair_bounds", worst, 1.0, "max of window excess + 1 and C^1 / eps"));
  }
  const MetricField torus = model("torus", 4);
  const Vec center = Vec::Constant(4, 1.0);
  const TangentPlane P = make_plane(torus, center, Mat::Identity(4, 4).leftCols(2));
  const double K = 10.0, eps = 0.1;
  const FPair f = build_f_pair(K, eps, build_cutoff(0.5, 0.5), 4);
  {
    const FPairCheck c = check_f_pair(f, 4, cfg.quick ? 1000 : 4000);
    CheckResult r = upper("f_pair_properties", c.max_d11 / (4.0 * K), 1.0 + 1e-12);
    r.passed = c.ok();
    std::ostringstream os;
    os << "inner min " << c.min_inner << " (> " << 2 * K << "), max d11 " << c.max_d11 << ", mixed " << c.max_mixed
       << ", C1 " << c.max_c1;
    r.detail = os.str();
    out.push_back(r);
  }
  const AdaptedFrame frame = adapted_frame(torus, P);
  {  // support locality
    int mismatches = 0;
    for (double s : {1e-4, 1e-3, 1e-2}) {
      const DeformedMetric d = perturb(torus, DeformationSpec{frame, f, s});
      for (int k = 0; k < samples * 10; ++k) {
        const Vec x = uniform_point(rng, 4, 0.0, 2.0 * std::numbers::pi);
        if (torus.chart().distance(x, center) <= f.cutoff.outer()) continue;
        if (d.metric.metric_at(x) != torus.metric_at(x)) ++mismatches;
      }
    }
    out.push_back(upper("support_locality_mismatches", mismatches, 0.5));
  }
  {  // curvature delta at the centre against the prediction
    double worst = 0.0;
    for (int e = 20; e >= 14; e -= 2) {
      const double s = std::ldexp(1.0, -e);
      const DeformationSpec spec{frame, f, s};
      const CurvatureData c = riemann_tensor(perturb(torus, spec).metric, center);
      const auto pred = predicted_curvature_delta(torus.chart(), spec, s, center);
      worst = std::max({worst, std::abs(sign * c.riemann(1, 0, 0, 2) - pred[0]) / std::abs(pred[0]),
                        std::abs(sign * c.riemann(1, 0, 0, 3) - pred[1]) / std::abs(pred[1])});
    }
    out.push_back(upper("curvature_delta_relative_error", worst, 0.1));
  }
  {  // near / global / far bounds of the local break
    LocalBreakOptions lo;
    lo.s_schedule = geometric_schedule(10, 14);
    lo.full_sweep = true;
    if (cfg.quick) lo.refine_evals = 40;
    const LocalBreakResult lb = local_break(torus, P, K, eps, 0.5, 0.5, lo);
    double near = std::numeric_limits<double>::infinity(), global = 0.0, far = 0.0;
    bool ok = true;
    for (const auto& m : lb.measurements) {
      near = std::min(near, m.near_min / (K * m.s));
      global = std::max(global, m.global_max / (K * m.s));
      far = std::max(far, m.far_max / m.s);
      ok = ok && m.ok();
    }
    out.push_back(lower("break_near_gain_over_Ks", near, 1.0));
    out.push_back(upper("break_global_over_Ks", global, 2.0));
    out.push_back(upper("break_far_over_s", far, eps));
    out.back().passed = out.back().passed && ok;
  }
  return out;
}

}  // namespace geodefect
