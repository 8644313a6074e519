#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geodefect/curvature.hpp"
#include "geodefect/deformation.hpp"
#include "geodefect/error.hpp"
#include "geodefect/models.hpp"
#include "geodefect/random.hpp"
#include "oracles.hpp"

using namespace geodefect;
using nlohmann::json;

namespace {

MetricField model(const std::string& type, int n = 4, json params = json::object()) {
  return make_model(ModelDescriptor{type, n, std::move(params), 0});
}

// Independent smooth step from exp(-1/t), written out directly.
double step_oracle(double t) {
  auto e = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  return e(t) / (e(t) + e(1.0 - t));
}

DeformationSpec flat_spec(double s, double K = 10.0, double eps = 0.1) {
  const MetricField m = model("torus");
  const Vec p = Vec::Constant(4, std::numbers::pi);
  const TangentPlane P = make_plane(m, p, Mat::Identity(4, 4).leftCols(2));
  return DeformationSpec{adapted_frame(m, P), build_f_pair(K, eps, build_cutoff(0.5, 0.5), 4), s};
}

// R(E_a, E_b, E_c, E_d) from a flat coordinate tensor.
double in_frame(const std::vector<double>& R, const Mat& F, int a, int b, int c, int d) {
  const int n = static_cast<int>(F.rows());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += oracle::at(R, n, i, j, k, l) * F(i, a) * F(j, b) * F(k, c) * F(l, d);
  return s;
}

}  // namespace

TEST_CASE("bump pair scale and bounds") {
  const BumpPair b = build_bump_pair(10.0, 0.1);
  CHECK(b.eta == doctest::Approx(0.0025).epsilon(1e-14));
  CHECK(b.four_minus_delta > std::sqrt(2.0) * 2.01);
  CHECK(b.four_minus_delta < 3.99);
  // Second derivative window and C^1 bound by differencing the values.
  const double h = 1e-3 * b.eta;
  double max_d2 = 0.0, min_d2 = 1e300, c1 = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double t = 2.0 * std::numbers::pi * b.eta * k / 2000.0;
    double m = 0.0;
    for (int w = 0; w < 2; ++w) {
      const double d2 = (b.h(w, t + h, 0) - 2.0 * b.h(w, t, 0) + b.h(w, t - h, 0)) / (h * h);
      const double d1 = (b.h(w, t + h, 0) - b.h(w, t - h, 0)) / (2.0 * h);
      m = std::max(m, std::abs(d2));
      c1 = std::max({c1, std::abs(b.h(w, t, 0)), std::abs(d1)});
    }
    max_d2 = std::max(max_d2, m);
    min_d2 = std::min(min_d2, m);
  }
  CHECK(min_d2 > 20.1);
  CHECK(max_d2 < 39.9);
  CHECK(c1 < 0.1);
  CHECK(b.c1_norm() == doctest::Approx(c1).epsilon(1e-6));
  CHECK_THROWS_AS(build_bump_pair(1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(build_bump_pair(10.0, 0.0), ConfigError);
}

TEST_CASE("cutoff is exactly one inside and zero outside, with reproducible M") {
  const CutoffSpec c = build_cutoff(0.5, 0.5);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    Vec y = rng.gaussian(4, 1).col(0);
    CHECK(c.value(0.5 * rng.uniform(0.0, 1.0) * y / y.norm()) == 1.0);
    CHECK(c.value(rng.uniform(1.0, 2.0) * y / y.norm()) == 0.0);
  }
  // M from differencing the independent profile 1 - S((r - rho) / pad).
  auto phi = [](double r) { return 1.0 - step_oracle((r - 0.5) / 0.5); };
  double M = 1.0;
  const double h = 1e-5;
  for (int k = 1; k < 20000; ++k) {
    const double r = 0.5 + 0.5 * k / 20000.0;
    const double d1 = (phi(r + h) - phi(r - h)) / (2 * h);
    const double d2 = (phi(r + h) - 2 * phi(r) + phi(r - h)) / (h * h);
    M = std::max({M, std::abs(d1), std::abs(d2), std::abs(d1) / r});
  }
  CHECK(c.c2_bound == doctest::Approx(M).epsilon(1e-3));
  CHECK(build_cutoff(0.5, 0.5).c2_bound == c.c2_bound);
  for (double t : {-0.5, 0.0, 0.2, 0.5, 0.9, 1.0, 1.3}) CHECK(smooth_step(t)[0] == doctest::Approx(step_oracle(t)));
}

TEST_CASE("f pair partials agree with finite differences") {
  const FPair f = build_f_pair(10.0, 0.1, build_cutoff(0.5, 0.5), 4);
  CHECK(check_f_pair(f, 4).ok());
  Rng rng(6);
  for (int k = 0; k < 30; ++k) {
    Vec y = rng.gaussian(4, 1).col(0);
    y *= rng.uniform(0.0, 1.0) / y.norm();
    const auto jet = f.eval(y, 2);
    for (int w = 0; w < 2; ++w) {
      auto val = [&](const Vec& z) { return f.eval(z, 0)[static_cast<std::size_t>(w)].value; };
      auto grad = [&](const Vec& z) { return Mat(f.eval(z, 1)[static_cast<std::size_t>(w)].grad); };
      const double h = 1e-2 * f.bump.eta;
      for (int i = 0; i < 4; ++i) {
        Vec e = Vec::Zero(4);
        e[i] = h;
        const double d = (-val(y + 2 * e) + 8 * val(y + e) - 8 * val(y - e) + val(y - 2 * e)) / (12 * h);
        CHECK(d == doctest::Approx(jet[w].grad[i]).epsilon(1e-6).scale(f.eps));
        const Mat dg = oracle::partial(grad, y, i, h);
        for (int j = 0; j < 4; ++j)
          CHECK(dg(j, 0) == doctest::Approx(jet[w].hess(j, i)).epsilon(1e-5).scale(f.K));
      }
    }
  }
}

TEST_CASE("adapted frames follow the documented orderings") {
  const MetricField m = model("torus");
  const Vec p = Vec::Constant(4, 1.0);
  const AdaptedFrame a = adapted_frame(m, make_plane(m, p, Mat::Identity(4, 4).leftCols(2)));
  CHECK((a.frame - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_FALSE(a.hypersurface);
  const AdaptedFrame b = adapted_frame(m, make_plane(m, p, Mat::Identity(4, 4).leftCols(3)));
  CHECK(b.hypersurface);
  Mat expect = Mat::Zero(4, 4);
  expect(0, 0) = expect(3, 1) = expect(1, 2) = expect(2, 3) = 1.0;
  CHECK((b.frame - expect).cwiseAbs().maxCoeff() < 1e-15);

  const MetricField r = make_model(ModelDescriptor{"random-trig", 6, json{{"amplitude", 0.1}}, 3});
  Rng rng(7);
  for (int l : {2, 3, 5}) {
    const Vec x = Vec::Constant(6, 0.4);
    const AdaptedFrame f = adapted_frame(r, make_plane(r, x, rng.gaussian(6, l)));
    CHECK(orthonormality_residual(r.metric_at(x), f.frame) < 1e-12);
    CHECK((f.frame * f.inverse - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(adapted_frame(model("torus", 3), make_plane(model("torus", 3), Vec::Zero(3), Mat::Identity(3, 3).leftCols(2))),
                  ConfigError);
}

TEST_CASE("perturbation is exact, local and linear in s") {
  const MetricField base = model("torus");
  const DeformationSpec s1 = flat_spec(1e-3);
  DeformationSpec s0 = s1, s2 = s1;
  s0.s = 0.0;
  s2.s = 2e-3;
  const MetricField m0 = perturb(base, s0).metric, m1 = perturb(base, s1).metric, m2 = perturb(base, s2).metric;
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    Vec y = rng.gaussian(4, 1).col(0);
    y *= rng.uniform(0.0, 0.99) / y.norm();
    const Vec x = s1.frame.point + y;
    CHECK(m0.metric_at(x) == base.metric_at(x));
    const Mat g1 = m1.metric_at(x);
    const auto f = s1.f.eval(y, 0);
    // y is recomputed from x, so allow last-bit differences.
    CHECK(g1(1, 2) == doctest::Approx(1e-3 * f[0].value).epsilon(1e-12));
    CHECK(g1(1, 3) == doctest::Approx(1e-3 * f[1].value).epsilon(1e-12));
    CHECK(g1(0, 0) == 1.0);
    CHECK(g1(0, 1) == 0.0);
    CHECK(g1(2, 3) == 0.0);
    CHECK(((m2.metric_at(x) - base.metric_at(x)) - 2.0 * (g1 - base.metric_at(x))).cwiseAbs().maxCoeff() < 1e-17);
    // Outside the support nothing changes, bit for bit.
    Vec z = rng.gaussian(4, 1).col(0);
    const Vec xo = s1.frame.point + rng.uniform(1.0001, 2.5) * z / z.norm();
    CHECK_FALSE(s1.in_support(base.chart(), xo));
    CHECK(m1.metric_at(xo) == base.metric_at(xo));
    const MetricJet ja = m1.jet(xo, 2), jb = base.jet(xo, 2);
    CHECK(ja.g == jb.g);
    for (int i = 0; i < 4; ++i) CHECK(ja.d1[static_cast<std::size_t>(i)] == jb.d1[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("curvature change matches the prediction and an independent oracle") {
  // Curved base; coarse bump so that the difference oracle resolves it.
  const MetricField base = model("sphere");
  const Vec p = Vec::Constant(4, 0.1);
  Rng rng(9);
  const TangentPlane P = make_plane(base, p, rng.gaussian(4, 2));
  const double s = std::ldexp(1.0, -10);
  const DeformationSpec spec{adapted_frame(base, P), build_f_pair(2.0, 0.5, build_cutoff(0.3, 0.3), 4), s};
  const MetricField m = perturb(base, spec).metric;
  const Mat& F = spec.frame.frame;
  const Vec x = p;  // centre: both designated second derivatives are nonzero there
  const auto pred = predicted_curvature_delta(base.chart(), spec, s, x);
  const Tensor4 Ra = riemann_tensor(m, x).riemann.in_frame(F), Rb = riemann_tensor(base, x).riemann.in_frame(F);

  CHECK(std::abs(pred[0]) > 1e-3);
  CHECK(std::abs(pred[1]) > 1e-3);
  CHECK((Ra(1, 0, 0, 2) - Rb(1, 0, 0, 2)) == doctest::Approx(pred[0]).epsilon(1e-2));
  CHECK((Ra(1, 0, 0, 3) - Rb(1, 0, 0, 3)) == doctest::Approx(pred[1]).epsilon(1e-2));

  // Metric-only oracle with a step well below the bump wavelength.
  auto gm = [&](const Vec& y) { return m.metric_at(y); };
  auto gb = [&](const Vec& y) { return base.metric_at(y); };
  const double h = spec.f.bump.eta / 8.0;
  const auto Om = oracle::riemann_fd(gm, x, h), Ob = oracle::riemann_fd(gb, x, h);
  const double o0 = in_frame(Om, F, 1, 0, 0, 2) - in_frame(Ob, F, 1, 0, 0, 2);
  const double o1 = in_frame(Om, F, 1, 0, 0, 3) - in_frame(Ob, F, 1, 0, 0, 3);
  CHECK(o0 == doctest::Approx(Ra(1, 0, 0, 2) - Rb(1, 0, 0, 2)).epsilon(2e-2));
  CHECK(o1 == doctest::Approx(Ra(1, 0, 0, 3) - Rb(1, 0, 0, 3)).epsilon(2e-2));
}

TEST_CASE("on the flat torus only the designated entries move") {
  const DeformationSpec spec = flat_spec(1e-3);
  const MetricField m = perturb(model("torus"), spec).metric;
  const Vec x = spec.frame.point + Vec::Constant(4, 0.05);
  const Tensor4 R = riemann_tensor(m, x).riemann;
  const auto pred = predicted_curvature_delta(m.chart(), spec, 1e-3, x);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          if (designated_entry(i, j, k, l)) continue;
          CHECK(std::abs(R(i, j, k, l)) < 1e-10);
        }
  CHECK(R(1, 0, 0, 2) == doctest::Approx(pred[0]).epsilon(1e-9));
  CHECK(R(1, 0, 0, 3) == doctest::Approx(pred[1]).epsilon(1e-9));
  CHECK(designated_entry(0, 1, 2, 0));
  CHECK(designated_entry(0, 2, 1, 0));
  CHECK(designated_entry(0, 3, 1, 0));
  CHECK_FALSE(designated_entry(0, 1, 1, 0));
  CHECK_FALSE(designated_entry(1, 2, 3, 0));
}

TEST_CASE("spec JSON round trip rebuilds the same metric") {
  const DeformationSpec a = flat_spec(1e-3);
  const DeformationSpec b = DeformationSpec::from_json(json::parse(a.to_json().dump()));
  const MetricField base = model("torus");
  const MetricField ma = perturb(base, a).metric, mb = perturb(base, b).metric;
  Rng rng(10);
  for (int k = 0; k < 50; ++k) {
    const Vec x = a.frame.point + 0.3 * rng.gaussian(4, 1).col(0);
    CHECK(ma.metric_at(x) == mb.metric_at(x));
  }
  CHECK_THROWS_AS(DeformationSpec::from_json(json{{"s", 1.0}}), ConfigError);
}

TEST_CASE("too large an amplitude loses positive definiteness") {
  // |f| is of order K eta^2, so only an absurd s can break positivity.
  try {
    perturb(model("torus"), flat_spec(1e12));
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("s") != std::string::npos);
  }
}

TEST_CASE("local break on the flat torus meets the gain, global and far bounds") {
  const MetricField base = model("torus");
  const TangentPlane P = make_plane(base, Vec::Constant(4, std::numbers::pi), Mat::Identity(4, 4).leftCols(2));
  LocalBreakOptions opt;
  opt.s_schedule = geometric_schedule(4, 8, 1.0);
  const LocalBreakResult r = local_break(base, P, 10.0, 0.1, 0.5, 0.5, opt);
  REQUIRE_FALSE(r.passing.empty());
  const BreakMeasurement* sel = nullptr;
  for (const auto& mm : r.measurements)
    if (mm.s == r.selected_s) sel = &mm;
  REQUIRE(sel);
  CHECK(sel->near_min > 10.0 * sel->s);
  CHECK(sel->global_max <= 20.0 * sel->s);
  CHECK(sel->far_max <= 0.1 * sel->s);
  CHECK(sel->center_defect > 0.0);
  CHECK(r.report().contains("measurements"));
  opt.s_schedule.clear();
  CHECK_THROWS_AS(local_break(base, P, 10.0, 0.1, 0.5, 0.5, opt), ConfigError);
}

TEST_CASE("geometric schedule") {
  const auto s = geometric_schedule(2, 4, 3.0);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 0.75);
  CHECK(s[2] == 0.1875);
  CHECK_THROWS_AS(geometric_schedule(4, 2), ConfigError);
}
