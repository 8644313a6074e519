#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "geodefect/defect.hpp"
#include "geodefect/manifold.hpp"

namespace geodefect {

// h_1(t) = A sin(t / eta), h_2(t) = A cos(t / eta) with eta = eps / (4K) and
// A = (4 - delta) K eta^2. For 4 - delta in (sqrt(2) * 2.01, 3.99):
//   2.01 K < max_i |h_i''(t)| < 3.99 K   and   |h_i|_{C^1} < eps.
struct BumpPair {
  double K = 0.0;
  double eps = 0.0;
  double four_minus_delta = 0.0;
  double eta = 0.0;

  double delta() const { return 4.0 - four_minus_delta; }
  double amplitude() const { return four_minus_delta * K * eta * eta; }
  // Derivative `order` (0, 1, 2) of h_{which + 1}; which is 0 or 1.
  double h(int which, double t, int order) const;
  // max(sup |h|, sup |h'|) in closed form.
  double c1_norm() const;
};

// Builds the pair with 4 - delta at the midpoint of the admissible window
// and verifies both bounds on 10^4 samples per period. Throws ConfigError
// unless K > 1 and eps > 0.
BumpPair build_bump_pair(double K, double eps);

// Radial cutoff in adapted coordinates: chi = 1 for |y| <= rho, chi = 0 for
// |y| >= rho + pad, smooth step from the exp(-1/t) profile in between.
struct CutoffSpec {
  double rho = 0.0;
  double pad = 0.0;
  double c2_bound = 0.0;  // measured M >= |chi|_{C^2}

  double outer() const { return rho + pad; }
  // Radial profile phi(r) and its first two derivatives.
  std::array<double, 3> profile(double r) const;
  double value(const Vec& y) const;
  // chi, gradient and Hessian at y.
  void eval(const Vec& y, double* chi, Vec* grad, Mat* hess) const;
};

CutoffSpec build_cutoff(double rho, double pad);

// Smooth step S(t): 0 for t <= 0, 1 for t >= 1, with S' and S''.
std::array<double, 3> smooth_step(double t);

// f_i = chi * (h_i o pi_1) in adapted coordinates y, with pi_1(y) = y_1 +
// phase. The default phase of an eighth of the bump period keeps both h_i''
// nonzero at the centre; all bump bounds are uniform in t, so any phase works.
struct FPair {
  BumpPair bump;  // built with the internal epsilon
  CutoffSpec cutoff;
  double K = 0.0;
  double eps = 0.0;  // target bound for the mixed partials and C^1 norm
  int halvings = 0;
  double phase = 0.0;

  double t_of(const Vec& y) const { return y[0] + phase; }

  struct Jet {
    double value = 0.0;
    Vec grad;
    Mat hess;
  };
  // Value and partials to `order` of f_1 and f_2 at y.
  std::array<Jet, 2> eval(const Vec& y, int order) const;
};

struct FPairCheck {
  bool inner_lower = true;   // max |d11 f_i| > 2K on the inner ball
  bool global_upper = true;  // max |d11 f_i| <= 4K
  bool mixed_small = true;   // |d_j d_k f_i| < eps for k >= 2, |f_i|_{C^1} < eps
  bool outer_zero = true;    // f_i == 0 outside rho + pad
  double min_inner = 0.0, max_d11 = 0.0, max_mixed = 0.0, max_c1 = 0.0;
  int samples = 0;
  bool ok() const { return inner_lower && global_upper && mixed_small && outer_zero; }
};

// Samples the f-pair properties on the inner ball, the transition shell and
// just outside the support.
FPairCheck check_f_pair(const FPair& f, int n, int samples = 4000);

// Starts the bump with internal epsilon eps / (2M) and halves it until the
// sampled properties hold. Throws NumericalError after 30 halvings. The
// phase is given as a fraction of pi * eta (default 1/4).
FPair build_f_pair(double K, double eps, const CutoffSpec& cutoff, int n, double phase_fraction = 0.25);

// Ordered quadruple plus a full coordinate frame, G(p)-orthonormal at p.
// Codimension >= 2 uses (v, T, n3, n4) with v, T in P and n3, n4 normal;
// the hypersurface case uses (v, n, T3, T4) with v, T3, T4 in P.
struct AdaptedFrame {
  Vec point;
  int l = 0;
  bool hypersurface = false;
  Mat frame;    // n x n, columns E_1..E_n; the first four are the quadruple
  Mat inverse;  // frame^{-1}

  Mat quad() const { return frame.leftCols(4); }
};

AdaptedFrame adapted_frame(const MetricField& m, const TangentPlane& P);
AdaptedFrame frame_from_columns(const Vec& point, int l, bool hypersurface, const Mat& frame);

struct DeformationSpec {
  AdaptedFrame frame;
  FPair f;
  double s = 0.0;

  nlohmann::json to_json() const;
  static DeformationSpec from_json(const nlohmann::json& j);

  // y = F^{-1} (x - p) with the nearest periodic image of x - p.
  Vec adapted_coordinates(const Chart& chart, const Vec& x) const;
  bool in_support(const Chart& chart, const Vec& x) const;
  // Adds the perturbation s (f_1 U_1 + f_2 U_2) and its partials to `jet`.
  // U_1, U_2 are the chart matrices of the frame forms with entries
  // (2,3),(3,2) and (2,4),(4,2) respectively.
  void add_to(const Chart& chart, const Vec& x, int order, MetricJet* jet) const;
};

// Metric whose matrix in the adapted frame differs from the base only in the
// upper 4 x 4 block entries (2,3), (2,4) and their transposes, by s f_1 and
// s f_2. Bit-identical to the base outside the support.
struct DeformedMetric {
  MetricField base;
  std::vector<DeformationSpec> specs;
  MetricField metric;
};

// Validates the support placement and positive definiteness on samples of
// the support; on failure throws NumericalError naming the largest validated s.
DeformedMetric perturb(const MetricField& base, const DeformationSpec& spec);
// Applies several deformations at once, summed in order.
DeformedMetric deform(const MetricField& base, const std::vector<DeformationSpec>& specs);

// Leading-order changes of R(E_2, E_1, E_1, E_3) and R(E_2, E_1, E_1, E_4):
// -(s/2) d_1 d_1 f_1 and -(s/2) d_1 d_1 f_2 at x. Zero off the support.
std::array<double, 2> predicted_curvature_delta(const Chart& chart, const DeformationSpec& spec, double s,
                                                const Vec& x);

// True if (i,j,k,l) is related by curvature symmetries to (2,1,1,3) or
// (2,1,1,4) (1-based frame indices). Arguments are 0-based.
bool designated_entry(int i, int j, int k, int l);

struct LocalBreakOptions {
  std::vector<double> s_schedule;  // tried in descending order
  int near_planes = 6;     // planes within rho of P (base and angle)
  int support_planes = 6;  // arbitrary planes over the support
  int far_planes = 3;      // planes beyond rho + pad from the centre
  int density = 0;
  int refine_evals = 80;
  bool full_sweep = false;  // measure every s instead of stopping at the first pass
  std::uint64_t seed = 11;
};

// Geometric schedule scale * 2^-lo_exp down to scale * 2^-hi_exp, largest first.
std::vector<double> geometric_schedule(int lo_exp, int hi_exp, double scale = 1.0);

struct BreakMeasurement {
  double s = 0.0;
  double near_min = 0.0;    // min over near planes of max_v |delta I|; must exceed K s
  double global_max = 0.0;  // max over all sampled planes and v; must stay <= 2 K s
  double far_max = 0.0;     // max over planes off the support; must stay <= eps s
  double center_defect = 0.0;
  bool near_ok = false, global_ok = false, far_ok = false;
  bool spd = true;
  bool ok() const { return spd && near_ok && global_ok && far_ok; }
  nlohmann::json to_json() const;
};

struct LocalBreakResult {
  AdaptedFrame frame;
  FPair f;
  std::vector<BreakMeasurement> measurements;  // in schedule order
  std::vector<DeformationSpec> passing;        // one per passing s, largest s first
  double selected_s = 0.0;
  double eps0 = 0.0;  // measured far-field constant far_max / s at the selected s
  nlohmann::json report() const;
};

// Builds the deformation around P and, for each s in the schedule, measures
// the gain near P (> K s), the global change (<= 2 K s) and the change away
// from the support (<= eps s). Keeps the largest passing s; throws
// NumericalError if none passes. Radii shrink uniformly if the support would
// leave a non-periodic chart or wrap around a periodic one.
LocalBreakResult local_break(const MetricField& base, const TangentPlane& P, double K, double eps, double rho,
                             double pad, const LocalBreakOptions& opt);

// Change of the off-block invariant at v between two curvature states for a
// plane spanned by `basis` (coordinate vectors): I^new_v - I^old_v, with the
// plane orthonormalized in each metric and v used as given.
double invariant_change(const CurvatureData& before, const CurvatureData& after, const Mat& basis, const Vec& v);

// max over base-unit v in span(basis) of |invariant_change|.
double max_invariant_change(const CurvatureData& before, const CurvatureData& after, const Mat& basis,
                            int density, int refine_evals);

}  // namespace geodefect
