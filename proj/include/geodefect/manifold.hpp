#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace geodefect {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Single coordinate chart: an axis-aligned box, some axes optionally periodic.
class Chart {
 public:
  Chart(Vec lo, Vec hi, std::vector<std::optional<double>> period = {});

  static Chart box(int n, double lo, double hi);
  static Chart torus(int n, double period);

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  bool periodic(int axis) const { return period_[axis].has_value(); }
  double period(int axis) const { return period_[axis].value_or(0.0); }

  // Reduces periodic coordinates into [lo, lo + period) and checks the
  // remaining axes against the box. Throws DomainError.
  Vec reduce(const Vec& x) const;
  bool contains(const Vec& x) const;

  // Coordinate difference x - y using the nearest periodic image.
  Vec displacement(const Vec& x, const Vec& y) const;
  double distance(const Vec& x, const Vec& y) const { return displacement(x, y).norm(); }

  // Largest r such that every stencil point x +- r e_i stays in the box.
  double clearance(const Vec& x) const;

 private:
  Vec lo_, hi_;
  std::vector<std::optional<double>> period_;
};

// Metric value with first and second coordinate partials.
// d1[i] = d_i g, d2[i*n + j] = d_i d_j g.
struct MetricJet {
  Mat g;
  std::vector<Mat> d1;
  std::vector<Mat> d2;

  int dim() const { return static_cast<int>(g.rows()); }
  const Mat& second(int i, int j) const { return d2[static_cast<std::size_t>(i * dim() + j)]; }
  Mat& second(int i, int j) { return d2[static_cast<std::size_t>(i * dim() + j)]; }

  static MetricJet zero(int n, int order);
};

struct DerivativeBackend {
  enum class Mode { analytic, central, richardson };
  Mode mode = Mode::analytic;
  double step = 1e-4;

  static DerivativeBackend analytic() { return {Mode::analytic, 1e-4}; }
  static DerivativeBackend central(double h) { return {Mode::central, h}; }
  static DerivativeBackend richardson(double h) { return {Mode::richardson, h}; }
};

const char* to_string(DerivativeBackend::Mode mode);

using MetricFn = std::function<Mat(const Vec&)>;
// Closed-form jet up to the requested order (0, 1 or 2), evaluated at a
// reduced chart point.
using JetFn = std::function<MetricJet(const Vec&, int)>;

// Smooth symmetric positive-definite tensor field on a chart. Immutable;
// copies share the underlying closures.
class MetricField {
 public:
  MetricField(Chart chart, MetricFn value, DerivativeBackend backend, JetFn analytic = {});

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const DerivativeBackend& backend() const { return backend_; }
  bool has_analytic() const { return static_cast<bool>(analytic_); }

  // Same field, different derivative backend. Asking for the analytic mode
  // on a field without closed forms throws ConfigError.
  MetricField with_backend(DerivativeBackend backend) const;

  // Exactly symmetric, checked positive definite.
  Mat metric_at(const Vec& x) const;
  Mat metric_inverse_at(const Vec& x) const;
  Mat metric_partial(const Vec& x, int i) const;
  Mat metric_second_partial(const Vec& x, int i, int j) const;

  // Metric plus partials to `order` through the configured backend.
  MetricJet jet(const Vec& x, int order = 2) const;

  // Raw evaluation without the SPD check (symmetrized, reduced).
  Mat raw(const Vec& x) const;

 private:
  MetricJet finite_difference_jet(const Vec& x, int order) const;

  Chart chart_;
  MetricFn value_;
  DerivativeBackend backend_;
  JetFn analytic_;
};

// Exact symmetrization (a + a^T) / 2.
Mat symmetrize(const Mat& a);

// Throws NumericalError unless `g` is positive definite.
void require_spd(const Mat& g, const char* what = "metric");

struct FrameAtPoint {
  Vec point;
  Mat basis;  // columns
  bool orthonormal = false;
};

// Gram-Schmidt in the inner product G, processing columns of V in order.
// Throws NumericalError if a column is dependent on its predecessors
// (relative residual below rank_tol).
Mat gram_schmidt_g(const Mat& G, const Mat& V, double rank_tol = 1e-10);

// G-orthonormal basis of the G-orthogonal complement of span(B), where B has
// G-orthonormal columns. Completion vectors are picked greedily from the
// standard basis by largest residual, ties to the lowest index.
Mat orthogonal_complement_g(const Mat& G, const Mat& B);

// Max-norm residual of B^T G B - I.
double orthonormality_residual(const Mat& G, const Mat& B);

// Pulls the metric back through x = p + F y, where the first columns of F
// are `quad` (G(p)-orthonormal) and the rest complete it G(p)-orthonormally.
// The result lives on a box around y = 0 that maps inside the original
// chart; at y = 0 the metric is the identity.
struct AdaptedChart {
  MetricField metric;
  Vec origin;   // p in the original chart
  Mat frame;    // F: columns are the coordinate vectors d/dy_a at p
  Mat inverse;  // F^{-1}, y = F^{-1}(x - p)
};
AdaptedChart linear_adapted_chart(const MetricField& m, const Vec& p, const Mat& quad,
                                  double on_tol = 1e-10);

}  // namespace geodefect
