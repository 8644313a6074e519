#include "geodefect/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "geodefect/error.hpp"

namespace geodefect {

Chart::Chart(Vec lo, Vec hi, std::vector<std::optional<double>> period)
    : lo_(std::move(lo)), hi_(std::move(hi)), period_(std::move(period)) {
  const auto n = lo_.size();
  if (n < 2) throw ConfigError("chart dimension must be at least 2");
  if (hi_.size() != n) throw ConfigError("chart bounds have mismatched dimensions");
  if (period_.empty()) period_.assign(static_cast<std::size_t>(n), std::nullopt);
  if (period_.size() != static_cast<std::size_t>(n))
    throw ConfigError("chart periodicity has mismatched dimension");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(hi_[i] > lo_[i])) throw ConfigError("chart box must have positive volume");
    const auto& per = period_[static_cast<std::size_t>(i)];
    if (per && !(*per > 0.0)) throw ConfigError("chart period must be positive");
  }
}

Chart Chart::box(int n, double lo, double hi) {
  return Chart(Vec::Constant(n, lo), Vec::Constant(n, hi));
}

Chart Chart::torus(int n, double period) {
  return Chart(Vec::Zero(n), Vec::Constant(n, period),
               std::vector<std::optional<double>>(static_cast<std::size_t>(n), period));
}

Vec Chart::reduce(const Vec& x) const {
  if (x.size() != lo_.size()) {
    std::ostringstream os;
    os << "chart point has dimension " << x.size() << ", expected " << lo_.size();
    throw DomainError(os.str());
  }
  Vec y = x;
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(y[i])) throw DomainError("chart point is not finite");
    if (periodic(i)) {
      const double per = period(i);
      double r = std::fmod(y[i] - lo_[i], per);
      if (r < 0.0) r += per;
      if (r >= per) r = 0.0;
      y[i] = lo_[i] + r;
    } else if (y[i] < lo_[i] || y[i] > hi_[i]) {
      std::ostringstream os;
      os << "coordinate " << i << " = " << y[i] << " outside [" << lo_[i] << ", " << hi_[i] << "]";
      throw DomainError(os.str());
    }
  }
  return y;
}

bool Chart::contains(const Vec& x) const {
  if (x.size() != lo_.size()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!std::isfinite(x[i])) return false;
    if (!periodic(i) && (x[i] < lo_[i] || x[i] > hi_[i])) return false;
  }
  return true;
}

Vec Chart::displacement(const Vec& x, const Vec& y) const {
  Vec d = x - y;
  for (int i = 0; i < dim(); ++i) {
    if (!periodic(i)) continue;
    const double per = period(i);
    d[i] -= per * std::round(d[i] / per);
  }
  return d;
}

double Chart::clearance(const Vec& x) const {
  double r = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dim(); ++i) {
    if (periodic(i)) continue;
    r = std::min({r, x[i] - lo_[i], hi_[i] - x[i]});
  }
  return r;
}

MetricJet MetricJet::zero(int n, int order) {
  MetricJet jet;
  jet.g = Mat::Zero(n, n);
  if (order >= 1) jet.d1.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
  if (order >= 2) jet.d2.assign(static_cast<std::size_t>(n * n), Mat::Zero(n, n));
  return jet;
}

const char* to_string(DerivativeBackend::Mode mode) {
  switch (mode) {
    case DerivativeBackend::Mode::analytic: return "analytic";
    case DerivativeBackend::Mode::central: return "central";
    case DerivativeBackend::Mode::richardson: return "richardson";
  }
  return "unknown";
}

Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

void require_spd(const Mat& g, const char* what) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
}

MetricField::MetricField(Chart chart, MetricFn value, DerivativeBackend backend, JetFn analytic)
    : chart_(std::move(chart)),
      value_(std::move(value)),
      backend_(backend),
      analytic_(std::move(analytic)) {
  if (!value_) throw ConfigError("metric field needs an evaluation function");
  if (!(backend_.step > 0.0)) throw ConfigError("derivative step must be positive");
  if (backend_.mode == DerivativeBackend::Mode::analytic && !analytic_)
    throw ConfigError("analytic backend requested but no closed-form partials supplied");
}

MetricField MetricField::with_backend(DerivativeBackend backend) const {
  return MetricField(chart_, value_, backend, analytic_);
}

Mat MetricField::raw(const Vec& x) const {
  return symmetrize(value_(chart_.reduce(x)));
}

Mat MetricField::metric_at(const Vec& x) const {
  Mat g = raw(x);
  require_spd(g);
  return g;
}

Mat MetricField::metric_inverse_at(const Vec& x) const {
  const Mat g = metric_at(x);
  Eigen::LLT<Mat> llt(g);
  return symmetrize(llt.solve(Mat::Identity(g.rows(), g.cols())));
}

Mat MetricField::metric_partial(const Vec& x, int i) const {
  return jet(x, 1).d1.at(static_cast<std::size_t>(i));
}

Mat MetricField::metric_second_partial(const Vec& x, int i, int j) const {
  if (i < 0 || j < 0 || i >= dim() || j >= dim()) throw ConfigError("partial index out of range");
  return jet(x, 2).second(i, j);
}

MetricJet MetricField::jet(const Vec& x, int order) const {
  const Vec y = chart_.reduce(x);
  MetricJet out;
  if (backend_.mode == DerivativeBackend::Mode::analytic) {
    out = analytic_(y, order);
    out.g = symmetrize(out.g);
    for (auto& d : out.d1) d = symmetrize(d);
    for (auto& d : out.d2) d = symmetrize(d);
  } else {
    out = finite_difference_jet(y, order);
  }
  require_spd(out.g);
  return out;
}

MetricJet MetricField::finite_difference_jet(const Vec& x, int order) const {
  const int n = dim();
  const double h = backend_.step;
  if (order >= 1 && chart_.clearance(x) < h) {
    std::ostringstream os;
    os << "finite-difference stencil of step " << h << " leaves the chart";
    throw DomainError(os.str());
  }
  auto at = [&](const Vec& z) { return symmetrize(value_(chart_.reduce(z))); };
  MetricJet jet = MetricJet::zero(n, order);
  jet.g = at(x);
  if (order == 0) return jet;

  auto unit = [n](int i, double t) {
    Vec e = Vec::Zero(n);
    e[i] = t;
    return e;
  };
  auto first = [&](int i, double step) {
    return Mat((at(x + unit(i, step)) - at(x - unit(i, step))) / (2.0 * step));
  };
  auto second = [&](int i, int j, double step) -> Mat {
    if (i == j) {
      return (at(x + unit(i, step)) - 2.0 * jet.g + at(x - unit(i, step))) / (step * step);
    }
    const Vec ei = unit(i, step), ej = unit(j, step);
    return (at(x + ei + ej) - at(x + ei - ej) - at(x - ei + ej) + at(x - ei - ej)) /
           (4.0 * step * step);
  };
  const bool richardson = backend_.mode == DerivativeBackend::Mode::richardson;
  for (int i = 0; i < n; ++i) {
    Mat d = first(i, h);
    if (richardson) d = (4.0 * first(i, 0.5 * h) - d) / 3.0;
    jet.d1[static_cast<std::size_t>(i)] = symmetrize(d);
  }
  if (order >= 2) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Mat d = second(i, j, h);
        if (richardson) d = (4.0 * second(i, j, 0.5 * h) - d) / 3.0;
        jet.second(i, j) = symmetrize(d);
        jet.second(j, i) = jet.second(i, j);
      }
    }
  }
  return jet;
}

Mat gram_schmidt_g(const Mat& G, const Mat& V, double rank_tol) {
  if (G.rows() != V.rows()) throw ConfigError("gram_schmidt_g: dimension mismatch");
  Mat out(V.rows(), V.cols());
  for (Eigen::Index k = 0; k < V.cols(); ++k) {
    Vec w = V.col(k);
    const double scale = std::sqrt(std::max(w.dot(G * w), 0.0));
    if (!(scale > 0.0)) throw NumericalError("gram_schmidt_g: zero input vector");
    // Two passes of modified Gram-Schmidt keep B^T G B = I at round-off level.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < k; ++j) w -= out.col(j) * out.col(j).dot(G * w);
    }
    const double norm = std::sqrt(std::max(w.dot(G * w), 0.0));
    if (!(norm > rank_tol * scale)) throw NumericalError("gram_schmidt_g: rank deficient input");
    out.col(k) = w / norm;
  }
  return out;
}

Mat orthogonal_complement_g(const Mat& G, const Mat& B) {
  const auto n = G.rows();
  const auto l = B.cols();
  Mat basis(n, n);
  basis.leftCols(l) = B;
  Eigen::Index filled = l;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  while (filled < n) {
    Eigen::Index best = -1;
    double best_norm = -1.0;
    Vec best_vec;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      Vec w = Vec::Unit(n, i);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < filled; ++j) w -= basis.col(j) * basis.col(j).dot(G * w);
      }
      const double norm = std::sqrt(std::max(w.dot(G * w), 0.0));
      if (norm > best_norm) {
        best_norm = norm;
        best = i;
        best_vec = w;
      }
    }
    if (!(best_norm > 1e-12)) throw NumericalError("orthogonal complement: rank deficient");
    used[static_cast<std::size_t>(best)] = true;
    basis.col(filled++) = best_vec / best_norm;
  }
  return basis.rightCols(n - l);
}

double orthonormality_residual(const Mat& G, const Mat& B) {
  const Mat r = B.transpose() * G * B - Mat::Identity(B.cols(), B.cols());
  return r.cwiseAbs().maxCoeff();
}

AdaptedChart linear_adapted_chart(const MetricField& m, const Vec& p, const Mat& quad,
                                  double on_tol) {
  const int n = m.dim();
  const Vec origin = m.chart().reduce(p);
  const Mat G = m.metric_at(origin);
  if (quad.rows() != n || quad.cols() > n) throw ConfigError("adapted chart: bad frame shape");
  if (orthonormality_residual(G, quad) > on_tol)
    throw NumericalError("adapted chart: frame vectors are not orthonormal at the base point");

  Mat frame(n, n);
  frame.leftCols(quad.cols()) = quad;
  if (quad.cols() < n) frame.rightCols(n - quad.cols()) = orthogonal_complement_g(G, quad);
  const Mat inverse = frame.inverse();

  // Half-width of a y-box whose image stays inside the original chart.
  double half = std::numeric_limits<double>::infinity();
  double min_period = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double row = frame.row(i).cwiseAbs().sum();
    if (m.chart().periodic(i)) {
      min_period = std::min(min_period, m.chart().period(i) / row);
      continue;
    }
    const double room = std::min(origin[i] - m.chart().lo()[i], m.chart().hi()[i] - origin[i]);
    half = std::min(half, room / row);
  }
  if (!std::isfinite(half)) half = 0.5 * min_period;
  if (!(half > 0.0)) throw DomainError("adapted chart: base point lies on the chart boundary");

  const MetricField base = m;
  const Mat F = frame;
  auto pull = [base, origin, F](const Vec& y) -> Mat {
    const Mat g = base.raw(origin + F * y);
    return F.transpose() * g * F;
  };
  JetFn jet_fn = [base, origin, F, n](const Vec& y, int order) {
      const MetricJet src = base.jet(origin + F * y, order);
      MetricJet out = MetricJet::zero(n, order);
      out.g = F.transpose() * src.g * F;
      if (order >= 1) {
        for (int a = 0; a < n; ++a) {
          Mat acc = Mat::Zero(n, n);
          for (int i = 0; i < n; ++i) acc += F(i, a) * src.d1[static_cast<std::size_t>(i)];
          out.d1[static_cast<std::size_t>(a)] = F.transpose() * acc * F;
        }
      }
      if (order >= 2) {
        for (int a = 0; a < n; ++a) {
          for (int b = a; b < n; ++b) {
            Mat acc = Mat::Zero(n, n);
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < n; ++j) acc += F(i, a) * F(j, b) * src.second(i, j);
            out.second(a, b) = F.transpose() * acc * F;
            out.second(b, a) = out.second(a, b);
          }
        }
      }
      return out;
  };
  // Derivatives are chained through the base field's own backend.
  MetricField pulled(Chart::box(n, -half, half), pull, DerivativeBackend::analytic(), jet_fn);
  return AdaptedChart{std::move(pulled), origin, frame, inverse};
}

}  // namespace geodefect
