#include "geodefect/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace geodefect {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double step, int max_evals, double ftol) {
  const auto m = x0.size();
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };
  pts.push_back(x0);
  vals.push_back(eval(x0));
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd x = x0;
    x[i] += step;
    pts.push_back(x);
    vals.push_back(eval(x));
  }

  std::vector<std::size_t> order(pts.size());
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    // Stable sort keeps the vertex order deterministic on ties.
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    {
      std::vector<Eigen::VectorXd> p2;
      std::vector<double> v2;
      for (auto k : order) {
        p2.push_back(pts[k]);
        v2.push_back(vals[k]);
      }
      pts.swap(p2);
      vals.swap(v2);
    }
    if (std::abs(vals.back() - vals.front()) <= ftol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) centroid += pts[k];
    centroid /= static_cast<double>(m);

    const Eigen::VectorXd& worst = pts.back();
    const Eigen::VectorXd xr = centroid + (centroid - worst);
    const double fr = eval(xr);
    if (fr < vals.front()) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
      const double fe = eval(xe);
      if (fe < fr) {
        pts.back() = xe;
        vals.back() = fe;
      } else {
        pts.back() = xr;
        vals.back() = fr;
      }
      continue;
    }
    if (fr < vals[vals.size() - 2]) {
      pts.back() = xr;
      vals.back() = fr;
      continue;
    }
    const bool outside = fr < vals.back();
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (worst - centroid));
    const double fc = eval(xc);
    if (fc < std::min(fr, vals.back())) {
      pts.back() = xc;
      vals.back() = fc;
      continue;
    }
    for (std::size_t k = 1; k < pts.size(); ++k) {
      pts[k] = pts.front() + 0.5 * (pts[k] - pts.front());
      vals[k] = eval(pts[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], evals};
}

}  // namespace geodefect
