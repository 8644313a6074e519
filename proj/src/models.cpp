#include "geodefect/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "geodefect/error.hpp"
#include "geodefect/random.hpp"

namespace geodefect {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double param(const ModelDescriptor& d, const char* key, double fallback) {
  if (!d.params.contains(key)) return fallback;
  const auto& v = d.params.at(key);
  if (!v.is_number()) throw ConfigError(std::string("model parameter '") + key + "' must be a number");
  return v.get<double>();
}

int int_param(const ModelDescriptor& d, const char* key, int fallback) {
  if (!d.params.contains(key)) return fallback;
  const auto& v = d.params.at(key);
  if (!v.is_number_integer()) throw ConfigError(std::string("model parameter '") + key + "' must be an integer");
  return v.get<int>();
}

MetricField from_jet(Chart chart, JetFn jet) {
  MetricFn value = [jet](const Vec& x) { return jet(x, 0).g; };
  return MetricField(std::move(chart), std::move(value), DerivativeBackend::analytic(), std::move(jet));
}

MetricField make_torus(const ModelDescriptor& d) {
  const double period = param(d, "period", kTwoPi);
  if (!(period > 0.0)) throw ConfigError("torus period must be positive");
  const int n = d.n;
  return from_jet(Chart::torus(n, period), [n](const Vec&, int order) {
    MetricJet jet = MetricJet::zero(n, order);
    jet.g.setIdentity();
    return jet;
  });
}

// Round unit sphere through stereographic projection: g = 4 / (1 + |x|^2)^2 delta.
MetricField make_sphere(const ModelDescriptor& d) {
  const double box = param(d, "box", 2.0);
  if (!(box > 0.0)) throw ConfigError("sphere box half-width must be positive");
  const int n = d.n;
  return from_jet(Chart::box(n, -box, box), [n](const Vec& x, int order) {
    const double q = 1.0 + x.squaredNorm();
    MetricJet jet = MetricJet::zero(n, order);
    const Mat id = Mat::Identity(n, n);
    jet.g = (4.0 / (q * q)) * id;
    if (order >= 1) {
      for (int i = 0; i < n; ++i)
        jet.d1[static_cast<std::size_t>(i)] = (-16.0 * x[i] / (q * q * q)) * id;
    }
    if (order >= 2) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double c = (i == j ? -16.0 / (q * q * q) : 0.0) + 96.0 * x[i] * x[j] / (q * q * q * q);
          jet.second(i, j) = c * id;
        }
      }
    }
    return jet;
  });
}

// Upper half of the ellipsoid sum x_i^2 / a_i^2 + z^2 / c^2 = 1 as the graph
// z(x); induced metric delta_ij + z_i z_j.
MetricField make_ellipsoid(const ModelDescriptor& d) {
  const int n = d.n;
  std::vector<double> axes(static_cast<std::size_t>(n + 1), 1.0);
  axes.back() = 2.0;
  if (d.params.contains("semi_axes")) {
    try {
      axes = d.params.at("semi_axes").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ConfigError("ellipsoid semi_axes must be a list of numbers");
    }
    if (axes.size() != static_cast<std::size_t>(n + 1))
      throw ConfigError("ellipsoid needs n + 1 semi-axes (the last is the graph axis)");
  }
  for (double a : axes)
    if (!(a > 0.0)) throw ConfigError("ellipsoid semi-axes must be positive");
  const double fraction = param(d, "box_fraction", 0.8 / std::sqrt(static_cast<double>(n)));
  if (!(fraction > 0.0) || fraction * fraction * n >= 1.0)
    throw ConfigError("ellipsoid box_fraction must satisfy n * fraction^2 < 1");

  Vec a(n), lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    a[i] = axes[static_cast<std::size_t>(i)];
    hi[i] = fraction * a[i];
    lo[i] = -hi[i];
  }
  const double c = axes.back();
  return from_jet(Chart(lo, hi), [n, a, c](const Vec& x, int order) {
    // w = 1 - sum x_i^2 / a_i^2, z = c sqrt(w); w has constant Hessian.
    double w = 1.0;
    Vec wi(n), wii(n);
    for (int i = 0; i < n; ++i) {
      w -= x[i] * x[i] / (a[i] * a[i]);
      wi[i] = -2.0 * x[i] / (a[i] * a[i]);
      wii[i] = -2.0 / (a[i] * a[i]);
    }
    const double r1 = std::pow(w, -0.5), r3 = std::pow(w, -1.5), r5 = std::pow(w, -2.5);
    auto wij = [&](int i, int j) { return i == j ? wii[i] : 0.0; };
    Vec z1(n);
    for (int i = 0; i < n; ++i) z1[i] = 0.5 * c * r1 * wi[i];
    auto z2 = [&](int i, int j) { return c * (-0.25 * r3 * wi[i] * wi[j] + 0.5 * r1 * wij(i, j)); };
    auto z3 = [&](int i, int j, int k) {
      return c * (0.375 * r5 * wi[i] * wi[j] * wi[k] -
                  0.25 * r3 * (wij(i, k) * wi[j] + wi[i] * wij(j, k) + wij(i, j) * wi[k]));
    };
    MetricJet jet = MetricJet::zero(n, order);
    jet.g = Mat::Identity(n, n) + z1 * z1.transpose();
    if (order >= 1) {
      for (int k = 0; k < n; ++k) {
        Mat& dk = jet.d1[static_cast<std::size_t>(k)];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) dk(i, j) = z2(i, k) * z1[j] + z1[i] * z2(j, k);
      }
    }
    if (order >= 2) {
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < n; ++m) {
          Mat& dkm = jet.second(k, m);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              dkm(i, j) = z3(i, k, m) * z1[j] + z2(i, k) * z2(j, m) + z2(i, m) * z2(j, k) +
                          z1[i] * z3(j, k, m);
        }
      }
    }
    return jet;
  });
}

// dt^2 + phi(t)^2 (dy_1^2 + ... + dy_k^2) + flat factor. With phi = sin the
// first 1 + k coordinates form a piece of the round S^{k+1}; with
// phi = sinh a piece of hyperbolic space.
MetricField make_warped(const ModelDescriptor& d) {
  const int n = d.n;
  const int k = int_param(d, "fiber_dim", 1);
  if (k < 1 || k > n - 1) throw ConfigError("warped fiber_dim must lie in [1, n-1]");
  const std::string profile = d.params.value("profile", std::string("sin"));
  if (profile != "sin" && profile != "sinh") throw ConfigError("warped profile must be 'sin' or 'sinh'");
  const bool hyperbolic = profile == "sinh";

  Vec lo = Vec::Zero(n), hi = Vec::Constant(n, kTwoPi);
  std::vector<std::optional<double>> period(static_cast<std::size_t>(n), kTwoPi);
  lo[0] = 0.3;
  hi[0] = hyperbolic ? 2.5 : std::numbers::pi - 0.3;
  period[0] = std::nullopt;
  return from_jet(Chart(lo, hi, period), [n, k, hyperbolic](const Vec& x, int order) {
    const double t = x[0];
    const double phi = hyperbolic ? std::sinh(t) : std::sin(t);
    const double dphi = hyperbolic ? std::cosh(t) : std::cos(t);
    const double ddphi = hyperbolic ? std::sinh(t) : -std::sin(t);
    MetricJet jet = MetricJet::zero(n, order);
    jet.g.setIdentity();
    for (int a = 1; a <= k; ++a) jet.g(a, a) = phi * phi;
    if (order >= 1)
      for (int a = 1; a <= k; ++a) jet.d1[0](a, a) = 2.0 * phi * dphi;
    if (order >= 2)
      for (int a = 1; a <= k; ++a) jet.second(0, 0)(a, a) = 2.0 * (dphi * dphi + phi * ddphi);
    return jet;
  });
}

// I + amplitude * S(x) on the 2 pi torus; every entry of S is a sum of
// seeded cosine modes with coefficient mass at most 1, so amplitude * n < 1
// keeps the metric positive definite everywhere (Gershgorin).
MetricField make_random_trig(const ModelDescriptor& d) {
  const int n = d.n;
  const double amplitude = param(d, "amplitude", 0.05);
  const int modes = int_param(d, "modes", 3);
  const int kmax = int_param(d, "max_wavenumber", 2);
  if (!(amplitude >= 0.0) || amplitude * n >= 1.0)
    throw ConfigError("random-trig amplitude must satisfy 0 <= amplitude * n < 1");
  if (modes < 1 || kmax < 1) throw ConfigError("random-trig needs modes >= 1 and max_wavenumber >= 1");

  struct Mode {
    int i, j;
    Vec k;
    double coeff, phase;
  };
  std::vector<Mode> table;
  Rng rng(d.seed);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<Mode> entry;
      double mass = 0.0;
      for (int m = 0; m < modes; ++m) {
        Vec kv(n);
        do {
          for (int a = 0; a < n; ++a)
            kv[a] = static_cast<double>(static_cast<int>(rng.uniform() * (2 * kmax + 1)) - kmax);
        } while (kv.cwiseAbs().maxCoeff() == 0.0);
        const double coeff = rng.uniform(-1.0, 1.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        mass += std::abs(coeff);
        entry.push_back({i, j, kv, coeff, phase});
      }
      for (auto& e : entry) {
        e.coeff /= std::max(mass, 1.0);
        table.push_back(e);
      }
    }
  }
  return from_jet(Chart::torus(n, kTwoPi), [n, amplitude, table](const Vec& x, int order) {
    MetricJet jet = MetricJet::zero(n, order);
    jet.g.setIdentity();
    for (const auto& m : table) {
      const double theta = m.k.dot(x) + m.phase;
      const double c = amplitude * m.coeff * std::cos(theta);
      const double s = amplitude * m.coeff * std::sin(theta);
      auto add = [&](Mat& target, double v) {
        target(m.i, m.j) += v;
        if (m.i != m.j) target(m.j, m.i) += v;
      };
      add(jet.g, c);
      if (order >= 1)
        for (int p = 0; p < n; ++p) add(jet.d1[static_cast<std::size_t>(p)], -s * m.k[p]);
      if (order >= 2)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) add(jet.second(p, q), -c * m.k[p] * m.k[q]);
    }
    return jet;
  });
}

}  // namespace

json ModelDescriptor::to_json() const {
  return json{{"type", type}, {"n", n}, {"params", params}, {"seed", seed}};
}

ModelDescriptor ModelDescriptor::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model descriptor must be a JSON object");
  ModelDescriptor d;
  try {
    d.type = j.at("type").get<std::string>();
    d.n = j.value("n", 4);
    d.params = j.value("params", json::object());
    d.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model descriptor: ") + e.what());
  }
  if (!d.params.is_object()) throw ConfigError("model descriptor params must be an object");
  return d;
}

const std::vector<ZooEntry>& model_zoo() {
  static const std::vector<ZooEntry> zoo = {
      {"torus", "flat torus T^n, identity metric, all axes periodic",
       {{"period", "side length of every periodic axis (default 2*pi)"}}},
      {"sphere", "round unit S^n in the stereographic chart, 4/(1+|x|^2)^2 delta",
       {{"box", "half-width of the chart box (default 2)"}}},
      {"ellipsoid", "ellipsoid as a graph over its equatorial box",
       {{"semi_axes", "n+1 semi-axes, the last one along the graph direction (default 1,...,1,2)"},
        {"box_fraction", "chart box half-width as a fraction of each semi-axis (default 0.8 / sqrt(n))"}}},
      {"warped", "dt^2 + phi(t)^2 |dy|^2 + flat factor",
       {{"profile", "'sin' (round) or 'sinh' (hyperbolic), default sin"},
        {"fiber_dim", "number of warped fiber coordinates (default 1)"}}},
      {"random-trig", "identity plus a seeded trigonometric perturbation on the 2*pi torus",
       {{"amplitude", "perturbation amplitude, amplitude * n < 1 (default 0.05)"},
        {"modes", "cosine modes per entry (default 3)"},
        {"max_wavenumber", "largest integer wave-vector component (default 2)"}}},
  };
  return zoo;
}

json zoo_json() {
  json out = json::array();
  for (const auto& e : model_zoo()) {
    json params = json::object();
    for (const auto& [name, doc] : e.params) params[name] = doc;
    out.push_back({{"type", e.type}, {"summary", e.summary}, {"params", params}});
  }
  return out;
}

MetricField make_model(const ModelDescriptor& desc) {
  if (desc.n < 2) throw ConfigError("model dimension must be at least 2");
  if (desc.type == "torus") return make_torus(desc);
  if (desc.type == "sphere") return make_sphere(desc);
  if (desc.type == "ellipsoid") return make_ellipsoid(desc);
  if (desc.type == "warped") return make_warped(desc);
  if (desc.type == "random-trig") return make_random_trig(desc);
  std::ostringstream os;
  os << "unknown model '" << desc.type << "'; available:";
  for (const auto& e : model_zoo()) os << ' ' << e.type;
  throw ConfigError(os.str());
}

MetricField scaled_metric(const MetricField& m, double c) {
  const double c2 = c * c;
  const MetricField base = m;
  MetricFn value = [base, c2](const Vec& x) { return Mat(c2 * base.raw(x)); };
  JetFn jet = [base, c2](const Vec& x, int order) {
    MetricJet j = base.jet(x, order);
    j.g *= c2;
    for (auto& d : j.d1) d *= c2;
    for (auto& d : j.d2) d *= c2;
    return j;
  };
  return MetricField(m.chart(), value, DerivativeBackend::analytic(), jet);
}

}  // namespace geodefect
