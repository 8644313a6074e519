#include "geodefect/scanner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "geodefect/error.hpp"
#include "geodefect/random.hpp"

namespace geodefect {

int ScanGrid::point_count() const {
  int total = 1;
  for (int c : counts) total *= c;
  return total;
}

void ScanGrid::validate(const Chart& chart) const {
  if (static_cast<int>(counts.size()) != chart.dim()) throw ConfigError("scan grid needs one count per axis");
  for (int c : counts)
    if (c < 1) throw ConfigError("scan grid counts must be positive");
  if (planes_per_point < 1) throw ConfigError("planes per point must be positive");
  if (l < 2 || l > chart.dim() - 1) throw ConfigError("plane rank must lie in [2, n-1]");
  if (lo.has_value() != hi.has_value()) throw ConfigError("scan region needs both bounds");
  if (lo) {
    if (lo->size() != chart.dim() || hi->size() != chart.dim()) throw ConfigError("scan region has the wrong dimension");
    for (int i = 0; i < chart.dim(); ++i) {
      if (!((*hi)[i] > (*lo)[i])) throw ConfigError("scan region is empty");
      if (!chart.periodic(i) && ((*lo)[i] < chart.lo()[i] || (*hi)[i] > chart.hi()[i]))
        throw ConfigError("scan region leaves the chart");
    }
  }
}

Vec ScanGrid::point(const Chart& chart, int index) const {
  const int n = chart.dim();
  const Vec& a = lo ? *lo : chart.lo();
  const Vec& b = hi ? *hi : chart.hi();
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    const int c = counts[static_cast<std::size_t>(i)];
    const int k = index % c;
    index /= c;
    x[i] = a[i] + (k + 0.5) * (b[i] - a[i]) / c;
  }
  return x;
}

TangentPlane sample_plane(const MetricField& m, const Vec& point, int l, std::uint64_t seed, int point_id,
                          int plane_id) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(point_id), static_cast<std::uint64_t>(plane_id)));
  return make_plane(m, point, rng.gaussian(m.dim(), l));
}

int thread_count(int requested) {
  if (requested > 0) return requested;
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GEODEFECT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
  }
  return std::max(1, n);
}

std::vector<ScanSample> scan(const MetricField& m, const ScanGrid& grid, const ScanOptions& opt) {
  grid.validate(m.chart());
  const int points = grid.point_count();
  std::vector<std::vector<ScanSample>> per_point(static_cast<std::size_t>(points));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int p = next++; p < points; p = next++) {
      try {
        const Vec x = m.chart().reduce(grid.point(m.chart(), p));
        const CurvatureData curv = riemann_tensor(m, x);
        auto& out = per_point[static_cast<std::size_t>(p)];
        for (int k = 0; k < grid.planes_per_point; ++k) {
          const TangentPlane P = make_plane(curv.g, x, [&] {
            Rng rng(mix_seed(grid.seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k)));
            return rng.gaussian(m.dim(), grid.l);
          }());
          out.push_back({p, k, plane_defect(curv, P, opt.defect)});
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = points;
      }
    }
  };
  const int threads = std::min(thread_count(opt.threads), points);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ScanSample> all;
  all.reserve(static_cast<std::size_t>(points * grid.planes_per_point));
  for (auto& v : per_point)
    for (auto& s : v) all.push_back(std::move(s));
  std::stable_sort(all.begin(), all.end(), [](const ScanSample& a, const ScanSample& b) {
    if (a.report.defect != b.report.defect) return a.report.defect < b.report.defect;
    if (a.point_id != b.point_id) return a.point_id < b.point_id;
    return a.plane_id < b.plane_id;
  });
  return all;
}

nlohmann::json MarginCertificate::to_json() const {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return nlohmann::json{{"region", {{"lo", vec(lo)}, {"hi", vec(hi)}}},
                        {"l", l},
                        {"margin", margin},
                        {"samples", samples},
                        {"weakest", weakest.report.to_json()}};
}

CertificateResult min_defect_certificate(const MetricField& m, const ScanGrid& region, double threshold,
                                         const ScanOptions& opt) {
  if (region.point_count() < 1 || region.planes_per_point < 1) throw ConfigError("empty certificate region");
  const auto samples = scan(m, region, opt);
  if (samples.empty()) throw ConfigError("empty certificate region");
  CertificateResult out;
  const ScanSample& weakest = samples.front();
  if (weakest.report.defect > threshold) {
    MarginCertificate cert;
    cert.lo = region.lo ? *region.lo : m.chart().lo();
    cert.hi = region.hi ? *region.hi : m.chart().hi();
    cert.l = region.l;
    cert.margin = weakest.report.defect;
    cert.weakest = weakest;
    cert.samples = static_cast<int>(samples.size());
    out.certificate = cert;
  } else {
    out.counterexample = weakest;
  }
  return out;
}

double principal_angle(const Mat& A, const Mat& B) {
  if (A.cols() != B.cols()) throw ConfigError("principal angle between planes of different rank");
  const Mat qa = Eigen::HouseholderQR<Mat>(A).householderQ() * Mat::Identity(A.rows(), A.cols());
  const Mat qb = Eigen::HouseholderQR<Mat>(B).householderQ() * Mat::Identity(B.rows(), B.cols());
  const Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  const double smallest = svd.singularValues().minCoeff();
  return std::acos(std::clamp(smallest, -1.0, 1.0));
}

double bundle_distance(const Chart& chart, const TangentPlane& a, const TangentPlane& b) {
  return chart.distance(a.point, b.point) + principal_angle(a.basis, b.basis);
}

std::vector<CoverBall> candidate_cover(const Chart& chart, const std::vector<ScanSample>& reports, double rho,
                                       double threshold) {
  std::vector<CoverBall> balls;
  for (const auto& s : reports) {
    if (!(s.report.defect < threshold)) continue;
    const bool covered = std::any_of(balls.begin(), balls.end(), [&](const CoverBall& b) {
      return bundle_distance(chart, b.center.report.plane, s.report.plane) < b.radius;
    });
    if (!covered) balls.push_back({s, rho});
  }
  return balls;
}

std::string scan_csv(const std::vector<ScanSample>& samples) {
  std::ostringstream os;
  char buf[64];
  const int n = samples.empty() ? 0 : samples.front().report.plane.ambient();
  os << "point_id,plane_id";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  os << ",defect\n";
  for (const auto& s : samples) {
    os << s.point_id << ',' << s.plane_id;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.report.plane.point[i]);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", s.report.defect);
    os << ',' << buf << '\n';
  }
  return os.str();
}

}  // namespace geodefect
