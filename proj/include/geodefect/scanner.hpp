#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geodefect/defect.hpp"

namespace geodefect {

// Cell-centred spatial grid over a box plus seeded plane samples per point.
struct ScanGrid {
  std::vector<int> counts;  // per axis
  int planes_per_point = 8;
  int l = 2;
  std::uint64_t seed = 1;
  // Box to sample; empty means the whole chart.
  std::optional<Vec> lo, hi;

  int point_count() const;
  void validate(const Chart& chart) const;
  // Grid point `index` (row-major, first axis slowest).
  Vec point(const Chart& chart, int index) const;
};

struct ScanSample {
  int point_id = 0;
  int plane_id = 0;
  DefectReport report;
};

struct ScanOptions {
  DefectOptions defect;
  int threads = 0;  // 0: GEODEFECT_THREADS or hardware concurrency
};

// Deterministic plane for (seed, point, plane): a Gaussian n x l matrix from a
// stream derived from the triple, orthonormalized in the metric.
TangentPlane sample_plane(const MetricField& m, const Vec& point, int l, std::uint64_t seed,
                          int point_id, int plane_id);

// One report per (point, plane) sample, sorted ascending by defect, ties by
// (point_id, plane_id). Parallel and serial runs give identical output.
std::vector<ScanSample> scan(const MetricField& m, const ScanGrid& grid, const ScanOptions& opt = {});

int thread_count(int requested);

struct MarginCertificate {
  Vec lo, hi;
  int l = 0;
  double margin = 0.0;
  ScanSample weakest;
  int samples = 0;

  nlohmann::json to_json() const;
};

struct CertificateResult {
  std::optional<MarginCertificate> certificate;
  std::optional<ScanSample> counterexample;
};

// Certificate with margin = min sampled defect if every sample in the region
// beats `threshold`; otherwise the weakest sample as a counterexample.
CertificateResult min_defect_certificate(const MetricField& m, const ScanGrid& region, double threshold,
                                         const ScanOptions& opt = {});

// Largest principal angle between the coordinate spans of two bases.
double principal_angle(const Mat& A, const Mat& B);

// Base distance (nearest periodic image) plus largest principal angle.
double bundle_distance(const Chart& chart, const TangentPlane& a, const TangentPlane& b);

struct CoverBall {
  ScanSample center;
  double radius = 0.0;
};

// Greedy cover of the samples with defect < threshold by balls of radius
// rho, visiting samples in their given (sorted) order.
std::vector<CoverBall> candidate_cover(const Chart& chart, const std::vector<ScanSample>& reports,
                                       double rho, double threshold);

// CSV with header: point_id,plane_id,x0..x{n-1},defect.
std::string scan_csv(const std::vector<ScanSample>& samples);

}  // namespace geodefect
