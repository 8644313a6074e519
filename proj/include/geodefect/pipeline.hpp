#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geodefect/deformation.hpp"
#include "geodefect/models.hpp"
#include "geodefect/scanner.hpp"

namespace geodefect {

// A zoo model plus an ordered list of deformations; re-evaluates exactly.
struct MetricRecipe {
  ModelDescriptor model;
  std::vector<DeformationSpec> specs;

  MetricField build() const;
  nlohmann::json to_json() const;
  static MetricRecipe from_json(const nlohmann::json& j);
};

// Cell centres of a uniform grid with `per_axis` points per axis.
std::vector<Vec> proxy_points(const Chart& chart, int per_axis);

// max over the points of |a - b| for metric entries and all partials up to
// order q (q in 0..2).
double cq_proxy(const MetricField& a, const MetricField& b, const std::vector<Vec>& points, int q);

struct PipelineOptions {
  int l = 2;                       // lowest plane rank to clear
  bool reverse_induction = true;   // clear ranks n-1 down to l; otherwise only l
  ScanGrid grid;                   // counts, planes per point and seed; rank is set per level
                                   // (its points also join the proxy sample)
  double K = 10.0;
  double eps = 0.1;
  double rho = 0.5;
  double pad = 0.5;
  double xi = 1.0;                 // C^q budget from the input metric
  int q = 2;
  int proxy_per_axis = 4;
  int max_steps = 200;
  int max_passes = 3;              // full sweeps over the ranks
  double threshold = 1e-7;         // partially-geodesic tolerance
  LocalBreakOptions local;
  ScanOptions scan;
};

struct AuditRecord {
  int step = 0;
  int level = 0;
  TangentPlane center;
  double s = 0.0;
  double min_defect_before = 0.0;
  double min_defect_after = 0.0;
  double cq_proxy = 0.0;
  int candidates = 0;  // cover balls before the step

  nlohmann::json to_json() const;
};

struct PipelineResult {
  enum class Status { clean, budget, steps };
  Status status = Status::clean;
  MetricRecipe recipe;
  std::vector<AuditRecord> audit;
  std::map<int, double> final_min_defect;  // per plane rank
  double final_cq_proxy = 0.0;

  nlohmann::json audit_json() const;
  nlohmann::json summary_json() const;
};

const char* to_string(PipelineResult::Status status);

// Scan, cover the low-defect samples, break the first cover centre, rescan;
// per rank from n-1 down to l. Stops with Status::budget when the next step
// would push the proxy distance to the input past xi.
PipelineResult global_pipeline(const ModelDescriptor& model, const PipelineOptions& opt);

}  // namespace geodefect
