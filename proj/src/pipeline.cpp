#include "geodefect/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "geodefect/error.hpp"

namespace geodefect {

namespace {

std::vector<double> vec_of(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json plane_json(const TangentPlane& P) {
  std::vector<std::vector<double>> basis;
  for (Eigen::Index j = 0; j < P.basis.cols(); ++j) basis.push_back(vec_of(P.basis.col(j)));
  return {{"point", vec_of(P.point)}, {"basis", basis}};
}

}  // namespace

MetricField MetricRecipe::build() const {
  const MetricField base = make_model(model);
  if (specs.empty()) return base;
  return deform(base, specs).metric;
}

nlohmann::json MetricRecipe::to_json() const {
  auto list = nlohmann::json::array();
  for (const auto& s : specs) list.push_back(s.to_json());
  return {{"model", model.to_json()}, {"deformations", list}};
}

MetricRecipe MetricRecipe::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("metric recipe must be a JSON object");
  MetricRecipe r;
  // A bare model descriptor is a recipe without deformations.
  if (!j.contains("model")) {
    r.model = ModelDescriptor::from_json(j);
    return r;
  }
  r.model = ModelDescriptor::from_json(j.at("model"));
  if (j.contains("deformations")) {
    if (!j.at("deformations").is_array()) throw ConfigError("recipe deformations must be an array");
    for (const auto& s : j.at("deformations")) r.specs.push_back(DeformationSpec::from_json(s));
  }
  return r;
}

std::vector<Vec> proxy_points(const Chart& chart, int per_axis) {
  if (per_axis < 1) throw ConfigError("proxy sample needs at least one point per axis");
  ScanGrid grid;
  grid.counts.assign(static_cast<std::size_t>(chart.dim()), per_axis);
  std::vector<Vec> out;
  for (int i = 0; i < grid.point_count(); ++i) out.push_back(grid.point(chart, i));
  return out;
}

double cq_proxy(const MetricField& a, const MetricField& b, const std::vector<Vec>& points, int q) {
  if (q < 0 || q > 2) throw ConfigError("the C^q proxy supports q in 0..2");
  double worst = 0.0;
  auto diff = [&](const Mat& x, const Mat& y) { worst = std::max(worst, (x - y).cwiseAbs().maxCoeff()); };
  for (const Vec& x : points) {
    const MetricJet ja = a.jet(x, q), jb = b.jet(x, q);
    diff(ja.g, jb.g);
    for (std::size_t i = 0; i < ja.d1.size(); ++i) diff(ja.d1[i], jb.d1[i]);
    for (std::size_t i = 0; i < ja.d2.size(); ++i) diff(ja.d2[i], jb.d2[i]);
  }
  return worst;
}

nlohmann::json AuditRecord::to_json() const {
  return {{"step", step},
          {"level", level},
          {"center", plane_json(center)},
          {"s", s},
          {"min_defect_before", min_defect_before},
          {"min_defect_after", min_defect_after},
          {"cq_proxy", cq_proxy},
          {"candidates", candidates}};
}

const char* to_string(PipelineResult::Status status) {
  switch (status) {
    case PipelineResult::Status::clean: return "clean";
    case PipelineResult::Status::budget: return "budget_exhausted";
    case PipelineResult::Status::steps: return "step_limit";
  }
  return "unknown";
}

nlohmann::json PipelineResult::audit_json() const {
  auto out = nlohmann::json::array();
  for (const auto& r : audit) out.push_back(r.to_json());
  return out;
}

nlohmann::json PipelineResult::summary_json() const {
  nlohmann::json levels = nlohmann::json::object();
  for (const auto& [k, v] : final_min_defect) levels[std::to_string(k)] = v;
  return {{"status", to_string(status)},
          {"steps", audit.size()},
          {"final_min_defect", levels},
          {"cq_proxy", final_cq_proxy}};
}

PipelineResult global_pipeline(const ModelDescriptor& model, const PipelineOptions& opt) {
  const MetricField input = make_model(model);
  const int n = input.dim();
  if (n < 4) throw ConfigError("the deformation pipeline needs dimension at least 4");
  if (opt.l < 2 || opt.l > n - 1) throw ConfigError("plane rank must lie in [2, n-1]");
  if (opt.local.s_schedule.empty()) throw ConfigError("the s schedule is empty");
  if (!(opt.xi > 0.0)) throw ConfigError("the C^q budget must be positive");

  std::vector<int> levels;
  for (int k = opt.reverse_induction ? n - 1 : opt.l; k >= opt.l; --k) levels.push_back(k);
  // Fixed proxy sample: a uniform grid plus the scan points themselves.
  auto points = proxy_points(input.chart(), opt.proxy_per_axis);
  opt.grid.validate(input.chart());
  for (int i = 0; i < opt.grid.point_count(); ++i) points.push_back(opt.grid.point(input.chart(), i));

  PipelineResult result;
  result.recipe.model = model;
  MetricField current = input;
  auto grid_for = [&](int k) {
    ScanGrid g = opt.grid;
    g.l = k;
    return g;
  };

  bool stopped = false;
  for (int pass = 0; pass < opt.max_passes && !stopped; ++pass) {
    bool dirty = false;
    for (int k : levels) {
      const ScanGrid grid = grid_for(k);
      auto samples = scan(current, grid, opt.scan);
      while (samples.front().report.defect <= opt.threshold) {
        dirty = true;
        if (static_cast<int>(result.audit.size()) >= opt.max_steps) {
          result.status = PipelineResult::Status::steps;
          stopped = true;
          break;
        }
        const auto cover = candidate_cover(current.chart(), samples, opt.rho, opt.threshold);
        const TangentPlane& center = cover.front().center.report.plane;
        const auto lb = local_break(current, center, opt.K, opt.eps, opt.rho, opt.pad, opt.local);
        auto trial = result.recipe.specs;
        trial.push_back(lb.passing.front());
        MetricField next = deform(input, trial).metric;
        const double proxy = cq_proxy(input, next, points, opt.q);
        if (proxy >= opt.xi) {
          result.status = PipelineResult::Status::budget;
          stopped = true;
          break;
        }
        AuditRecord rec;
        rec.step = static_cast<int>(result.audit.size());
        rec.level = k;
        rec.center = center;
        rec.s = lb.selected_s;
        rec.min_defect_before = samples.front().report.defect;
        rec.cq_proxy = proxy;
        rec.candidates = static_cast<int>(cover.size());
        result.recipe.specs = std::move(trial);
        current = std::move(next);
        samples = scan(current, grid, opt.scan);
        rec.min_defect_after = samples.front().report.defect;
        result.audit.push_back(rec);
      }
      if (stopped) break;
    }
    if (!dirty) break;
  }

  for (int k : levels) result.final_min_defect[k] = scan(current, grid_for(k), opt.scan).front().report.defect;
  result.final_cq_proxy = result.recipe.specs.empty() ? 0.0 : cq_proxy(input, current, points, opt.q);
  return result;
}

}  // namespace geodefect
