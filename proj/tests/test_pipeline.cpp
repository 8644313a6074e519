#include <doctest.h>

#include <numbers>

#include "geodefect/error.hpp"
#include "geodefect/pipeline.hpp"

using namespace geodefect;
using nlohmann::json;

namespace {

PipelineOptions quick_options() {
  PipelineOptions o;
  o.l = 2;
  o.grid.counts = {2, 2, 2, 2};
  o.grid.planes_per_point = 4;
  o.grid.seed = 1;
  o.local.s_schedule = geometric_schedule(10, 20, 1.0);
  return o;
}

const ModelDescriptor torus{"torus", 4, json::object(), 0};

}  // namespace

TEST_CASE("flat torus is cleared at ranks 3 and 2 within budget") {
  const PipelineResult r = global_pipeline(torus, quick_options());
  CHECK(r.status == PipelineResult::Status::clean);
  REQUIRE(r.final_min_defect.count(2) == 1);
  REQUIRE(r.final_min_defect.count(3) == 1);
  CHECK(r.final_min_defect.at(2) > 1e-7);
  CHECK(r.final_min_defect.at(3) > 1e-7);
  CHECK(r.final_cq_proxy < 1.0);
  CHECK(r.final_cq_proxy > 0.0);
  REQUIRE_FALSE(r.audit.empty());
  CHECK(r.audit.front().level == 3);
  for (const auto& a : r.audit) CHECK((a.level == 2 || a.level == 3));
  for (std::size_t i = 1; i < r.audit.size(); ++i) CHECK(r.audit[i].cq_proxy >= r.audit[i - 1].cq_proxy * (1 - 1e-12));
  CHECK(r.audit_json().size() == r.audit.size());
  CHECK(r.summary_json()["status"] == "clean");

  // The saved recipe reproduces the final metric bit for bit.
  const MetricRecipe back = MetricRecipe::from_json(json::parse(r.recipe.to_json().dump()));
  const MetricField a = r.recipe.build(), b = back.build();
  ScanGrid g = quick_options().grid;
  g.l = 3;
  const auto sa = scan(a, g), sb = scan(b, g);
  REQUIRE(sa.size() == sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].report.defect == sb[i].report.defect);
  CHECK(sa.front().report.defect == r.final_min_defect.at(3));
}

TEST_CASE("a metric already free of partially geodesic planes is left alone") {
  PipelineOptions o = quick_options();
  o.grid.counts = {2, 2, 2, 2};
  const PipelineResult r = global_pipeline(ModelDescriptor{"random-trig", 4, json{{"amplitude", 0.05}}, 7}, o);
  CHECK(r.status == PipelineResult::Status::clean);
  CHECK(r.audit.empty());
  CHECK(r.recipe.specs.empty());
  CHECK(r.final_cq_proxy == 0.0);
}

TEST_CASE("a tiny budget stops the pipeline") {
  PipelineOptions o = quick_options();
  o.xi = 1e-12;
  const PipelineResult r = global_pipeline(torus, o);
  CHECK(r.status == PipelineResult::Status::budget);
  CHECK(r.final_cq_proxy < 1e-12);
  CHECK(std::string(to_string(r.status)) == "budget_exhausted");
}

TEST_CASE("bad pipeline configuration") {
  PipelineOptions o = quick_options();
  o.local.s_schedule.clear();
  CHECK_THROWS_AS(global_pipeline(torus, o), ConfigError);
  o = quick_options();
  o.q = 3;
  CHECK_THROWS_AS(global_pipeline(torus, o), ConfigError);
}

TEST_CASE("C^q proxy of identical metrics is zero and sees entry changes") {
  const MetricField t = make_model(torus);
  const auto pts = proxy_points(t.chart(), 3);
  CHECK(pts.size() == 81);
  CHECK(cq_proxy(t, t, pts, 2) == 0.0);
  const MetricField u = scaled_metric(t, 1.1);
  CHECK(cq_proxy(t, u, pts, 0) == doctest::Approx(0.21));
}
