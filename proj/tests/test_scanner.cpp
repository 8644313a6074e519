#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "geodefect/error.hpp"
#include "geodefect/models.hpp"
#include "geodefect/scanner.hpp"

using namespace geodefect;
using nlohmann::json;

namespace {

MetricField trig7() { return make_model(ModelDescriptor{"random-trig", 4, json{{"amplitude", 0.2}}, 7}); }

ScanGrid small_grid(int l) {
  ScanGrid g;
  g.counts = {2, 2, 2, 2};
  g.planes_per_point = 3;
  g.l = l;
  g.seed = 5;
  return g;
}

bool same(const std::vector<ScanSample>& a, const std::vector<ScanSample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].point_id != b[i].point_id || a[i].plane_id != b[i].plane_id ||
        a[i].report.defect != b[i].report.defect || a[i].report.vstar != b[i].report.vstar)
      return false;
  return true;
}

}  // namespace

TEST_CASE("serial and parallel scans are identical") {
  const MetricField m = trig7();
  ScanOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const auto a = scan(m, small_grid(2), one);
  const auto b = scan(m, small_grid(2), many);
  CHECK(a.size() == 48);
  CHECK(same(a, b));
}

TEST_CASE("scan output is sorted by defect then ids") {
  const auto s = scan(trig7(), small_grid(3));
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto& p = s[i - 1];
    const auto& q = s[i];
    const bool ordered = p.report.defect < q.report.defect ||
                         (p.report.defect == q.report.defect &&
                          std::pair(p.point_id, p.plane_id) < std::pair(q.point_id, q.plane_id));
    CHECK(ordered);
  }
}

TEST_CASE("sampled planes are reproducible and orthonormal") {
  const MetricField m = trig7();
  const Vec x = Vec::Constant(4, 1.0);
  const TangentPlane a = sample_plane(m, x, 2, 9, 3, 1);
  const TangentPlane b = sample_plane(m, x, 2, 9, 3, 1);
  const TangentPlane c = sample_plane(m, x, 2, 9, 3, 2);
  CHECK(a.basis == b.basis);
  CHECK(a.basis != c.basis);
  CHECK(orthonormality_residual(m.metric_at(x), a.basis) < 1e-12);
}

TEST_CASE("grid points are cell centred, first axis slowest") {
  const Chart c = Chart::torus(2, 4.0);
  ScanGrid g;
  g.counts = {2, 4};
  CHECK(g.point_count() == 8);
  CHECK(g.point(c, 0)[0] == doctest::Approx(1.0));
  CHECK(g.point(c, 0)[1] == doctest::Approx(0.5));
  CHECK(g.point(c, 1)[1] == doctest::Approx(1.5));
  CHECK(g.point(c, 4)[0] == doctest::Approx(3.0));
  g.counts = {2};
  CHECK_THROWS_AS(g.validate(c), ConfigError);
}

TEST_CASE("principal angle") {
  Mat A = Mat::Identity(3, 3).leftCols(2);
  Mat B(3, 2);
  const double t = 0.3;
  B << 1, 0, 0, std::cos(t), 0, std::sin(t);
  CHECK(principal_angle(A, B) == doctest::Approx(t).epsilon(1e-12));
  CHECK(principal_angle(A, A * Mat{{0.0, 1.0}, {1.0, 0.0}}) < 1e-7);
}

TEST_CASE("greedy cover matches a direct recomputation") {
  const MetricField m = trig7();
  const auto s = scan(m, small_grid(2));
  const double threshold = s[s.size() / 2].report.defect;
  const double rho = 1.5;
  const auto cover = candidate_cover(m.chart(), s, rho, threshold);
  // Oracle: walk the sorted samples, open a ball whenever no existing centre
  // is within rho.
  std::vector<const ScanSample*> centres;
  for (const auto& x : s) {
    if (!(x.report.defect < threshold)) continue;
    bool covered = false;
    for (const auto* c : centres)
      covered = covered || bundle_distance(m.chart(), c->report.plane, x.report.plane) < rho;
    if (!covered) centres.push_back(&x);
  }
  REQUIRE(cover.size() == centres.size());
  for (std::size_t i = 0; i < cover.size(); ++i) {
    CHECK(cover[i].center.point_id == centres[i]->point_id);
    CHECK(cover[i].center.plane_id == centres[i]->plane_id);
  }
}

TEST_CASE("csv has the documented header") {
  const auto s = scan(trig7(), small_grid(2));
  std::istringstream in(scan_csv(s));
  std::string header;
  std::getline(in, header);
  CHECK(header == "point_id,plane_id,x0,x1,x2,x3,defect");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 48);
}

TEST_CASE("certificate on a curved region, counterexample on the flat torus") {
  ScanGrid region = small_grid(2);
  region.lo = Vec::Constant(4, 0.5);
  region.hi = Vec::Constant(4, 1.5);
  const auto r = min_defect_certificate(trig7(), region, 1e-7);
  REQUIRE(r.certificate);
  CHECK(r.certificate->margin > 1e-7);
  CHECK(r.certificate->samples == 48);
  CHECK(r.certificate->to_json().contains("margin"));

  const auto flat = min_defect_certificate(make_model(ModelDescriptor{"torus", 4, json::object(), 0}),
                                           small_grid(2), 1e-7);
  CHECK_FALSE(flat.certificate);
  REQUIRE(flat.counterexample);
  CHECK(flat.counterexample->report.defect == 0.0);
}

TEST_CASE("golden minimum defects for random-trig seed 7") {
  const std::string path = std::string(GEODEFECT_TEST_DIR) + "/golden/random_trig_seed7.json";
  json now = json::object();
  for (int l : {2, 3}) {
    const auto s = scan(trig7(), small_grid(l));
    json lowest = json::array();
    for (std::size_t i = 0; i < 5; ++i) lowest.push_back(s[i].report.defect);
    now["l" + std::to_string(l)] = {{"min_defect", s.front().report.defect},
                                    {"point_id", s.front().point_id},
                                    {"plane_id", s.front().plane_id},
                                    {"lowest", lowest}};
  }
  if (std::getenv("GEODEFECT_REGEN_GOLDEN")) {
    std::ofstream(path) << now.dump(2) << "\n";
    return;
  }
  std::ifstream in(path);
  REQUIRE(in.good());
  const json golden = json::parse(in);
  for (const char* key : {"l2", "l3"}) {
    CHECK(now[key]["point_id"] == golden[key]["point_id"]);
    CHECK(now[key]["plane_id"] == golden[key]["plane_id"]);
    for (std::size_t i = 0; i < 5; ++i)
      CHECK(std::abs(now[key]["lowest"][i].get<double>() - golden[key]["lowest"][i].get<double>()) < 1e-9);
  }
}
