// Batch front-end: zoo listing, scans, the deformation pipeline and the
// property suite. Exit codes: 0 ok, 2 config, 3 numerical, 4 budget,
// 5 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geodefect/error.hpp"
#include "geodefect/pipeline.hpp"
#include "geodefect/verify.hpp"

namespace fs = std::filesystem;
using namespace geodefect;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kBudget = 4, kVerify = 5 };

struct Common {
  std::string model = "torus";
  std::string model_file;
  int n = 4;
  std::vector<std::string> params;  // key=value, value parsed as JSON
  std::uint64_t model_seed = 0;
  int l = 2;
  std::string grid = "3";
  int planes_per_point = 8;
  std::uint64_t seed = 1;
  double tol_on = 1e-10, tol_sym = 1e-8, tol_pg = 1e-7;
  std::string out_dir;
  bool json_out = false;
  int threads = 0;
};

MetricRecipe load_recipe(const Common& c) {
  if (!c.model_file.empty()) {
    std::ifstream in(c.model_file);
    if (!in) throw ConfigError("cannot open model file " + c.model_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("model file is not valid JSON: ") + e.what());
    }
    return MetricRecipe::from_json(j);
  }
  MetricRecipe r;
  r.model.type = c.model;
  r.model.n = c.n;
  r.model.seed = c.model_seed;
  for (const auto& kv : c.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got " + kv);
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      r.model.params[key] = json::parse(value);
    } catch (const json::exception&) {
      r.model.params[key] = value;
    }
  }
  return r;
}

std::vector<int> parse_counts(const std::string& spec, int n) {
  std::vector<int> counts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      counts.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad --grid entry '" + item + "'");
    }
  }
  if (counts.size() == 1) counts.assign(static_cast<std::size_t>(n), counts.front());
  if (static_cast<int>(counts.size()) != n) throw ConfigError("--grid needs one count or one per axis");
  return counts;
}

// "lo:hi" gives 2^-lo ... 2^-hi; otherwise a comma list of amplitudes.
std::vector<double> parse_schedule(const std::string& spec) {
  if (spec.empty()) throw ConfigError("the s schedule is empty");
  const auto colon = spec.find(':');
  try {
    if (colon != std::string::npos)
      return geometric_schedule(std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1)));
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw ConfigError("the s schedule is empty");
    return out;
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad --s-schedule '" + spec + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("bad --s-schedule '" + spec + "'");
  }
}

fs::path out_dir(const Common& c) {
  fs::path dir = c.out_dir.empty() ? fs::path(".") : fs::path(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void add_common(CLI::App* app, Common& c, bool with_plane) {
  app->add_option("--model", c.model, "zoo model type");
  app->add_option("--model-file", c.model_file, "model descriptor or saved recipe (JSON)");
  app->add_option("--n", c.n, "dimension");
  app->add_option("--param", c.params, "model parameter key=value (repeatable)");
  app->add_option("--model-seed", c.model_seed, "seed of seeded models");
  if (with_plane) {
    app->add_option("--l", c.l, "plane rank");
    app->add_option("--grid", c.grid, "points per axis: one count or a comma list");
    app->add_option("--planes-per-point", c.planes_per_point, "sampled planes per grid point");
  }
  app->add_option("--seed", c.seed, "sampling seed");
  app->add_option("--tol-on", c.tol_on, "orthonormality tolerance");
  app->add_option("--tol-sym", c.tol_sym, "self-adjointness tolerance");
  app->add_option("--tol-pg", c.tol_pg, "partially-geodesic threshold");
  app->add_option("--out-dir", c.out_dir, "output directory");
  app->add_flag("--json", c.json_out, "print the summary as JSON");
  app->add_option("--threads", c.threads, "worker threads (0: GEODEFECT_THREADS or all cores)");
}

int cmd_zoo(bool as_json) {
  if (as_json) {
    std::cout << zoo_json().dump(2) << "\n";
    return kOk;
  }
  for (const auto& e : model_zoo()) {
    std::cout << e.type << ": " << e.summary << "\n";
    for (const auto& [name, doc] : e.params) std::cout << "    " << name << ": " << doc << "\n";
  }
  return kOk;
}

int cmd_scan(const Common& c) {
  const MetricRecipe recipe = load_recipe(c);
  const MetricField m = recipe.build();
  ScanGrid grid;
  grid.counts = parse_counts(c.grid, m.dim());
  grid.planes_per_point = c.planes_per_point;
  grid.l = c.l;
  grid.seed = c.seed;
  ScanOptions opt;
  opt.threads = c.threads;
  opt.defect.sym_tol = c.tol_sym;
  const auto samples = scan(m, grid, opt);
  const auto& weakest = samples.front();

  json summary{{"model", recipe.model.to_json()},
               {"deformations", recipe.specs.size()},
               {"l", c.l},
               {"samples", samples.size()},
               {"min_defect", weakest.report.defect},
               {"argmin", weakest.report.to_json()},
               {"threshold", c.tol_pg}};
  if (weakest.report.defect > c.tol_pg) {
    MarginCertificate cert;
    cert.lo = m.chart().lo();
    cert.hi = m.chart().hi();
    cert.l = c.l;
    cert.margin = weakest.report.defect;
    cert.weakest = weakest;
    cert.samples = static_cast<int>(samples.size());
    summary["certificate"] = cert.to_json();
  } else {
    summary["certificate"] = nullptr;
  }
  const fs::path dir = out_dir(c);
  write_file(dir / "scan.csv", scan_csv(samples));
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (c.json_out) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::printf("min_defect %.17g over %zu samples\n", weakest.report.defect, samples.size());
  }
  return kOk;
}

struct DeformArgs {
  double K = 10.0, eps = 0.1, rho = 0.5, eta = 0.5, xi = 1.0;
  std::string schedule = "10:20";
  int q = 2;
  int max_steps = 200;
  bool single_level = false;
};

int cmd_deform(const Common& c, const DeformArgs& a) {
  const MetricRecipe input = load_recipe(c);
  if (!input.specs.empty()) throw ConfigError("deform starts from a plain model descriptor");
  PipelineOptions opt;
  opt.l = c.l;
  opt.reverse_induction = !a.single_level;
  opt.grid.counts = parse_counts(c.grid, input.model.n);
  opt.grid.planes_per_point = c.planes_per_point;
  opt.grid.seed = c.seed;
  opt.K = a.K;
  opt.eps = a.eps;
  opt.rho = a.rho;
  opt.pad = a.eta;
  opt.xi = a.xi;
  opt.q = a.q;
  opt.max_steps = a.max_steps;
  opt.threshold = c.tol_pg;
  opt.local.s_schedule = parse_schedule(a.schedule);
  opt.scan.threads = c.threads;
  opt.scan.defect.sym_tol = c.tol_sym;

  const PipelineResult res = global_pipeline(input.model, opt);
  const fs::path dir = out_dir(c);
  write_file(dir / "audit.json", res.audit_json().dump(2) + "\n");
  write_file(dir / "final_metric.json", res.recipe.to_json().dump(2) + "\n");
  json summary = res.summary_json();
  summary["xi"] = a.xi;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (c.json_out) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::printf("status %s, %zu steps, C^%d proxy %.6g\n", to_string(res.status), res.audit.size(), a.q,
                res.final_cq_proxy);
    for (const auto& [k, v] : res.final_min_defect) std::printf("  l=%d min_defect %.17g\n", k, v);
  }
  if (res.status != PipelineResult::Status::clean) {
    std::fprintf(stderr, "deform: %s before all sampled defects cleared (partial progress written)\n",
                 to_string(res.status));
    return kBudget;
  }
  return kOk;
}

int cmd_verify(const Common& c, const VerifyConfig& v) {
  VerifyConfig cfg = v;
  cfg.seed = c.seed;
  const auto checks = run_verify_suite(cfg);
  const json report = verify_report(checks);
  if (!c.out_dir.empty()) write_file(out_dir(c) / "verify.json", report.dump(2) + "\n");
  if (c.json_out) {
    std::cout << report.dump(2) << "\n";
  } else {
    for (const auto& r : checks)
      std::printf("%s %-34s measured %.6g need %s %.6g %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured,
                  r.lower_bound ? ">" : "<", r.tolerance, r.detail.c_str());
  }
  return report.at("passed").get<bool>() ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodefect: partially geodesic planes and the local metric deformation"};
  app.require_subcommand(1);

  bool zoo_json_flag = false;
  auto* zoo = app.add_subcommand("zoo", "list the model zoo");
  zoo->add_flag("--json", zoo_json_flag, "machine-readable listing");

  Common scan_c;
  auto* scan_cmd = app.add_subcommand("scan", "sample plane defects over a grid");
  add_common(scan_cmd, scan_c, true);

  Common deform_c;
  DeformArgs deform_a;
  auto* deform_cmd = app.add_subcommand("deform", "run the deformation pipeline");
  add_common(deform_cmd, deform_c, true);
  deform_c.grid = "2";
  deform_c.planes_per_point = 4;
  deform_cmd->add_option("--K", deform_a.K, "gain constant K > 1");
  deform_cmd->add_option("--eps", deform_a.eps, "smallness epsilon");
  deform_cmd->add_option("--rho", deform_a.rho, "inner radius");
  deform_cmd->add_option("--eta", deform_a.eta, "cutoff transition width");
  deform_cmd->add_option("--s-schedule", deform_a.schedule, "lo:hi for 2^-lo..2^-hi, or a comma list");
  deform_cmd->add_option("--q", deform_a.q, "order of the C^q proxy (0..2)");
  deform_cmd->add_option("--xi", deform_a.xi, "C^q budget");
  deform_cmd->add_option("--max-steps", deform_a.max_steps, "step limit");
  deform_cmd->add_flag("--single-level", deform_a.single_level, "clear only rank l (no reverse induction)");

  Common verify_c;
  VerifyConfig verify_v;
  std::string fixture;
  auto* verify_cmd = app.add_subcommand("verify", "run the property suite");
  add_common(verify_cmd, verify_c, false);
  verify_cmd->add_option("--fixture", fixture, "test fixture: flip-sign")->check(CLI::IsMember({"", "flip-sign"}));
  verify_cmd->add_option("--fd-step", verify_v.fd_step, "central-difference step of the convergence check");
  verify_cmd->add_flag("--quick", verify_v.quick, "fewer samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*zoo) return cmd_zoo(zoo_json_flag);
    if (*scan_cmd) return cmd_scan(scan_c);
    if (*deform_cmd) return cmd_deform(deform_c, deform_a);
    if (*verify_cmd) {
      verify_v.flip_curvature_sign = fixture == "flip-sign";
      return cmd_verify(verify_c, verify_v);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const BudgetError& e) {
    std::fprintf(stderr, "budget exhausted: %s\n", e.what());
    return kBudget;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return kNumerical;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }
  return kConfig;
}
