#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "blorbit/error.hpp"
#include "blorbit/pipeline.hpp"

using namespace blorbit;

namespace {

std::string out_dir = ".";

void write_file(const std::string& name, const std::string& content) {
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(tags::kConfig, "cannot write '" + path.string() + "'");
  out << content;
  std::cout << "wrote " << path.string() << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(tags::kConfig, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RangeContext context_for(const Config& cfg, const SeminormalForm& form) {
  const ResonanceContext rc = ResonanceContext::from(form, frequencies(cfg.model, cfg.trunc), cfg.trunc.eta);
  const TorusSelection sel = stage("select-torus", [&] { return select_torus(rc, selection_options(cfg)); });
  return stage("range", [&] { return RangeContext::build(form, sel, range_options(cfg)); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birkhoff-Lewis periodic orbits at finite Galerkin truncation"};
  app.require_subcommand(1);
  std::string config;
  std::vector<double> phi0;
  std::string orbit_file;

  auto add = [&](const char* name, const char* help) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sc->add_option("-o,--out-dir", out_dir, "Directory for output files");
    return sc;
  };
  auto* spectrum = add("spectrum", "Frequencies and (NR) scan");
  auto* normalform = add("normalform", "Seminormal form and coefficient audit");
  auto* scan = add("scan-denominators", "Bad-set intervals and measure audit");
  auto* select = add("select-torus", "Resonant torus and period");
  auto* solve = add("solve", "Range equation at fixed phi0");
  solve->add_option("--phi0", phi0, "Initial angles (n values)")->required();
  auto* kernel = add("kernel-solve", "Critical points of the reduced action");
  auto* verify = add("verify", "Verify an orbit file in the original system");
  verify->add_option("--orbit", orbit_file, "Orbit JSON written by solve")->required()->check(CLI::ExistingFile);
  auto* pipeline = add("pipeline", "All stages end to end");

  CLI11_PARSE(app, argc, argv);

  try {
    const Config cfg = load_config(config);
    if (spectrum->parsed()) {
      write_file("spectrum.csv", spectrum_csv(cfg));
      return 0;
    }
    const SeminormalForm form = stage("normalform", [&] { return build_normal_form(cfg); });
    if (normalform->parsed()) {
      write_file("normalform.json", normal_form_json(form));
      write_file("normalform_audit.csv", audit_csv(form));
      return 0;
    }
    const ResonanceContext rc = ResonanceContext::from(form, frequencies(cfg.model, cfg.trunc), cfg.trunc.eta);
    if (scan->parsed()) {
      write_file("bad_sets.csv", bad_sets_csv(rc, cfg));
      write_file("measure_audit.csv", measure_audit_csv(rc, cfg));
      return 0;
    }
    if (select->parsed()) {
      write_file("selection.json", selection_json(stage("select-torus", [&] { return select_torus(rc, selection_options(cfg)); })));
      return 0;
    }
    if (solve->parsed()) {
      const RangeContext ctx = context_for(cfg, form);
      if (static_cast<int>(phi0.size()) != ctx.n) throw Error(tags::kConfig, "--phi0 needs n values");
      const Eigen::VectorXd p0 = Eigen::Map<const Eigen::VectorXd>(phi0.data(), phi0.size());
      const ReducedActionPoint p = stage("range", [&] { return reduced_action(p0, ctx, contraction_config(cfg)); });
      write_file("orbit.json", orbit_json(p));
      write_file("iterations.csv", iteration_csv(p.range));
      std::cout << "contraction " << fmt(p.range.contraction) << ", iterations " << p.range.iterations << "\n";
      return 0;
    }
    if (kernel->parsed()) {
      const RangeContext ctx = context_for(cfg, form);
      const KernelResult res = stage("kernel-solve", [&] { return find_critical_points(ctx, kernel_options(cfg)); });
      write_file("critical_points.csv", critical_points_csv(res));
      std::cout << res.points.size() << " distinct orbits, " << res.clusters << " cluster(s)"
                << (res.fewer_than_n ? ", fewer than n" : "") << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const RangeContext ctx = context_for(cfg, form);
      const ReducedActionPoint p = orbit_from_json(read_file(orbit_file));
      const OriginalSystem sys(cfg.model, cfg.trunc);
      const CoordinateMap map(form);
      const OrbitReport rep = stage("verify", [&] { return verify_orbit(p, ctx, map, sys, verify_options(cfg)); });
      write_file("verify.json", report_json(rep) + "\n");
      return rep.all_pass() ? 0 : 1;
    }
    if (pipeline->parsed()) {
      const PipelineResult r = run_pipeline(cfg, &std::cout);
      write_file("pipeline.json", pipeline_json(r));
      write_file("critical_points.csv", critical_points_csv(r.kernel));
      std::cout << (r.pass ? "pipeline: all clauses pass" : "pipeline: some clauses FAIL") << "\n";
      return r.pass ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.tag() << "] " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error " << e.what() << "\n";
    return 2;
  }
  return 0;
}
