#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blorbit/error.hpp"
#include "blorbit/kernel.hpp"
#include "blorbit/model.hpp"
#include "blorbit/normalform.hpp"
#include "blorbit/range.hpp"
#include "blorbit/resonance.hpp"
#include "blorbit/verify.hpp"

namespace blorbit {

struct Tolerances {
  double newton_tol = 1e-10;
  double contraction_tol = 1e-12;
  int max_iters = 200;
  double closure = 1e-6;
  double drift = 1e-8;
  double halving = 1e-8;
  double same_orbit = 1e-6;
  double cluster_tol = 1e-9;
};

struct Config {
  ModelSpec model;
  TruncationParams trunc;
  double delta = 1e-2;
  double tau = 1.5;
  std::uint64_t seed = 1;
  Tolerances tol;
  bool resonant_variant = false;
  std::optional<Eigen::VectorXd> target_I0;
  std::optional<std::pair<double, double>> scaled_window;
  bool coprime = true;
  int grid_per_dim = 16;
  /// Orbits passed to verification, lowest action first (0: all).
  int verify_limit = 0;
  /// Repeat the selection and range solve at eta/2 for the stability clauses.
  bool companion = true;
};

/// Parse and validate a JSON config. Required: kind, m, a, fk, n, M, Lmax,
/// s, aw, eta, delta, tau, seed (nls also rho or rho_power). Missing or
/// mistyped fields raise a config error naming the field.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

SelectOptions selection_options(const Config& cfg);
RangeOptions range_options(const Config& cfg);
ContractionConfig contraction_config(const Config& cfg);
KernelOptions kernel_options(const Config& cfg);
VerifyOptions verify_options(const Config& cfg);

SeminormalForm build_normal_form(const Config& cfg);

/// Round-trip-exact decimal for CSV output.
std::string fmt(double v);

std::string spectrum_csv(const Config& cfg);
std::string normal_form_json(const SeminormalForm& form);
std::string audit_csv(const SeminormalForm& form);
std::string bad_sets_csv(const ResonanceContext& ctx, const Config& cfg);
std::string measure_audit_csv(const ResonanceContext& ctx, const Config& cfg);
std::string selection_json(const TorusSelection& sel);
std::string iteration_csv(const RangeSolution& sol);
std::string critical_points_csv(const KernelResult& res);

/// Orbit file: phi0 plus the range-component snapshot.
std::string orbit_json(const ReducedActionPoint& p);
ReducedActionPoint orbit_from_json(const std::string& text);

struct PipelineResult {
  SeminormalForm form;
  TorusSelection selection;
  KernelResult kernel;
  std::vector<OrbitReport> reports;
  std::optional<OrbitReport> companion;
  std::optional<TorusSelection> companion_selection;
  int distinct_orbits = 0;
  bool pass = false;
};

/// Every stage end to end. Stage failures are rethrown with the stage name
/// prepended and the original tag kept.
PipelineResult run_pipeline(const Config& cfg, std::ostream* log = nullptr);

std::string pipeline_json(const PipelineResult& r);

/// Run `body` with stage-name context on errors.
template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    std::string msg = e.what();
    if (msg.rfind(e.tag() + ": ", 0) == 0) msg.erase(0, e.tag().size() + 2);
    throw Error(e.tag(), std::string("stage ") + name + ": " + msg);
  }
}

}  // namespace blorbit
