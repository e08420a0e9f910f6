#include "blorbit/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "blorbit/error.hpp"
#include "json.hpp"

namespace blorbit {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(tags::kConfig, std::string("missing config field '") + key + "'");
  return j.at(key);
}

double get_number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw Error(tags::kConfig, std::string("config field '") + key + "' must be a number");
  return v.get<double>();
}

int get_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) throw Error(tags::kConfig, std::string("config field '") + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> get_numbers(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_array()) throw Error(tags::kConfig, std::string("config field '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(tags::kConfig, std::string("config field '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

template <class T>
void optional_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(tags::kConfig, std::string("config field '") + key + "' has the wrong type");
  }
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(tags::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(tags::kConfig, "config must be a JSON object");
  Config c;
  const json& kind = require(j, "kind");
  if (kind == "beam") {
    c.model.kind = ModelKind::beam;
  } else if (kind == "nls") {
    c.model.kind = ModelKind::nls;
  } else {
    throw Error(tags::kConfig, "config field 'kind' must be \"beam\" or \"nls\"");
  }
  c.model.m = get_number(j, "m");
  c.model.coeffs = {get_number(j, "a")};
  for (double f : get_numbers(j, "fk")) c.model.coeffs.push_back(f);
  c.trunc.n = get_int(j, "n");
  c.trunc.M = get_int(j, "M");
  c.trunc.L_max = get_int(j, "Lmax");
  c.trunc.s = get_number(j, "s");
  c.trunc.a_weight = get_number(j, "aw");
  c.trunc.eta = get_number(j, "eta");
  c.delta = get_number(j, "delta");
  c.tau = get_number(j, "tau");
  const json& seed = require(j, "seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw Error(tags::kConfig, "config field 'seed' must be an integer");
  }
  c.seed = seed.get<std::uint64_t>();

  const int modes = c.trunc.n + c.trunc.M;
  if (c.model.kind == ModelKind::nls) {
    optional_field(j, "d", c.model.smoothing_d);
    if (j.contains("rho")) {
      c.model.rho = get_numbers(j, "rho");
    } else if (j.contains("rho_power")) {
      const double p = get_number(j, "rho_power");
      for (int q = 1; q <= modes; ++q) c.model.rho.push_back(std::pow(double(q), -p));
    } else {
      throw Error(tags::kConfig, "missing config field 'rho' (or 'rho_power') for kind nls");
    }
    c.resonant_variant = true;
  }
  optional_field(j, "resonant_variant", c.resonant_variant);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) throw Error(tags::kConfig, "config field 'tolerances' must be an object");
    optional_field(t, "newton_tol", c.tol.newton_tol);
    optional_field(t, "contraction_tol", c.tol.contraction_tol);
    optional_field(t, "max_iters", c.tol.max_iters);
    optional_field(t, "closure", c.tol.closure);
    optional_field(t, "drift", c.tol.drift);
    optional_field(t, "halving", c.tol.halving);
    optional_field(t, "same_orbit", c.tol.same_orbit);
    optional_field(t, "cluster_tol", c.tol.cluster_tol);
  }
  if (j.contains("selection")) {
    const json& s = j.at("selection");
    if (!s.is_object()) throw Error(tags::kConfig, "config field 'selection' must be an object");
    if (s.contains("target_I0")) {
      const auto v = get_numbers(s, "target_I0");
      c.target_I0 = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
    if (s.contains("scaled_window")) {
      const auto v = get_numbers(s, "scaled_window");
      if (v.size() != 2) throw Error(tags::kConfig, "config field 'scaled_window' must have two entries");
      c.scaled_window = std::make_pair(v[0], v[1]);
    }
    optional_field(s, "coprime", c.coprime);
  }
  optional_field(j, "grid_per_dim", c.grid_per_dim);
  optional_field(j, "verify_limit", c.verify_limit);
  optional_field(j, "companion", c.companion);

  c.model.validate();
  c.trunc.validate();
  if (c.target_I0 && c.target_I0->size() != c.trunc.n) {
    throw Error(tags::kConfig, "config field 'target_I0' must have n entries");
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(tags::kConfig, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

SelectOptions selection_options(const Config& cfg) {
  SelectOptions o;
  o.delta = cfg.delta;
  o.tau = cfg.tau;
  o.d = smoothing_order(cfg.model);
  o.target_I0 = cfg.target_I0;
  o.scaled_window = cfg.scaled_window;
  o.require_coprime = cfg.coprime;
  return o;
}

RangeOptions range_options(const Config& cfg) {
  RangeOptions o;
  o.L_min = cfg.trunc.L_max;
  o.weights.s = cfg.trunc.s;
  o.weights.a = cfg.trunc.a_weight;
  o.weights.first_tail_mode = cfg.trunc.n + 1;
  return o;
}

ContractionConfig contraction_config(const Config& cfg) {
  ContractionConfig c;
  c.tol = cfg.tol.contraction_tol;
  c.max_iters = cfg.tol.max_iters;
  return c;
}

KernelOptions kernel_options(const Config& cfg) {
  KernelOptions k;
  k.grid_per_dim = cfg.grid_per_dim;
  k.newton_tol = cfg.tol.newton_tol;
  k.same_orbit = cfg.tol.same_orbit;
  k.cluster_tol = cfg.tol.cluster_tol;
  k.range = contraction_config(cfg);
  return k;
}

VerifyOptions verify_options(const Config& cfg) {
  VerifyOptions v;
  v.closure_tol = cfg.tol.closure;
  v.drift_tol = cfg.tol.drift;
  v.halving_tol = cfg.tol.halving;
  v.m_max = cfg.trunc.L_max;
  v.s = cfg.trunc.s;
  v.a = cfg.trunc.a_weight;
  return v;
}

SeminormalForm build_normal_form(const Config& cfg) {
  const FrequencyTable freqs = frequencies(cfg.model, cfg.trunc);
  NormalFormOptions o;
  o.resonant_variant = cfg.resonant_variant;
  return seminormalize(hamiltonian_polynomial(cfg.model, cfg.trunc), freqs, o);
}

std::string spectrum_csv(const Config& cfg) {
  const FrequencyTable f = frequencies(cfg.model, cfg.trunc);
  const auto res = check_nonresonance(f, f.modes(), 5);
  std::ostringstream os;
  os << "# (NR) violations: " << res.size() << "\n";
  os << "mode,frequency,role\n";
  for (int j = 1; j <= f.modes(); ++j) os << j << "," << fmt(f.at(j)) << "," << (j <= f.n() ? "tangential" : "tail") << "\n";
  os << "\nk,l,value\n";
  for (const auto& r : res) {
    std::string k, l;
    for (std::size_t i = 0; i < r.k.size(); ++i) k += (i ? " " : "") + std::to_string(r.k[i]);
    for (std::size_t i = 0; i < r.l.size(); ++i) {
      l += (i ? " " : "") + std::to_string(r.l[i].first) + ":" + std::to_string(r.l[i].second);
    }
    os << k << "," << l << "," << fmt(r.value) << "\n";
  }
  return os.str();
}

std::string normal_form_json(const SeminormalForm& form) {
  json j;
  j["n"] = form.n;
  j["M"] = form.M;
  j["A"] = mat_json(form.A);
  j["B"] = mat_json(form.B);
  j["freqs"] = form.freqs;
  j["resonant_variant"] = form.resonant_variant;
  j["Gbar"] = form.Gbar.dump_lines();
  j["Ghat"] = form.Ghat.dump_lines();
  j["K"] = form.K.dump_lines();
  j["resonant_extra"] = form.resonant_extra.dump_lines();
  json chi = json::array();
  for (const auto& g : form.generators) chi.push_back(g.dump_lines());
  j["chi"] = chi;
  return j.dump(1) + "\n";
}

std::string audit_csv(const SeminormalForm& form) {
  std::ostringstream os;
  os << "order,terms,offending,max_offending,max_coeff,ratio\n";
  for (const auto& r : audit_normal_form(form)) {
    os << r.order << "," << r.terms << "," << r.offending << "," << fmt(r.max_offending) << "," << fmt(r.max_coeff)
       << "," << fmt(r.ratio()) << "\n";
  }
  return os.str();
}

std::string bad_sets_csv(const ResonanceContext& ctx, const Config& cfg) {
  std::ostringstream os;
  os << "T_lo,T_hi,j,l\n";
  const std::span<const double> w(ctx.omega.data(), ctx.omega.size());
  for (const auto& iv : constancy_intervals(w, ctx.eta)) {
    for (const auto& b : bad_sets(iv, ctx, 0, ctx.M(), cfg.delta, cfg.tau)) {
      os << fmt(b.lo) << "," << fmt(b.hi) << "," << b.j << "," << b.l << "\n";
    }
  }
  return os.str();
}

std::string measure_audit_csv(const ResonanceContext& ctx, const Config& cfg) {
  const std::vector<double> deltas{cfg.delta, cfg.delta / 10, cfg.delta / 100};
  std::ostringstream os;
  os << "delta,measure,intervals,measure_over_delta\n";
  for (const auto& r : measure_audit(ctx, deltas, cfg.tau)) {
    os << fmt(r.delta) << "," << fmt(r.measure) << "," << r.intervals << "," << fmt(r.measure / r.delta) << "\n";
  }
  return os.str();
}

std::string selection_json(const TorusSelection& s) {
  json j;
  j["eta"] = s.eta;
  j["T"] = s.T;
  j["k"] = s.k;
  j["I0"] = vec_json(s.I0);
  j["omega_tilde"] = vec_json(s.omega_tilde);
  j["Omega_tilde"] = vec_json(s.Omega_tilde);
  j["Omega_hat"] = vec_json(s.Omega_hat);
  j["delta"] = s.delta;
  j["tau"] = s.tau;
  j["h2_margin"] = s.h2_margin;
  j["k_offset"] = s.k_offset;
  j["interval"] = {s.interval.first, s.interval.second};
  j["gap"] = {s.gap.first, s.gap.second};
  return j.dump(1) + "\n";
}

std::string iteration_csv(const RangeSolution& sol) {
  std::ostringstream os;
  os << "iter,residual,contraction\n";
  for (std::size_t i = 0; i < sol.residuals.size(); ++i) {
    os << i + 1 << "," << fmt(sol.residuals[i]) << "," << fmt(i < sol.factors.size() ? sol.factors[i] : 0.0) << "\n";
  }
  return os.str();
}

std::string critical_points_csv(const KernelResult& res) {
  std::ostringstream os;
  const int n = res.points.empty() ? 0 : static_cast<int>(res.points[0].phi0.size());
  for (int i = 0; i < n; ++i) os << "phi0_" << i + 1 << ",";
  os << "S_value,grad_norm,cluster\n";
  for (const auto& p : res.points) {
    for (int i = 0; i < n; ++i) os << fmt(p.phi0(i)) << ",";
    os << fmt(p.S_value) << "," << fmt(p.grad.norm()) << "," << p.cluster << "\n";
  }
  return os.str();
}

std::string orbit_json(const ReducedActionPoint& p) {
  json j;
  j["phi0"] = vec_json(p.phi0);
  j["S_value"] = p.S_value;
  j["grad"] = vec_json(p.grad);
  j["loop"] = json::parse(loop_to_json(p.range.zeta));
  return j.dump(1) + "\n";
}

ReducedActionPoint orbit_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(tags::kConfig, std::string("orbit file is not valid JSON: ") + e.what());
  }
  ReducedActionPoint p;
  const auto phi = get_numbers(j, "phi0");
  p.phi0 = Eigen::Map<const Eigen::VectorXd>(phi.data(), phi.size());
  p.range.zeta = loop_from_json(require(j, "loop").dump());
  if (j.contains("S_value")) p.S_value = j["S_value"].get<double>();
  if (j.contains("grad")) {
    const auto g = get_numbers(j, "grad");
    p.grad = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
  }
  return p;
}

PipelineResult run_pipeline(const Config& cfg, std::ostream* log) {
  auto say = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };
  PipelineResult r;
  const FrequencyTable freqs = frequencies(cfg.model, cfg.trunc);
  r.form = stage("normalform", [&] { return build_normal_form(cfg); });
  say("normalform: A = " + fmt(r.form.A(0, 0)) + " ...");

  const ResonanceContext rctx = ResonanceContext::from(r.form, freqs, cfg.trunc.eta);
  r.selection = stage("select-torus", [&] { return select_torus(rctx, selection_options(cfg)); });
  say("select-torus: T = " + fmt(r.selection.T) + ", gcd(k) = " + std::to_string(gcd_of(r.selection.k)));

  const RangeContext ctx = stage("range", [&] { return RangeContext::build(r.form, r.selection, range_options(cfg)); });
  r.kernel = stage("kernel-solve", [&] { return find_critical_points(ctx, kernel_options(cfg)); });
  say("kernel-solve: " + std::to_string(r.kernel.points.size()) + " distinct critical orbits in " +
      std::to_string(r.kernel.clusters) + " action cluster(s), " + std::to_string(r.kernel.diverged) + " seeds diverged");

  const VerifyOptions vo = verify_options(cfg);
  const OriginalSystem sys(cfg.model, cfg.trunc);
  const CoordinateMap map(r.form);
  if (cfg.companion) {
    // Same scaled period and actions at eta/2.
    Config half = cfg;
    half.trunc.eta = cfg.trunc.eta / 2;
    const double e2T = cfg.trunc.eta * cfg.trunc.eta * r.selection.T;
    half.scaled_window = std::make_pair(e2T - 0.025, e2T + 0.025);
    half.target_I0 = r.selection.I0;
    const ResonanceContext hctx = ResonanceContext::from(r.form, freqs, half.trunc.eta);
    r.companion_selection = stage("companion select-torus", [&] { return select_torus(hctx, selection_options(half)); });
    const RangeContext hc =
        stage("companion range", [&] { return RangeContext::build(r.form, *r.companion_selection, range_options(half)); });
    const Eigen::VectorXd phi0 = r.kernel.points.front().phi0;
    const ReducedActionPoint hp = stage("companion range", [&] { return reduced_action(phi0, hc, contraction_config(half)); });
    r.companion = stage("companion verify", [&] {
      return measure_orbit(map.pullback(normalized_initial_point(hp, hc)), hc, map, sys, verify_options(half));
    });
    say("companion at eta/2: T = " + fmt(hc.T));
  }

  const std::size_t limit = cfg.verify_limit > 0 ? std::min<std::size_t>(cfg.verify_limit, r.kernel.points.size())
                                                 : r.kernel.points.size();
  bool all = true;
  for (std::size_t q = 0; q < limit; ++q) {
    OrbitReport rep = stage("verify", [&] { return verify_orbit(r.kernel.points[q], ctx, map, sys, vo); });
    evaluate_clauses(rep, vo, r.companion ? &*r.companion : nullptr);
    say("verify orbit " + std::to_string(q) + ": closure " + fmt(rep.closure) + (rep.all_pass() ? " pass" : " FAIL"));
    all = all && rep.all_pass();
    r.reports.push_back(std::move(rep));
  }
  r.distinct_orbits = static_cast<int>(r.kernel.points.size());
  r.pass = all && !r.reports.empty() && r.distinct_orbits >= cfg.trunc.n;
  return r;
}

std::string pipeline_json(const PipelineResult& r) {
  json j;
  j["selection"] = json::parse(selection_json(r.selection));
  if (r.companion_selection) j["companion_selection"] = json::parse(selection_json(*r.companion_selection));
  j["distinct_orbits"] = r.distinct_orbits;
  j["clusters"] = r.kernel.clusters;
  j["seeds"] = r.kernel.seeds;
  j["diverged"] = r.kernel.diverged;
  json reps = json::array();
  for (const auto& rep : r.reports) reps.push_back(json::parse(report_json(rep)));
  j["reports"] = reps;
  if (r.companion) j["companion"] = json::parse(report_json(*r.companion));
  j["pass"] = r.pass;
  return j.dump(1) + "\n";
}

}  // namespace blorbit
