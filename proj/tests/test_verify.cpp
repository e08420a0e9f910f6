#include <cmath>
#include <numbers>
#include <random>

#include "blorbit/error.hpp"
#include "blorbit/verify.hpp"
#include "doctest.h"

using namespace blorbit;
using std::numbers::pi;

namespace {

TruncationParams trunc(int n, int M) {
  TruncationParams t;
  t.n = n;
  t.M = M;
  t.eta = 0.1;
  return t;
}

ModelSpec beam(double m = 1.0) {
  ModelSpec s;
  s.m = m;
  return s;
}

ModelSpec nls() {
  ModelSpec s;
  s.kind = ModelKind::nls;
  s.coeffs = {1.0};
  for (int j = 1; j <= 8; ++j) s.rho.push_back(1.0 / j);
  return s;
}

std::vector<cplx> random_state(int modes, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> z(modes);
  for (int j = 0; j < modes; ++j) z[j] = amp * cplx(g(rng), g(rng)) / double(j + 1);
  return z;
}

std::vector<cplx> interleave(const std::vector<cplx>& z) {
  std::vector<cplx> x(2 * z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    x[2 * j] = z[j];
    x[2 * j + 1] = std::conj(z[j]);
  }
  return x;
}

double dist(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
  return std::sqrt(s);
}

double norm(const std::vector<cplx>& a) { return dist(a, std::vector<cplx>(a.size())); }

struct Beam6 {
  SeminormalForm form;
  FrequencyTable freqs;
};

const Beam6& beam6() {
  static const Beam6 b = [] {
    Beam6 out;
    out.freqs = frequencies(beam(), trunc(2, 6));
    out.form = seminormalize(hamiltonian_polynomial(beam(), trunc(2, 6)), out.freqs);
    return out;
  }();
  return b;
}

}  // namespace

TEST_CASE("original system agrees with the polynomial Hamiltonian") {
  for (const ModelSpec& s : {beam(), beam(2.5), nls()}) {
    const TruncationParams t = trunc(2, 6);
    const SparsePoly H = hamiltonian_polynomial(s, t);
    const OriginalSystem sys(s, t);
    CHECK(sys.modes() == 8);
    const auto z = random_state(8, 0.3, 11);
    const auto x = interleave(z);
    const double e = CompiledPoly(H).value(x).real();
    CHECK(sys.energy(z) == doctest::Approx(e).epsilon(1e-13));
    std::vector<cplx> f(8);
    sys.field(z, f);
    const auto X = vector_field(H, x);
    double worst = 0.0, scale = 0.0;
    for (int j = 0; j < 8; ++j) {
      worst = std::max(worst, std::abs(f[j] - X[2 * j]));
      scale = std::max(scale, std::abs(X[2 * j]));
    }
    CHECK(worst <= 1e-12 * scale);
  }
}

TEST_CASE("small-amplitude flow advances phases by omega T") {
  // At |z| ~ 1e-7 the quartic nonlinearity is below round-off.
  const OriginalSystem sys(beam(), trunc(2, 4));
  const auto z0 = random_state(6, 1e-7, 3);
  const double T = 17.3;
  const FixedRun run = integrate_fixed(sys, z0, T, 40);
  for (int j = 0; j < 6; ++j)
    CHECK(std::abs(run.endpoint[j] - z0[j] * std::polar(1.0, sys.freqs()[j] * T)) <= 1e-13 * norm(z0));
}

TEST_CASE("Lawson RK4 is fourth order and conserves energy") {
  const OriginalSystem sys(beam(), trunc(2, 6));
  const auto z0 = random_state(8, 0.4, 5);
  const double T = 20.0;
  const auto ref = integrate_fixed(sys, z0, T, 64000).endpoint;
  const double e1 = dist(integrate_fixed(sys, z0, T, 2000).endpoint, ref);
  const double e2 = dist(integrate_fixed(sys, z0, T, 4000).endpoint, ref);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));

  IntegrationOptions o;
  const IntegrationResult r = integrate_orbit(sys, z0, T, o);
  CHECK(r.drift <= o.drift_tol);
  CHECK(r.halving_change <= o.halving_tol);
  CHECK(r.steps >= default_steps(sys, T));

  std::vector<double> times{0.0, 5.0, T};
  int calls = 0;
  const FixedRun run = integrate_fixed(sys, z0, T, 400, times, [&](double, const std::vector<cplx>&) { ++calls; });
  CHECK(calls == 400);
  REQUIRE(run.samples.size() == 3);
  CHECK(dist(run.samples[0], z0) == 0.0);
  CHECK(dist(run.samples[2], run.endpoint) <= 1e-12 * norm(z0));
}

TEST_CASE("coordinate map: round trip, identity, quadratic displacement") {
  const auto& b = beam6();
  const CoordinateMap map(b.form);
  const auto y = random_state(8, 0.05, 9);
  CHECK(dist(map.pushforward(map.pullback(y)), y) <= 1e-10 * norm(y));

  SeminormalForm flat = b.form;
  for (auto& g : flat.generators) g = SparsePoly(g.n(), g.M());
  const CoordinateMap id(flat);
  CHECK(dist(id.pullback(y), y) == 0.0);

  // The beam has no cubic terms, so the displacement is cubic in |y|.
  std::vector<double> ratio;
  for (double a : {0.01, 0.03, 0.1}) {
    const auto ya = random_state(8, a, 21);
    const double r = norm(ya);
    ratio.push_back(dist(map.pullback(ya), ya) / (r * r * r));
  }
  CHECK(ratio[0] > 0.0);
  CHECK(ratio[1] == doctest::Approx(ratio[0]).epsilon(0.05));
  CHECK(ratio[2] == doctest::Approx(ratio[0]).epsilon(0.2));
}

TEST_CASE("coordinate map is symplectic") {
  const auto& b = beam6();
  const CoordinateMap map(b.form);
  const auto y = random_state(8, 0.1, 13);
  const int d = 16;
  // Real coordinates (Re z_j, Im z_j); the form is sum dq ^ dp.
  Eigen::MatrixXd D(d, d);
  const double h = 1e-6;
  for (int c = 0; c < d; ++c) {
    auto yp = y, ym = y;
    const cplx e = (c % 2 == 0) ? cplx(h, 0.0) : cplx(0.0, h);
    yp[c / 2] += e;
    ym[c / 2] -= e;
    const auto zp = map.pullback(yp), zm = map.pullback(ym);
    for (int r = 0; r < 8; ++r) {
      D(2 * r, c) = (zp[r] - zm[r]).real() / (2.0 * h);
      D(2 * r + 1, c) = (zp[r] - zm[r]).imag() / (2.0 * h);
    }
  }
  Eigen::MatrixXd Om = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < 8; ++j) {
    Om(2 * j, 2 * j + 1) = 1.0;
    Om(2 * j + 1, 2 * j) = -1.0;
  }
  CHECK((D.transpose() * Om * D - Om).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((D - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("clauses: commensurate periods and the time window") {
  OrbitReport r;
  r.eta = 0.1;
  r.T = 150.0;
  r.n = 2;
  r.k = {20, 58};
  r.gcd = 2;
  r.closure = 1e-9;
  r.sup_norm = 0.7;
  r.tail_sup = 0.002;
  r.torus_distance = 0.02;
  r.sub_closures.assign(63, 0.5);
  r.sub_closures[0] = 2e-9;  // m = 2
  VerifyOptions o;
  evaluate_clauses(r, o);
  auto clause = [&](const std::string& id) {
    for (const auto& c : r.clauses)
      if (c.id == id) return c;
    FAIL("missing clause " << id);
    return ClauseResult{};
  };
  CHECK(clause("i").pass);
  CHECK(clause("iv").pass);
  CHECK(clause("v").pass);
  CHECK(clause("v").detail.find("T/2") != std::string::npos);

  r.gcd = 1;
  r.k = {21, 58};
  evaluate_clauses(r, o);
  CHECK_FALSE(clause("v").pass);
  CHECK_FALSE(r.all_pass());

  r.sub_closures[0] = 0.5;
  r.T = 250.0;
  evaluate_clauses(r, o);
  CHECK(clause("v").pass);
  CHECK_FALSE(clause("iv").pass);

  // A companion at eta/2 with the same constants.
  r.T = 150.0;
  OrbitReport c = r;
  c.eta = 0.05;
  c.sup_norm = 0.35;
  c.tail_sup = 0.0005;
  c.torus_distance = 0.005;
  evaluate_clauses(r, o, &c);
  CHECK(clause("ii").pass);
  CHECK(clause("iii").pass);
  CHECK(clause("vi").pass);
  c.tail_sup = 0.0002;
  evaluate_clauses(r, o, &c);
  CHECK_FALSE(clause("iii").pass);
}

TEST_CASE("verify closes a solved orbit in the original system") {
  const auto& b = beam6();
  const ResonanceContext rc = ResonanceContext::from(b.form, b.freqs, 0.1);
  const RangeContext ctx = RangeContext::build(b.form, select_torus(rc, SelectOptions{}), RangeOptions{});
  Eigen::VectorXd phi0(2);
  phi0 << 0.0, 0.3;
  const ReducedActionPoint p = reduced_action(phi0, ctx, ContractionConfig{});
  const OriginalSystem sys(beam(), trunc(2, 6));
  const CoordinateMap map(b.form);
  VerifyOptions o;
  o.m_max = 8;
  const OrbitReport r = verify_orbit(p, ctx, map, sys, o);
  CHECK(r.closure_unrefined < 1e-1);
  CHECK(r.closure <= o.closure_tol);
  CHECK(r.drift <= o.drift_tol);
  CHECK(r.C_amplitude() == doctest::Approx(std::sqrt(ctx.I0(0) + 4.0 * ctx.I0(1))).epsilon(0.2));
  CHECK(r.sub_closures.size() == 7);
  const std::string js = report_json(r);
  CHECK(js.find("\"clauses\"") != std::string::npos);
  CHECK(js.find("\"closure\"") != std::string::npos);
}
