#include <cmath>
#include <numbers>
#include <numeric>

#include "blorbit/error.hpp"
#include "blorbit/kernel.hpp"
#include "doctest.h"

using namespace blorbit;
using std::numbers::pi;

namespace {

struct BeamCase {
  SeminormalForm form;
  FrequencyTable freqs;
};

const BeamCase& beam_case() {
  static const BeamCase b = [] {
    ModelSpec s;
    s.m = 1.0;
    TruncationParams t;
    t.n = 2;
    t.M = 6;
    BeamCase out;
    out.freqs = frequencies(s, t);
    out.form = seminormalize(hamiltonian_polynomial(s, t), out.freqs);
    return out;
  }();
  return b;
}

RangeContext context(double eta, bool with_perturbation = true) {
  const auto& b = beam_case();
  const TorusSelection sel = select_torus(ResonanceContext::from(b.form, b.freqs, eta), SelectOptions{});
  SeminormalForm form = b.form;
  if (!with_perturbation) {
    form.transformed = quadratic_hamiltonian(form.n, form.M, form.freqs) + form.Gbar;
    form.Ghat = SparsePoly(form.n, form.M);
    form.K = SparsePoly(form.n, form.M);
  }
  return RangeContext::build(form, sel, RangeOptions{});
}

const RangeContext& ctx01() {
  static const RangeContext c = context(0.1);
  return c;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("unperturbed torus: closed-form action, zero gradient") {
  const RangeContext c = context(0.1, false);
  const auto p = reduced_action(vec2(0.3, 1.1), c, ContractionConfig{});
  CHECK(p.range.zeta.max_abs() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(p.grad.norm() <= 1e-14);
  const double closed = c.T * (c.I0.dot(c.omega_tilde) - c.H_I0);
  CHECK(p.S_value == doctest::Approx(closed).epsilon(1e-13));
  CHECK(std::abs(p.action.offset) <= 1e-12 * std::abs(closed));
}

TEST_CASE("reduced action is invariant under time shifts and deck moves") {
  const auto& c = ctx01();
  const Eigen::VectorXd phi0 = vec2(0.4, 2.0);
  const auto p = reduced_action(phi0, c, ContractionConfig{});
  const double sigma = 0.37 * c.T;
  const auto q = reduced_action(phi0 + sigma * c.omega_tilde, c, ContractionConfig{}, &p.range.zeta);
  CHECK(q.S_value == doctest::Approx(p.S_value).epsilon(1e-9));
  const auto d = reduced_action(phi0 + vec2(2.0 * pi, -4.0 * pi), c, ContractionConfig{}, &p.range.zeta);
  CHECK(std::abs(d.S_value - p.S_value) <= 1e-10 * std::abs(p.S_value));

  // Same orbit up to a shift: the Cartesian loops match after alignment.
  NormWeights w = c.weights;
  w.first_tail_mode = 1;
  const Loop X = cartesian_loop(p, c), Y = cartesian_loop(q, c);
  const ShiftMatch m = orbit_distance(X, Y, w);
  CHECK(m.distance <= 1e-8 * norm_Tas(X, w));
  CHECK(norm_Tas(X - Y, w) > 1e-3 * norm_Tas(X, w));
}

TEST_CASE("orbit_distance recovers a shift") {
  const Loop X = random_loop(50.0, 0, 4, 12, 3);
  NormWeights w;
  w.first_tail_mode = 1;
  // X(t) = Y(t + sigma) with Y = X(. + 11.3) gives sigma = -11.3 mod T.
  const ShiftMatch m = orbit_distance(X, X.shifted(11.3), w);
  CHECK(m.distance <= 1e-10 * norm_Tas(X, w));
  CHECK(m.shift == doctest::Approx(50.0 - 11.3).epsilon(1e-12));
  CHECK_THROWS_AS(orbit_distance(X, X.resized(10), w), Error);
}

TEST_CASE("action quadrature converges in N_t") {
  const auto& c = ctx01();
  const auto p = reduced_action(vec2(1.0, 0.2), c, ContractionConfig{});
  const double a = action_functional(p.range.zeta, p.phi0, c, c.N_t).offset;
  const double b = action_functional(p.range.zeta, p.phi0, c, 2 * c.N_t).offset;
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(p.S_value));
}

TEST_CASE("action derivative matches finite differences") {
  const auto& c = ctx01();
  const auto p = reduced_action(vec2(0.7, 0.9), c, ContractionConfig{});
  const Loop& x = p.range.zeta;
  Loop dx = random_loop(c.T, c.n, c.M, x.L, 17, 1.0) * (1e-2 * x.max_abs());
  dx.enforce_reality();
  const Eigen::VectorXd dphi = vec2(0.3, -0.2);
  const double d = action_derivative(x, dx, p.phi0, dphi, c);
  const double h = 1e-3;
  auto S = [&](double t) { return action_functional(x + dx * t, p.phi0 + t * dphi, c).total(); };
  const double fd = (S(h) - S(-h)) / (2.0 * h);
  CHECK(std::abs(d) > 0.0);
  CHECK(fd == doctest::Approx(d).epsilon(1e-6));
}

TEST_CASE("full residual is the projected mean at a range solution") {
  const auto& c = ctx01();
  const auto p = reduced_action(vec2(0.1, 0.5), c, ContractionConfig{});
  const double r = full_residual(p, c);
  // Everything but <R_phi> is solved to contraction tolerance.
  Loop m(c.T, c.n, c.M, p.range.zeta.L);
  for (int i = 0; i < c.n; ++i) m.psi_at(i, 0) = p.grad(i);
  CHECK(std::abs(r - norm_Tas(m, c.weights)) <= 1e-11);
  const RangeContext flat = context(0.1, false);
  CHECK(full_residual(reduced_action(vec2(0.1, 0.5), flat, ContractionConfig{}), flat) <= 1e-14);
}

TEST_CASE("unimodular completion") {
  for (const std::vector<long>& k : std::vector<std::vector<long>>{{143, 415}, {3, 0}, {-6, 4}, {12, 18, 30}, {5}}) {
    const Eigen::MatrixXi U = unimodular_completion(k);
    long g = 0;
    for (long v : k) g = std::gcd(g, std::abs(v));
    CHECK(std::abs(std::lround(U.cast<double>().determinant())) == 1);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(U(i, 0) == k[i] / g);
  }
  CHECK_THROWS_AS(unimodular_completion({0, 0}), Error);
  const Eigen::MatrixXi U = unimodular_completion({2, 5});
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.25);
  // Slice points differ from each other by non-shift directions only.
  const Eigen::VectorXd p = slice_point(U, th);
  CHECK(p.isApprox(2.0 * pi * 0.25 * U.col(1).cast<double>()));
}

TEST_CASE("kernel search returns critical points sorted by action") {
  const auto& c = ctx01();
  KernelOptions o;
  o.grid_per_dim = 4;
  const KernelResult res = find_critical_points(c, o);
  CHECK(res.seeds == 4);
  REQUIRE(!res.points.empty());
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    CHECK(res.points[i].grad.norm() <= o.newton_tol);
    if (i) CHECK(res.points[i - 1].S_value <= res.points[i].S_value);
  }
  CHECK(res.clusters >= 1);
  CHECK(int(res.points.size()) + res.diverged <= res.seeds);
  o.grid_per_dim = 0;
  CHECK_THROWS_AS(find_critical_points(c, o), Error);
}
