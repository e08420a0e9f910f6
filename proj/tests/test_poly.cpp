#include <cmath>
#include <random>

#include "blorbit/error.hpp"
#include "blorbit/poly.hpp"
#include "doctest.h"

using namespace blorbit;

namespace {

const cplx I(0.0, 1.0);

// Random real polynomial (coefficient of conj monomial = conjugate) of the
// given degree with `terms` random monomials.
SparsePoly random_real(int n, int M, int degree, int terms, std::mt19937_64& rng) {
  SparsePoly p(n, M);
  std::uniform_int_distribution<int> pick(0, 2 * (n + M) - 1);
  std::normal_distribution<double> g;
  for (int t = 0; t < terms; ++t) {
    std::vector<Var> vars;
    for (int i = 0; i < degree; ++i) vars.push_back(static_cast<Var>(pick(rng)));
    const Monomial m = Monomial::from_vars(vars);
    const cplx c(g(rng), g(rng));
    if (m.is_action()) {
      p.add(m, c.real());
    } else {
      p.add(m, c);
      p.add(m.conj(), std::conj(c));
    }
  }
  return p;
}

SparsePoly multiply(const SparsePoly& a, const SparsePoly& b) {
  SparsePoly out(a.n(), a.M());
  for (const auto& [ka, ca] : a.terms())
    for (const auto& [kb, cb] : b.terms()) {
      const Monomial ma(ka), mb(kb);
      if (ma.degree() + mb.degree() <= kMaxDegree) out.add(ma.times(mb), ca * cb);
    }
  return out;
}

double max_diff(const SparsePoly& a, const SparsePoly& b) { return (a - b).max_abs_coeff(); }

std::vector<cplx> random_point(int modes, double amp, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> z(modes);
  for (auto& v : z) v = amp * cplx(g(rng), g(rng));
  return real_point(z);
}

cplx evaluate(const SparsePoly& p, std::span<const cplx> x) { return CompiledPoly(p).value(x); }

}  // namespace

TEST_CASE("monomial packing") {
  const Monomial m = Monomial::from_vars({z_var(2), zbar_var(0), z_var(0)});
  CHECK(m.degree() == 3);
  CHECK(m.count(z_var(0)) == 1);
  CHECK(m.count(zbar_var(0)) == 1);
  CHECK(!m.is_action());
  CHECK(m.conj().count(zbar_var(2)) == 1);
  CHECK(m.tail_degree(2) == 1);
  CHECK(m.without(z_var(2)).is_action());
  const Monomial q = Monomial::from_vars({z_var(0), z_var(0)});
  CHECK(m < Monomial::from_vars({z_var(0), z_var(0), z_var(0), z_var(0)}));
  CHECK(q < m);
  const int exps[] = {1, 1, 0, 0, 1, 0};
  CHECK(Monomial::from_exponents(exps) == m);
}

TEST_CASE("brackets with H0") {
  const std::vector<double> w = {1.3, 2.1, 4.7, 9.2};
  const SparsePoly H0 = quadratic_hamiltonian(2, 2, w);
  SparsePoly act(2, 2);
  act.add(Monomial::from_vars({z_var(1), zbar_var(1)}), 1.0);
  CHECK(poisson_bracket(act, H0).empty());

  // x1^2 xbar2 zhat1 conj(zhat2)^2: denominator w.(j1 - j2) + Omega.(j3 - j4).
  const Monomial m = Monomial::from_vars({z_var(0), z_var(0), zbar_var(1), z_var(2), zbar_var(3), zbar_var(3)});
  SparsePoly p(2, 2);
  p.add(m, cplx(0.3, -0.2));
  const SparsePoly b = poisson_bracket(p, H0);
  const double den = 2 * w[0] - w[1] + w[2] - 2 * w[3];
  CHECK(b.size() == 1);
  CHECK(std::abs(b.coeff(m) - I * den * cplx(0.3, -0.2)) < 1e-14);
}

TEST_CASE("bracket algebra: antisymmetry, Jacobi, Leibniz") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const SparsePoly f = random_real(2, 2, 3, 6, rng);
    const SparsePoly g = random_real(2, 2, 3, 6, rng);
    const SparsePoly h = random_real(2, 2, 3, 6, rng);
    const SparsePoly fg = poisson_bracket(f, g);
    CHECK(max_diff(fg, poisson_bracket(g, f) * -1.0) <= 1e-15 * fg.max_abs_coeff());
    CHECK(poisson_bracket(f, f).empty());
    // Jacobi residual relative to the largest single bracket term.
    const SparsePoly j1 = poisson_bracket(f, poisson_bracket(g, h));
    const SparsePoly j2 = poisson_bracket(g, poisson_bracket(h, f));
    const SparsePoly j3 = poisson_bracket(h, poisson_bracket(f, g));
    const double scale = std::max({j1.max_abs_coeff(), j2.max_abs_coeff(), j3.max_abs_coeff()});
    SparsePoly jac = j1 + j2 + j3;
    CHECK(jac.max_abs_coeff() <= 1e-12 * scale);

    // Leibniz with degree-2 factors to stay within degree 6.
    const SparsePoly a = random_real(2, 2, 2, 4, rng);
    const SparsePoly c = random_real(2, 2, 2, 4, rng);
    const SparsePoly lhs = poisson_bracket(f, multiply(a, c));
    const SparsePoly rhs = multiply(poisson_bracket(f, a), c) + multiply(a, poisson_bracket(f, c));
    CHECK(max_diff(lhs, rhs) <= 1e-12 * lhs.max_abs_coeff());
  }
  CHECK_THROWS_AS(poisson_bracket(SparsePoly(2, 2), SparsePoly(2, 3)), Error);
}

TEST_CASE("vector field") {
  const std::vector<double> w = {1.3, 2.1, 4.7};
  const SparsePoly H0 = quadratic_hamiltonian(2, 1, w);
  std::vector<cplx> e1(3, 0.0);
  e1[0] = 1.0;
  const auto x = real_point(e1);
  auto X = vector_field(H0, x);
  CHECK(std::abs(X[z_var(0)] - I * w[0]) < 1e-15);
  CHECK(std::abs(X[zbar_var(0)] + I * w[0]) < 1e-15);

  SparsePoly constant(2, 1);
  constant.add(Monomial(), 3.0);
  X = vector_field(constant, x);
  for (auto v : X) CHECK(v == cplx(0.0));

  // Finite differences in each independent slot.
  std::mt19937_64 rng(3);
  const SparsePoly q = random_real(2, 1, 4, 10, rng);
  const auto p = random_point(3, 0.7, rng);
  X = vector_field(q, p);
  const double h = 1e-5;
  for (int j = 0; j < 3; ++j) {
    for (Var v : {z_var(j), zbar_var(j)}) {
      auto xp = p, xm = p;
      xp[v] += h;
      xm[v] -= h;
      const cplx d = (evaluate(q, xp) - evaluate(q, xm)) / (2 * h);
      // X_z = i dH/dzbar, X_zbar = -i dH/dz.
      const cplx expect = is_conj(v) ? I * d : -I * d;
      CHECK(std::abs(X[conj_var(v)] - expect) <= 1e-7 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("compiled evaluation matches term-wise evaluation") {
  std::mt19937_64 rng(5);
  SparsePoly q = random_real(2, 2, 3, 5, rng) + random_real(2, 2, 5, 5, rng);
  const auto p = random_point(4, 0.4, rng);
  cplx direct = 0.0;
  for (const auto& [k, c] : q.terms()) {
    const Monomial m(k);
    cplx t = c;
    for (int i = 0; i < m.degree(); ++i) t *= p[m.var(i)];
    direct += t;
  }
  CHECK(std::abs(CompiledPoly(q).value(p) - direct) < 1e-13);
  // Degree-scaled compilation: coefficients times s^(d-2).
  const double s = 0.3;
  cplx scaled = 0.0;
  for (const auto& [k, c] : q.terms()) {
    const Monomial m(k);
    cplx t = c * std::pow(s, m.degree() - 2);
    for (int i = 0; i < m.degree(); ++i) t *= p[m.var(i)];
    scaled += t;
  }
  CHECK(std::abs(CompiledPoly(q, s, 2).value(p) - scaled) < 1e-13);
}

TEST_CASE("lie transform") {
  std::mt19937_64 rng(9);
  const std::vector<double> w = {1.4142135623730951, 4.123105625617661, 9.055385138137417, 16.0312195418814};
  const SparsePoly H0 = quadratic_hamiltonian(2, 2, w);
  const SparsePoly P3 = random_real(2, 2, 3, 6, rng);
  const SparsePoly h = H0 + P3 + random_real(2, 2, 4, 6, rng);
  const SparsePoly zero(2, 2);
  CHECK(max_diff(lie_transform(h, zero, 6), h) == 0.0);

  const SparsePoly chi = random_real(2, 2, 3, 6, rng);
  const SparsePoly t3 = lie_transform(H0 + P3, chi, 3);
  CHECK(max_diff(t3.degree_part(3), P3 + poisson_bracket(chi, H0)) < 1e-13);
  CHECK(max_diff(t3.degree_part(2), H0) == 0.0);

  const SparsePoly t6 = lie_transform(h, chi, 6);
  CHECK(t6.reality_defect() <= 1e-14 * t6.max_abs_coeff());

  // Composition with the numerically integrated time -1 flow of X_chi.
  const auto x = random_point(4, 0.01, rng);
  const auto y = hamiltonian_flow(CompiledPoly(chi), x, -1.0, 256);
  CHECK(std::abs(evaluate(t6, x) - evaluate(h, y)) <= 1e-8);

  SparsePoly quad(2, 2);
  quad.add(Monomial::from_vars({z_var(0), z_var(1)}), 1.0);
  CHECK_THROWS_AS(lie_transform(h, quad, 6), Error);
}

TEST_CASE("dump format") {
  SparsePoly p(1, 1);
  p.add(Monomial::from_vars({z_var(0), z_var(0), zbar_var(1)}), cplx(1.5, -0.25));
  p.add(Monomial::from_vars({z_var(0), zbar_var(0)}), 2.0);
  const auto lines = p.dump_lines();
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "1|1|0|0 2 0");
  CHECK(lines[1] == "2|0|0|1 1.5 -0.25");
  p.add(Monomial::from_vars({z_var(0), zbar_var(0)}), -2.0);
  CHECK(p.size() == 1);
}
