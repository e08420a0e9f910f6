#include <cmath>
#include <numbers>
#include <random>

#include "blorbit/error.hpp"
#include "blorbit/range.hpp"
#include "doctest.h"

using namespace blorbit;
using std::numbers::pi;

namespace {

const cplx I(0.0, 1.0);

LinearSolveData small_data(double T, double eta) {
  Eigen::MatrixXd A(2, 2);
  A << 0.3, 0.5, 0.5, 0.2;
  Eigen::VectorXd Ot(3);
  Ot << 7.31, 12.77, 19.05;
  return LinearSolveData::make(A, Ot, T, eta, 1e-9);
}

Loop random_rhs(double T, int n, int M, int L, std::uint64_t seed) {
  Loop r = random_loop(T, n, M, L, seed, 0.0);
  r.psi.col(L).setZero();
  return r;
}

double max_diff(const Loop& a, const Loop& b) {
  double e = 0.0;
  e = std::max(e, (a.psi - b.psi).cwiseAbs().maxCoeff());
  e = std::max(e, (a.J - b.J).cwiseAbs().maxCoeff());
  if (a.M) {
    e = std::max(e, (a.z - b.z).cwiseAbs().maxCoeff());
    e = std::max(e, (a.zbar - b.zbar).cwiseAbs().maxCoeff());
  }
  return e;
}

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

RangeContext beam_context(double eta, bool with_perturbation = true) {
  const auto& b = beam_case();
  const auto rctx = ResonanceContext::from(b.form, b.freqs, eta);
  const TorusSelection sel = select_torus(rctx, SelectOptions{});
  SeminormalForm form = b.form;
  if (!with_perturbation) {
    form.transformed = quadratic_hamiltonian(form.n, form.M, form.freqs) + form.Gbar;
    form.Ghat = SparsePoly(form.n, form.M);
    form.K = SparsePoly(form.n, form.M);
  }
  return RangeContext::build(form, sel, RangeOptions{});
}

}  // namespace

TEST_CASE("invert_L basics") {
  const auto d = small_data(40.0, 0.1);
  const Loop zero(40.0, 2, 3, 5);
  CHECK(invert_L(zero, d).max_abs() == 0.0);

  // One tail coefficient with Omega_tilde T = pi.
  Eigen::VectorXd Ot = Eigen::VectorXd::Constant(1, pi / 40.0);
  const auto d1 = LinearSolveData::make(Eigen::MatrixXd::Identity(1, 1), Ot, 40.0, 0.1, 0.0);
  Loop r(40.0, 1, 1, 3);
  r.z_at(0, 0) = 1.0;
  const Loop w = invert_L(r, d1);
  CHECK(std::abs(w.z(0, 3) - I * 40.0 / pi) <= 1e-14 * 40.0 / pi);

  Loop bad = random_rhs(40.0, 2, 3, 5, 1);
  bad.psi_at(0, 0) = 1.0;
  CHECK_THROWS_AS(invert_L(bad, d), Error);
}

TEST_CASE("invert_L is a right inverse") {
  const auto d = small_data(160.0, 0.08);
  for (int s = 0; s < 20; ++s) {
    const Loop r = random_rhs(160.0, 2, 3, 30, 100 + s);
    const Loop back = apply_L(invert_L(r, d), d);
    CHECK(max_diff(back, r) <= 1e-12 * r.max_abs());
  }
}

TEST_CASE("invert_L matches a dense solve") {
  const int n = 2, M = 3, L = 8;
  const auto d = small_data(100.0, 0.1);
  const Eigen::MatrixXcd mat = dense_L(d, n, M, L);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Loop r = random_rhs(100.0, n, M, L, 1000 + s);
    const Eigen::VectorXcd x = lu.solve(pack_range(r, true));
    const Loop ref = unpack_range(x, 100.0, n, M, L, true);
    worst = std::max(worst, max_diff(ref, invert_L(r, d)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("small denominators and singular A are reported") {
  Eigen::VectorXd Ot = Eigen::VectorXd::Constant(1, 2.0 * pi * 3.0 / 50.0 + 1e-6);
  const auto d = LinearSolveData::make(Eigen::MatrixXd::Identity(1, 1), Ot, 50.0, 0.1, 1e-3);
  Loop r(50.0, 1, 1, 4);
  try {
    invert_L(r, d);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kSmallDenominator);
    CHECK(std::string(e.what()).find("l=3") != std::string::npos);
  }
  try {
    LinearSolveData::make(Eigen::MatrixXd::Zero(2, 2), Ot, 50.0, 0.1, 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kSingularA);
  }
}

TEST_CASE("operator norm probe saturates at the worst denominator") {
  const auto d = small_data(100.0, 0.1);
  NormWeights w{1.0, 0.0, 3};
  const double tau = 1.5;
  const auto wd = worst_denominator(d, 8);
  Loop r(100.0, 2, 3, 8);
  r.z_at(wd.row, wd.l) = 1.0;
  NormWeights wt = w;
  wt.s += tau;
  const double ratio = norm_Tas(invert_L(r, d), w) / norm_Tas(r, wt);
  const double j = w.first_tail_mode + wd.row;
  CHECK(ratio == doctest::Approx(100.0 / (std::pow(j, tau) * wd.value)).epsilon(1e-12));
  const double probe = operator_norm_probe(d, 2, 3, 8, w, tau, 20, 3);
  CHECK(probe >= ratio);
  CHECK(std::isfinite(probe));
}

TEST_CASE("zero perturbation gives the unperturbed torus") {
  const RangeContext ctx = beam_context(0.1, false);
  const Eigen::VectorXd phi0 = Eigen::Vector2d(0.3, -1.1);
  const NResult nr = eval_N(Loop(ctx.T, ctx.n, ctx.M, ctx.L), phi0, ctx);
  CHECK(nr.rhs.max_abs() == 0.0);
  const RangeSolution sol = solve_range(phi0, ctx, ContractionConfig{});
  CHECK(sol.converged);
  CHECK(sol.zeta.max_abs() == 0.0);
}

TEST_CASE("nonlinear part at the torus") {
  const RangeContext ctx = beam_context(0.1);
  const Eigen::VectorXd phi0 = Eigen::Vector2d(0.7, 2.0);
  const NResult nr = eval_N(Loop(ctx.T, ctx.n, ctx.M, ctx.L), phi0, ctx);
  CHECK(nr.rhs.psi.col(ctx.L).cwiseAbs().maxCoeff() == 0.0);
  CHECK(nr.rhs.max_abs() > 0.0);
  // Phase derivative of a real Hamiltonian: real time series.
  CHECK(nr.rhs.reality_defect() <= 1e-12 * nr.rhs.max_abs());

  Loop bad(ctx.T, ctx.n, ctx.M, ctx.L);
  bad.J_at(0, 0) = -2.0 * ctx.I0(0);
  try {
    eval_N(bad, phi0, ctx);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kChart);
  }
}

TEST_CASE("range fixed point") {
  const RangeContext ctx = beam_context(0.1);
  const Eigen::VectorXd phi0 = Eigen::Vector2d(0.2, 0.9);
  ContractionConfig cfg;
  cfg.tol = 1e-12;
  const RangeSolution sol = solve_range(phi0, ctx, cfg);
  CHECK(sol.converged);
  CHECK(sol.contraction > 0.0);
  CHECK(sol.contraction < 1.0);
  const double nz = norm_Tas(sol.zeta, ctx.weights);
  CHECK(nz > 0.0);
  CHECK(nz <= sol.ball_radius);

  // The three range equations, component by component.
  const Loop phi = invert_L(eval_N(sol.zeta, phi0, ctx).rhs, ctx.lin);
  const Loop r = phi - sol.zeta;
  auto part = [](Loop x, int which) {
    if (which != 0) x.psi.setZero();
    if (which != 1) x.J.setZero();
    if (which != 2) {
      x.z.setZero();
      x.zbar.setZero();
    }
    return x;
  };
  for (int c = 0; c < 3; ++c) {
    CHECK(norm_Tas(part(r, c), ctx.weights) <= 10.0 * cfg.tol * nz);
  }
  const Loop lhs = apply_L(sol.zeta, ctx.lin);
  const Loop rhs = eval_N(sol.zeta, phi0, ctx).rhs;
  CHECK(norm_Tas(lhs - rhs, ctx.weights) <= 10.0 * cfg.tol * norm_Tas(rhs, ctx.weights));

  // A different starting point in the ball reaches the same fixed point.
  Loop start = sol.zeta * 0.5;
  const RangeSolution again = solve_range(phi0, ctx, cfg, &start);
  CHECK(norm_Tas(again.zeta - sol.zeta, ctx.weights) <= 10.0 * cfg.tol * nz);
}
