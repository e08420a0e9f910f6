#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "blorbit/error.hpp"
#include "blorbit/resonance.hpp"
#include "doctest.h"

using namespace blorbit;
using std::numbers::pi;

namespace {

struct Beam {
  FrequencyTable freqs;
  SeminormalForm form;
};

const Beam& beam() {
  static const Beam b = [] {
    ModelSpec s;
    s.m = 1.0;
    TruncationParams t;
    t.n = 2;
    t.M = 16;
    Beam out;
    out.freqs = frequencies(s, t);
    out.form = seminormalize(hamiltonian_polynomial(s, t), out.freqs);
    return out;
  }();
  return b;
}

ResonanceContext one_mode(double A, double omega, double Omega, double eta) {
  ResonanceContext c;
  c.A = Eigen::MatrixXd::Constant(1, 1, A);
  c.B = Eigen::MatrixXd::Zero(1, 1);
  c.omega = Eigen::VectorXd::Constant(1, omega);
  c.Omega = Eigen::VectorXd::Constant(1, Omega);
  c.eta = eta;
  return c;
}

bool inside(const std::vector<std::pair<double, double>>& u, double T) {
  auto it = std::upper_bound(u.begin(), u.end(), T, [](double v, const auto& iv) { return v < iv.first; });
  if (it == u.begin()) return false;
  --it;
  return T < it->second;
}

}  // namespace

TEST_CASE("k of T") {
  const std::vector<double> w1{1.0, 1.0};
  CHECK(k_of_T(w1, 2.0 * pi) == std::vector<long>{1, 1});
  const std::vector<double> w2{std::sqrt(2.0), std::sqrt(17.0)};
  CHECK(k_of_T(w2, 10.0) == std::vector<long>{2, 6});
  CHECK(k_of_T(w2, 1e-9) == std::vector<long>{0, 0});
  const std::vector<long> off{1, 0};
  CHECK(k_of_T(w2, 10.0, off) == std::vector<long>{3, 6});
}

TEST_CASE("I0 of T") {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
  const double T = 4.5 * pi;
  const double eta = 1.0 / std::sqrt(T);
  const Eigen::VectorXd a = I0_of_T(Eigen::MatrixXd::Constant(1, 1, 2.0), w, T, eta);
  CHECK(a(0) == doctest::Approx(-pi / 4).epsilon(1e-14));
  CHECK_FALSE(passes_floor(a, 0.05));
  const Eigen::VectorXd b = I0_of_T(Eigen::MatrixXd::Constant(1, 1, -2.0), w, T, eta);
  CHECK(b(0) == doctest::Approx(pi / 4).epsilon(1e-14));
  CHECK(passes_floor(b, 0.05));
  // Integer omega T / 2 pi: zero actions, rejected.
  const Eigen::VectorXd c = I0_of_T(Eigen::MatrixXd::Constant(1, 1, 2.0), w, 4.0 * pi, eta);
  CHECK(std::abs(c(0)) <= 1e-14);
  CHECK_FALSE(passes_floor(c, 0.05));
  try {
    I0_of_T(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Ones(2), T, eta);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kSingularA);
  }
}

TEST_CASE("breakpoints") {
  const double eta = 1.0 / std::sqrt(2.0 * pi);  // window [2 pi, 4 pi]
  const std::vector<double> w1{1.0};
  const auto b1 = breakpoints(w1, eta);
  REQUIRE(b1.size() == 1);
  CHECK(b1[0] == doctest::Approx(4.0 * pi));
  const std::vector<double> w2{1.0, 2.0};
  const auto b2 = breakpoints(w2, eta);
  REQUIRE(b2.size() == 2);
  CHECK(b2[0] == doctest::Approx(3.0 * pi));
  CHECK(b2[1] == doctest::Approx(4.0 * pi));

  // Counting oracle: crossings of each omega_i T / 2 pi over the window.
  const std::vector<double> w3{std::sqrt(2.0), std::sqrt(17.0), 3.7};
  for (double e : {0.2, 0.1, 0.05}) {
    std::size_t expect = 0;
    for (double wi : w3) {
      const double lo = wi / (e * e * 2.0 * pi), hi = 2.0 * wi / (e * e * 2.0 * pi);
      expect += static_cast<std::size_t>(std::floor(hi) - std::floor(lo));
    }
    const auto b = breakpoints(w3, e);
    CHECK(b.size() <= expect);
    CHECK(b.size() + 3 >= expect);
    CHECK(std::is_sorted(b.begin(), b.end()));
    const auto iv = constancy_intervals(w3, e);
    CHECK(iv.front().first == doctest::Approx(1.0 / (e * e)));
    CHECK(iv.back().second == doctest::Approx(2.0 / (e * e)));
    for (const auto& [lo, hi] : iv) {
      const double mid = 0.5 * (lo + hi);
      CHECK(k_of_T(w3, lo + 1e-9 * (hi - lo)) == k_of_T(w3, mid));
    }
  }
}

TEST_CASE("bad sets of an affine crossing") {
  const double tau = 1.5;
  auto ctx = one_mode(1.0, 0.77, 1.0, 0.1);
  const double delta = 0.1 * std::pow(2.0, tau);  // tail mode 2: delta / j^tau = 0.1
  const auto iv = constancy_intervals(std::vector<double>{0.77}, 0.1);
  int full = 0;
  for (const auto& I : iv) {
    for (const auto& b : bad_sets(I, ctx, 0, 1, delta, tau)) {
      CHECK(b.j == 2);
      CHECK(b.lo >= I.first);
      CHECK(b.hi <= I.second);
      if (b.lo > I.first && b.hi < I.second) {
        CHECK(b.hi - b.lo == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(0.5 * (b.lo + b.hi) == doctest::Approx(2.0 * pi * b.l).epsilon(1e-12));
        ++full;
      }
    }
    CHECK(bad_sets(I, ctx, 0, 1, 0.0, tau).empty());
  }
  CHECK(full >= 10);
}

TEST_CASE("degenerate slope is rejected") {
  auto ctx = one_mode(1.0, 1.0, 1.0, 0.1);
  ctx.B(0, 0) = 1.0;  // Omega_hat = Omega - B A^-1 omega = 0
  const auto iv = constancy_intervals(std::vector<double>{1.0}, 0.1);
  try {
    bad_sets(iv[0], ctx, 0, 1, 1e-2, 1.5);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kOmegaHatZero);
  }
}

TEST_CASE("bad sets match sign changes of the sampled margin") {
  const auto ctx = ResonanceContext::from(beam().form, beam().freqs, 0.1);
  const double delta = 1e-2, tau = 1.5;
  const auto iv = constancy_intervals(std::span<const double>(ctx.omega.data(), 2), ctx.eta);
  for (std::size_t c = 0; c < iv.size(); c += 7) {
    const auto I = iv[c];
    for (const auto& b : bad_sets(I, ctx, 0, ctx.M(), delta, tau)) {
      const int row = b.j - ctx.n() - 1;
      auto g = [&](double T) {
        return std::abs(omega_tilde_tail(ctx, T)(row) * T - 2.0 * pi * b.l) - delta / std::pow(b.j, tau);
      };
      const double mid = 0.5 * (b.lo + b.hi);
      CHECK(g(mid) < 0.0);
      const double eps = 1e-9 * (1.0 + b.hi - b.lo);
      if (b.lo - eps > I.first) CHECK(g(b.lo - eps) > 0.0);
      if (b.hi + eps < I.second) CHECK(g(b.hi + eps) > 0.0);
    }
  }
}

TEST_CASE("measure audit") {
  const auto ctx = ResonanceContext::from(beam().form, beam().freqs, 0.05);
  const std::vector<double> deltas{1e-4, 1e-3, 1e-2};
  const auto rows = measure_audit(ctx, deltas, 1.5);
  REQUIRE(rows.size() == 3);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) CHECK(rows[i].measure >= rows[i - 1].measure);
    lo = std::min(lo, rows[i].measure / rows[i].delta);
    hi = std::max(hi, rows[i].measure / rows[i].delta);
  }
  CHECK(hi / lo <= 4.0);
  const std::vector<double> zero{0.0};
  CHECK(measure_audit(ctx, zero, 1.5)[0].measure == 0.0);
  const std::vector<double> twice{2e-3};
  const double r = measure_audit(ctx, twice, 1.5)[0].measure / rows[1].measure;
  CHECK(r >= 1.0);
  CHECK(r <= 4.0);
  CHECK_THROWS_AS(measure_audit(ctx, deltas, 1.0), Error);
}

TEST_CASE("bad-set union agrees with pointwise sampling") {
  const auto ctx = ResonanceContext::from(beam().form, beam().freqs, 0.05);
  const double delta = 1e-2, tau = 1.5;
  const auto u = window_bad_union(ctx, delta, tau);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(ctx.T_min(), ctx.T_max());
  const int samples = 1000000;
  int agree = 0;
  for (int s = 0; s < samples; ++s) {
    const double T = U(rng);
    const Eigen::VectorXd Ot = omega_tilde_tail(ctx, T);
    bool bad = false;
    for (int j = 0; j < ctx.M() && !bad; ++j) {
      const double x = Ot(j) * T / (2.0 * pi);
      const double d = 2.0 * pi * std::abs(x - std::round(x));
      bad = d < delta / std::pow(ctx.tail_mode(j), tau);
    }
    agree += bad == inside(u, T);
  }
  CHECK(double(agree) / samples > 0.9999);
}

TEST_CASE("torus selection invariants") {
  for (double eta : {0.1, 0.05}) {
    const auto ctx = ResonanceContext::from(beam().form, beam().freqs, eta);
    SelectOptions o;
    const TorusSelection s = select_torus(ctx, o);
    CHECK(s.T >= ctx.T_min());
    CHECK(s.T <= ctx.T_max());
    double kmax = 0.0, err = 0.0;
    for (int i = 0; i < 2; ++i) {
      kmax = std::max(kmax, 2.0 * pi * std::abs(double(s.k[i])));
      err = std::max(err, std::abs(s.omega_tilde(i) * s.T - 2.0 * pi * s.k[i]));
    }
    CHECK(err <= 1e-10 * kmax);
    CHECK(passes_floor(s.I0, ctx.floor_fraction));
    // Exhaustive (H2) check at truncation scale.
    double margin = 1e300;
    for (int j = 0; j < ctx.M(); ++j) {
      const double x = s.Omega_tilde(j) * s.T;
      const long l0 = std::lround(x / (2.0 * pi));
      for (long l = l0 - 2; l <= l0 + 2; ++l) {
        margin = std::min(margin, std::pow(ctx.tail_mode(j), o.tau) * std::abs(x - 2.0 * pi * l));
      }
    }
    CHECK(margin >= o.delta);
    CHECK(margin == doctest::Approx(s.h2_margin).epsilon(1e-9));
    const Eigen::VectorXd oh = omega_hat(ctx);
    CHECK((s.Omega_hat - oh).norm() <= 1e-12 * oh.norm());
  }
}

TEST_CASE("selection toward a target inside a scaled window") {
  const auto ctx = ResonanceContext::from(beam().form, beam().freqs, 0.05);
  SelectOptions o;
  o.target_I0 = Eigen::Vector2d(10.0, 10.0);
  o.scaled_window = std::make_pair(1.4, 1.6);
  const TorusSelection s = select_torus(ctx, o);
  CHECK(s.T * 0.05 * 0.05 >= 1.4);
  CHECK(s.T * 0.05 * 0.05 <= 1.6);
  CHECK((s.I0 - *o.target_I0).norm() <= 1.0);
  CHECK(s.h2_margin >= o.delta);
}

TEST_CASE("selection rejects bad parameters") {
  const auto ctx = ResonanceContext::from(beam().form, beam().freqs, 0.05);
  SelectOptions o;
  o.tau = 1.0;
  CHECK_THROWS_AS(select_torus(ctx, o), Error);
  o.tau = 2.5;
  CHECK_THROWS_AS(select_torus(ctx, o), Error);
  SelectOptions big;
  big.delta = 50.0;
  try {
    select_torus(ctx, big);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.tag() == tags::kNoAdmissibleT);
  }
}

TEST_CASE("gcd") {
  const std::vector<long> a{4, 6}, b{101, 293}, c{0, 5};
  CHECK(gcd_of(a) == 2);
  CHECK(gcd_of(b) == 1);
  CHECK(gcd_of(c) == 5);
}
