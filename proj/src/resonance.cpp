#include "blorbit/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "blorbit/error.hpp"

namespace blorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::FullPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& A) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300) {
    throw Error(tags::kSingularA, "the twist matrix A is singular");
  }
  return lu;
}

Eigen::VectorXd to_eigen(std::span<const long> k) {
  Eigen::VectorXd v(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) v[i] = static_cast<double>(k[i]);
  return v;
}

}  // namespace

ResonanceContext ResonanceContext::from(const SeminormalForm& form, const FrequencyTable& freqs, double eta) {
  ResonanceContext ctx;
  ctx.A = form.A;
  ctx.B = form.B;
  ctx.omega = Eigen::Map<const Eigen::VectorXd>(freqs.omega.data(), freqs.omega.size());
  ctx.Omega = Eigen::Map<const Eigen::VectorXd>(freqs.Omega.data(), freqs.Omega.size());
  ctx.eta = eta;
  return ctx;
}

std::vector<long> k_of_T(std::span<const double> omega, double T, std::span<const long> offset) {
  std::vector<long> k(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    k[i] = static_cast<long>(std::floor(omega[i] * T / kTwoPi)) + (i < offset.size() ? offset[i] : 0);
  }
  return k;
}

Eigen::VectorXd I0_of_T(const Eigen::MatrixXd& A, const Eigen::VectorXd& omega, double T, double eta,
                        std::span<const long> offset) {
  const auto lu = checked_lu(A);
  const auto k = k_of_T(std::span<const double>(omega.data(), omega.size()), T, offset);
  const Eigen::VectorXd frac = to_eigen(k) - omega * (T / kTwoPi);
  return lu.solve(frac) * (kTwoPi / (eta * eta * T));
}

std::vector<long> k_of_T(const ResonanceContext& ctx, double T) {
  return k_of_T(std::span<const double>(ctx.omega.data(), ctx.omega.size()), T, ctx.k_offset);
}

Eigen::VectorXd I0_of_T(const ResonanceContext& ctx, double T) {
  return I0_of_T(ctx.A, ctx.omega, T, ctx.eta, ctx.k_offset);
}

bool passes_floor(const Eigen::VectorXd& I0, double fraction) {
  const double top = I0.maxCoeff();
  if (!(top > 0.0)) return false;
  return (I0.array() > 0.0).all() && (I0.array() >= fraction * top).all();
}

std::vector<double> breakpoints(std::span<const double> omega, double eta) {
  const double lo = 1.0 / (eta * eta), hi = 2.0 / (eta * eta);
  std::vector<double> out;
  for (double w : omega) {
    const long first = static_cast<long>(std::floor(w * lo / kTwoPi)) + 1;
    const long last = static_cast<long>(std::floor(w * hi / kTwoPi + 1e-12));
    for (long m = first; m <= last; ++m) out.push_back(std::min(hi, kTwoPi * m / w));
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double t : out) {
    if (uniq.empty() || t - uniq.back() > 1e-12 * hi) uniq.push_back(t);
  }
  return uniq;
}

std::vector<std::pair<double, double>> constancy_intervals(std::span<const double> omega, double eta) {
  const double lo = 1.0 / (eta * eta), hi = 2.0 / (eta * eta);
  std::vector<double> pts{lo};
  for (double t : breakpoints(omega, eta)) pts.push_back(t);
  if (pts.back() < hi) pts.push_back(hi);
  std::vector<std::pair<double, double>> iv;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] > pts[i]) iv.emplace_back(pts[i], pts[i + 1]);
  }
  return iv;
}

Eigen::VectorXd omega_hat(const ResonanceContext& ctx) {
  const auto lu = checked_lu(ctx.A);
  return ctx.Omega - ctx.B * lu.solve(ctx.omega);
}

Eigen::VectorXd omega_tilde_tail(const ResonanceContext& ctx, double T) {
  const Eigen::VectorXd I0 = I0_of_T(ctx, T);
  return ctx.Omega + ctx.eta * ctx.eta * (ctx.B * I0);
}

std::vector<BadSet> bad_sets(std::pair<double, double> interval, const ResonanceContext& ctx, int j_begin,
                             int j_end, double delta, double tau) {
  std::vector<BadSet> out;
  const auto [a, b] = interval;
  if (!(b > a) || delta <= 0.0) return out;
  const auto lu = checked_lu(ctx.A);
  const auto k = k_of_T(ctx, 0.5 * (a + b));
  const Eigen::VectorXd c = kTwoPi * (ctx.B * lu.solve(to_eigen(k)));
  const Eigen::VectorXd slope = ctx.Omega - ctx.B * lu.solve(ctx.omega);
  for (int j = j_begin; j < j_end; ++j) {
    const int mode = ctx.tail_mode(j);
    if (std::abs(slope[j]) < 1e-12 * std::max(1.0, std::abs(ctx.Omega[j]))) {
      throw Error(tags::kOmegaHatZero, "Omega_hat_" + std::to_string(mode) + " vanishes");
    }
    const double eps = delta / std::pow(mode, tau);
    const double fa = slope[j] * a + c[j], fb = slope[j] * b + c[j];
    const double fmin = std::min(fa, fb), fmax = std::max(fa, fb);
    const long l0 = static_cast<long>(std::ceil((fmin - eps) / kTwoPi));
    const long l1 = static_cast<long>(std::floor((fmax + eps) / kTwoPi));
    for (long l = l0; l <= l1; ++l) {
      double t0 = (kTwoPi * l - c[j] - eps) / slope[j];
      double t1 = (kTwoPi * l - c[j] + eps) / slope[j];
      if (t0 > t1) std::swap(t0, t1);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t1 > t0) out.push_back({mode, l, t0, t1});
    }
  }
  return out;
}

std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& p : iv) {
    if (!out.empty() && p.first <= out.back().second) {
      out.back().second = std::max(out.back().second, p.second);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<std::pair<double, double>> window_bad_union(const ResonanceContext& ctx, double delta, double tau) {
  std::vector<std::pair<double, double>> all;
  const std::span<const double> w(ctx.omega.data(), ctx.omega.size());
  for (const auto& iv : constancy_intervals(w, ctx.eta)) {
    for (const auto& b : bad_sets(iv, ctx, 0, ctx.M(), delta, tau)) all.emplace_back(b.lo, b.hi);
  }
  return merge_intervals(std::move(all));
}

std::vector<MeasureRow> measure_audit(const ResonanceContext& ctx, std::span<const double> deltas, double tau) {
  if (!(tau > 1.0)) throw Error(tags::kConfig, "measure audit needs tau > 1");
  std::vector<MeasureRow> rows;
  for (double delta : deltas) {
    const auto u = window_bad_union(ctx, delta, tau);
    MeasureRow row{delta, 0.0, u.size()};
    for (const auto& [lo, hi] : u) row.measure += hi - lo;
    rows.push_back(row);
  }
  return rows;
}

double h2_margin(const ResonanceContext& ctx, double T, double tau) {
  const Eigen::VectorXd Ot = omega_tilde_tail(ctx, T);
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ctx.M(); ++j) {
    const double x = Ot[j] * T;
    const double dist = std::abs(x - kTwoPi * std::round(x / kTwoPi));
    worst = std::min(worst, std::pow(ctx.tail_mode(j), tau) * dist);
  }
  return worst;
}

TorusSelection make_selection(const ResonanceContext& ctx, double T, double delta, double tau) {
  TorusSelection s;
  s.eta = ctx.eta;
  s.T = T;
  s.delta = delta;
  s.tau = tau;
  s.k = k_of_T(ctx, T);
  s.k_offset = ctx.k_offset;
  s.I0 = I0_of_T(ctx, T);
  const double e2 = ctx.eta * ctx.eta;
  s.omega_tilde = ctx.omega + e2 * (ctx.A * s.I0);
  s.Omega_tilde = ctx.Omega + e2 * (ctx.B * s.I0);
  s.Omega_hat = omega_hat(ctx);
  s.h2_margin = h2_margin(ctx, T, tau);
  return s;
}

namespace {

// Sub-interval of [a, b] where the action floor holds with k fixed. With
// u = 1/T, I0(u) = (p u - q) / eta^2, so every floor constraint is affine in u.
std::optional<std::pair<double, double>> floor_subinterval(const ResonanceContext& ctx, double a, double b) {
  const auto lu = checked_lu(ctx.A);
  const auto k = k_of_T(ctx, 0.5 * (a + b));
  const Eigen::VectorXd p = kTwoPi * lu.solve(to_eigen(k));
  const Eigen::VectorXd q = lu.solve(ctx.omega);
  double ulo = 1.0 / b, uhi = 1.0 / a;
  auto impose = [&](double alpha, double beta) {  // alpha u - beta >= 0
    if (alpha > 0.0) {
      ulo = std::max(ulo, beta / alpha);
    } else if (alpha < 0.0) {
      uhi = std::min(uhi, beta / alpha);
    } else if (beta > 0.0) {
      uhi = -1.0;
    }
  };
  const double f = ctx.floor_fraction;
  const int n = ctx.n();
  for (int j = 0; j < n; ++j) {
    impose(p[j], q[j]);
    for (int i = 0; i < n; ++i) {
      if (i != j) impose(p[j] - f * p[i], q[j] - f * q[i]);
    }
  }
  if (!(uhi > ulo)) return std::nullopt;
  return std::make_pair(1.0 / uhi, 1.0 / ulo);
}

}  // namespace

TorusSelection select_torus(const ResonanceContext& ctx, const SelectOptions& opts) {
  if (!(opts.tau > 1.0 && opts.tau < opts.d)) {
    throw Error(tags::kConfig, "tau must lie in (1, d)");
  }
  checked_lu(ctx.A);
  const Eigen::VectorXd oh = omega_hat(ctx);
  for (int j = 0; j < ctx.M(); ++j) {
    if (std::abs(oh[j]) < 1e-12 * std::max(1.0, std::abs(ctx.Omega[j]))) {
      throw Error(tags::kOmegaHatZero, "Omega_hat_" + std::to_string(ctx.tail_mode(j)) + " vanishes");
    }
  }

  const std::span<const double> w(ctx.omega.data(), ctx.omega.size());
  struct Candidate {
    double T;
    double score;
    std::pair<double, double> interval, gap;
    std::vector<long> offset;
  };
  std::optional<Candidate> best;
  std::vector<std::pair<ResonanceContext, std::pair<double, double>>> feasible;
  const double e2 = ctx.eta * ctx.eta;
  const auto lu = checked_lu(ctx.A);

  // Corners of the integer box around omega T / 2 pi: the given offset, or
  // all of {0,1}^n when none is fixed.
  std::vector<std::vector<long>> corners;
  if (!ctx.k_offset.empty()) {
    corners.push_back(ctx.k_offset);
  } else {
    for (int mask = 0; mask < (1 << ctx.n()); ++mask) {
      std::vector<long> c(ctx.n());
      for (int i = 0; i < ctx.n(); ++i) c[i] = (mask >> i) & 1;
      corners.push_back(c);
    }
  }

  for (const auto& corner : corners) {
    ResonanceContext cctx = ctx;
    cctx.k_offset = corner;
    for (const auto& iv : constancy_intervals(w, ctx.eta)) {
      auto sub = floor_subinterval(cctx, iv.first, iv.second);
      if (!sub) continue;
      if (opts.require_coprime && gcd_of(k_of_T(cctx, 0.5 * (sub->first + sub->second))) != 1) continue;
      if (opts.scaled_window) {
        sub->first = std::max(sub->first, opts.scaled_window->first / e2);
        sub->second = std::min(sub->second, opts.scaled_window->second / e2);
        if (!(sub->second > sub->first)) continue;
      }
      feasible.emplace_back(cctx, *sub);
      std::vector<std::pair<double, double>> bad;
      for (const auto& b : bad_sets(*sub, cctx, 0, ctx.M(), opts.delta, opts.tau)) bad.emplace_back(b.lo, b.hi);
      bad = merge_intervals(std::move(bad));
      double cur = sub->first;
      std::vector<std::pair<double, double>> gaps;
      for (const auto& [lo, hi] : bad) {
        if (lo > cur) gaps.emplace_back(cur, lo);
        cur = std::max(cur, hi);
      }
      if (sub->second > cur) gaps.emplace_back(cur, sub->second);

      for (const auto& g : gaps) {
        const double width = g.second - g.first;
        if (!(width > 0.0)) continue;
        Candidate c{0.5 * (g.first + g.second), width, iv, g, corner};
        if (opts.target_I0) {
          // I0(u) = (p u - q') / eta^2 with u = 1/T: the distance to the
          // target is quadratic in u.
          const auto k = k_of_T(cctx, c.T);
          const Eigen::VectorXd p = kTwoPi * lu.solve(to_eigen(k));
          const Eigen::VectorXd q = lu.solve(ctx.omega) + e2 * (*opts.target_I0);
          const double t0 = g.first + opts.gap_trim * width, t1 = g.second - opts.gap_trim * width;
          const double u = std::clamp(p.dot(q) / p.squaredNorm(), 1.0 / t1, 1.0 / t0);
          c.T = 1.0 / u;
          c.score = -((p * u - q) / e2).norm();
        }
        if (!best || c.score > best->score) best = c;
      }
    }
  }

  if (feasible.empty()) {
    throw Error(tags::kNoAdmissibleT, "positivity floor unreachable: no T in the window gives I0_j >= " +
                                          std::to_string(ctx.floor_fraction) + " max I0");
  }
  if (!best) {
    double achievable = 0.0;
    for (const auto& [cctx, iv] : feasible) {
      const auto [a, b] = iv;
      for (int i = 1; i < 2000; ++i) {
        achievable = std::max(achievable, h2_margin(cctx, a + (b - a) * i / 2000.0, opts.tau));
      }
    }
    std::ostringstream os;
    os << "no T satisfies (H2) with delta=" << opts.delta << "; largest achievable delta ~ " << achievable;
    throw Error(tags::kNoAdmissibleT, os.str());
  }

  ResonanceContext chosen = ctx;
  chosen.k_offset = best->offset;
  TorusSelection s = make_selection(chosen, best->T, opts.delta, opts.tau);
  s.interval = best->interval;
  s.gap = best->gap;
  return s;
}

long gcd_of(std::span<const long> k) {
  long g = 0;
  for (long v : k) g = std::gcd(g, std::abs(v));
  return g;
}

}  // namespace blorbit
