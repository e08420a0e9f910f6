#include "blorbit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "blorbit/error.hpp"
#include "json.hpp"

namespace blorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI{0.0, 1.0};

std::vector<double> mode_weights(int modes, double s, double a) {
  std::vector<double> w(modes);
  for (int j = 0; j < modes; ++j) w[j] = std::pow(j + 1.0, s) * std::exp((j + 1.0) * a);
  return w;
}

double weighted_norm(std::span<const cplx> z, const std::vector<double>& w, int from = 0) {
  double acc = 0.0;
  for (std::size_t j = from; j < z.size(); ++j) acc += std::norm(z[j]) * w[j] * w[j];
  return std::sqrt(acc);
}

double weighted_distance(std::span<const cplx> a, std::span<const cplx> b, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::norm(a[j] - b[j]) * w[j] * w[j];
  return std::sqrt(acc);
}

}  // namespace

OriginalSystem::OriginalSystem(const ModelSpec& spec, const TruncationParams& trunc, int quad_points)
    : kind_(spec.kind), modes_(trunc.modes()), freqs_(frequencies(spec, trunc).all()), coeffs_(spec.coeffs) {
  if (kind_ == ModelKind::nls && static_cast<int>(spec.rho.size()) < modes_) {
    throw Error(tags::kConfig, "rho sequence shorter than n+M");
  }
  // Highest x-frequency of an integrand is (polynomial degree) * modes; the
  // midpoint rule on [0, pi] with nx nodes integrates even trigonometric
  // polynomials exactly below frequency 2 nx.
  const int ncoef = static_cast<int>(coeffs_.size());
  const int degree = kind_ == ModelKind::beam ? 4 + 2 * (ncoef - 1) : 2 * (ncoef + 1);
  nx_ = quad_points > 0 ? quad_points : degree * modes_ / 2 + 4;
  dx_ = std::numbers::pi / nx_;
  S_.resize(nx_, modes_);
  for (int i = 0; i < nx_; ++i)
    for (int j = 0; j < modes_; ++j) S_(i, j) = std::sin((j + 1.0) * (i + 0.5) * dx_);
  weight_.resize(modes_);
  for (int j = 0; j < modes_; ++j) {
    weight_[j] = kind_ == ModelKind::beam ? 1.0 / std::sqrt(std::numbers::pi * freqs_[j])
                                          : spec.rho[j] * std::sqrt(2.0 / std::numbers::pi);
  }
}

void OriginalSystem::nonlinear_field(std::span<const cplx> z, std::span<cplx> out) const {
  if (kind_ == ModelKind::beam) {
    // u = sum alpha_j (z_j + conj z_j) sin(jx); g(u) = sum f u^r / r.
    Eigen::VectorXd q(modes_);
    for (int j = 0; j < modes_; ++j) q(j) = 2.0 * weight_[j] * z[j].real();
    const Eigen::VectorXd u = S_ * q;
    Eigen::VectorXd gp(nx_);
    for (int i = 0; i < nx_; ++i) {
      const double u2 = u(i) * u(i);
      double p = u2 * u(i), acc = 0.0;
      for (double c : coeffs_) {
        acc += c * p;
        p *= u2;
      }
      gp(i) = acc;
    }
    const Eigen::VectorXd proj = S_.transpose() * gp;
    for (int j = 0; j < modes_; ++j) out[j] = kI * (weight_[j] * dx_ * proj(j));
  } else {
    // v = sum w_j z_j sin(jx); H_nl = int sum p_r |v|^{2r}.
    Eigen::VectorXd zr(modes_), zi(modes_);
    for (int j = 0; j < modes_; ++j) {
      zr(j) = weight_[j] * z[j].real();
      zi(j) = weight_[j] * z[j].imag();
    }
    const Eigen::VectorXd vr = S_ * zr, vi = S_ * zi;
    Eigen::VectorXd fr(nx_), fi(nx_);
    for (int i = 0; i < nx_; ++i) {
      const double s = vr(i) * vr(i) + vi(i) * vi(i);
      double p = s, acc = 0.0;
      int r = 2;
      for (double c : coeffs_) {
        acc += r * c * p;
        p *= s;
        ++r;
      }
      fr(i) = acc * vr(i);
      fi(i) = acc * vi(i);
    }
    const Eigen::VectorXd pr = S_.transpose() * fr, pi = S_.transpose() * fi;
    for (int j = 0; j < modes_; ++j) out[j] = kI * (weight_[j] * dx_ * cplx(pr(j), pi(j)));
  }
}

void OriginalSystem::field(std::span<const cplx> z, std::span<cplx> out) const {
  nonlinear_field(z, out);
  for (int j = 0; j < modes_; ++j) out[j] += kI * freqs_[j] * z[j];
}

double OriginalSystem::energy(std::span<const cplx> z) const {
  double h = 0.0;
  for (int j = 0; j < modes_; ++j) h += freqs_[j] * std::norm(z[j]);
  if (kind_ == ModelKind::beam) {
    Eigen::VectorXd q(modes_);
    for (int j = 0; j < modes_; ++j) q(j) = 2.0 * weight_[j] * z[j].real();
    const Eigen::VectorXd u = S_ * q;
    for (int i = 0; i < nx_; ++i) {
      const double u2 = u(i) * u(i);
      double p = u2 * u2;
      int r = 4;
      for (double c : coeffs_) {
        h += dx_ * c * p / r;
        p *= u2;
        r += 2;
      }
    }
  } else {
    Eigen::VectorXd zr(modes_), zi(modes_);
    for (int j = 0; j < modes_; ++j) {
      zr(j) = weight_[j] * z[j].real();
      zi(j) = weight_[j] * z[j].imag();
    }
    const Eigen::VectorXd vr = S_ * zr, vi = S_ * zi;
    for (int i = 0; i < nx_; ++i) {
      const double s = vr(i) * vr(i) + vi(i) * vi(i);
      double p = s * s;
      for (double c : coeffs_) {
        h += dx_ * c * p;
        p *= s;
      }
    }
  }
  return h;
}

namespace {

// Lawson RK4 with precomputed exponentials e^{i omega h/2}, e^{i omega h}.
struct LawsonStepper {
  const OriginalSystem& sys;
  std::vector<cplx> e_half, e_full, k1, k2, k3, k4, tmp;

  LawsonStepper(const OriginalSystem& s, double h) : sys(s) {
    const int m = s.modes();
    e_half.resize(m);
    e_full.resize(m);
    for (int j = 0; j < m; ++j) {
      e_half[j] = std::polar(1.0, s.freqs()[j] * h / 2);
      e_full[j] = e_half[j] * e_half[j];
    }
    k1.resize(m);
    k2.resize(m);
    k3.resize(m);
    k4.resize(m);
    tmp.resize(m);
  }

  void step(std::vector<cplx>& z, double h) {
    const std::size_t m = z.size();
    sys.nonlinear_field(z, k1);
    for (std::size_t j = 0; j < m; ++j) tmp[j] = e_half[j] * (z[j] + 0.5 * h * k1[j]);
    sys.nonlinear_field(tmp, k2);
    for (std::size_t j = 0; j < m; ++j) tmp[j] = e_half[j] * z[j] + 0.5 * h * k2[j];
    sys.nonlinear_field(tmp, k3);
    for (std::size_t j = 0; j < m; ++j) tmp[j] = e_full[j] * z[j] + h * e_half[j] * k3[j];
    sys.nonlinear_field(tmp, k4);
    for (std::size_t j = 0; j < m; ++j) {
      z[j] = e_full[j] * z[j] + h / 6.0 * (e_full[j] * k1[j] + 2.0 * e_half[j] * (k2[j] + k3[j]) + k4[j]);
    }
  }
};

}  // namespace

void lawson_step(const OriginalSystem& sys, std::vector<cplx>& z, double h) {
  LawsonStepper st(sys, h);
  st.step(z, h);
}

int default_steps(const OriginalSystem& sys, double T) {
  const double wmax = *std::max_element(sys.freqs().begin(), sys.freqs().end());
  return std::max(16, static_cast<int>(std::ceil(T * wmax / kTwoPi)));
}

FixedRun integrate_fixed(const OriginalSystem& sys, std::span<const cplx> z0, double T, int steps,
                         const std::vector<double>& sample_times, const StepObserver& observe) {
  if (steps <= 0 || !(T > 0.0)) throw Error(tags::kInvalid, "integrate_fixed: need T > 0 and steps > 0");
  if (static_cast<int>(z0.size()) != sys.modes()) throw Error(tags::kInvalid, "integrate_fixed: dimension mismatch");
  const double h = T / steps;
  LawsonStepper st(sys, h);
  std::vector<std::size_t> order(sample_times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sample_times[a] < sample_times[b]; });

  FixedRun run;
  run.samples.resize(sample_times.size());
  std::vector<cplx> z(z0.begin(), z0.end());
  const double H0 = sys.energy(z);
  const double Hscale = std::max(std::abs(H0), 1e-300);
  std::size_t next = 0;
  auto take_samples = [&](int step_index) {
    // Samples in [t_i, t_i + h) come from a partial step off the current state.
    const double t = step_index * h;
    while (next < order.size() && (sample_times[order[next]] < t + h || step_index == steps)) {
      const double dt = sample_times[order[next]] - t;
      std::vector<cplx> w = z;
      if (dt > 1e-14 * T) {
        LawsonStepper part(sys, dt);
        part.step(w, dt);
      }
      run.samples[order[next]] = std::move(w);
      ++next;
    }
  };
  const int drift_every = 8;
  for (int s = 0; s < steps; ++s) {
    take_samples(s);
    st.step(z, h);
    if (observe) observe((s + 1) * h, z);
    if ((s + 1) % drift_every == 0 || s + 1 == steps) {
      const double H = sys.energy(z);
      run.drift = std::max(run.drift, std::abs(H - H0) / Hscale);
      if (!std::isfinite(H)) throw Error(tags::kIntegration, "integration blew up at t = " + std::to_string((s + 1) * h));
    }
  }
  take_samples(steps);
  run.endpoint = std::move(z);
  return run;
}

IntegrationResult integrate_orbit(const OriginalSystem& sys, std::span<const cplx> z0, double T,
                                  const IntegrationOptions& opts) {
  int N = opts.min_steps > 0 ? opts.min_steps : default_steps(sys, T);
  FixedRun coarse = integrate_fixed(sys, z0, T, N);
  double last_change = 0.0, last_drift = coarse.drift;
  for (int d = 0; d < opts.max_doublings; ++d) {
    FixedRun fine = integrate_fixed(sys, z0, T, 2 * N);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < fine.endpoint.size(); ++j) {
      num += std::norm(fine.endpoint[j] - coarse.endpoint[j]);
      den += std::norm(fine.endpoint[j]);
    }
    last_change = std::sqrt(num / std::max(den, 1e-300));
    last_drift = fine.drift;
    N *= 2;
    if (last_change <= opts.halving_tol && last_drift <= opts.drift_tol) {
      return {std::move(fine.endpoint), last_drift, last_change, N};
    }
    coarse = std::move(fine);
  }
  throw Error(tags::kIntegration, "drift/step-halving tolerance unreachable at " + std::to_string(N) +
                                      " steps (drift " + std::to_string(last_drift) + ", halving change " +
                                      std::to_string(last_change) + ")");
}

CoordinateMap::CoordinateMap(const SeminormalForm& form, int steps) : steps_(steps) {
  for (const SparsePoly& chi : form.generators) chi_.emplace_back(chi);
}

std::vector<cplx> CoordinateMap::pullback(std::span<const cplx> y) const {
  std::vector<cplx> x = real_point(y);
  for (auto it = chi_.rbegin(); it != chi_.rend(); ++it) x = hamiltonian_flow(*it, x, -1.0, steps_);
  std::vector<cplx> z(y.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = x[2 * j];
  return z;
}

std::vector<cplx> CoordinateMap::pushforward(std::span<const cplx> z) const {
  std::vector<cplx> x = real_point(z);
  for (const CompiledPoly& chi : chi_) x = hamiltonian_flow(chi, x, 1.0, steps_);
  std::vector<cplx> y(z.size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = x[2 * j];
  return y;
}

std::vector<cplx> normalized_initial_point(const ReducedActionPoint& p, const RangeContext& ctx) {
  const Loop& x = p.range.zeta;
  const TrajectorySamples tr = trajectory(x, p.phi0, ctx, oversampled_size(x.L));
  std::vector<cplx> y(ctx.n + ctx.M);
  for (int i = 0; i < ctx.n; ++i) y[i] = ctx.eta * std::polar(std::sqrt(tr.I(i, 0)), tr.phi(i, 0));
  for (int j = 0; j < ctx.M; ++j) y[ctx.n + j] = ctx.eta * tr.z(j, 0);
  return y;
}

std::vector<cplx> torus_point(const RangeContext& ctx, std::span<const double> theta) {
  std::vector<cplx> y(ctx.n + ctx.M, cplx{});
  for (int i = 0; i < ctx.n; ++i) y[i] = ctx.eta * std::polar(std::sqrt(ctx.I0(i)), theta[i]);
  return y;
}

bool OrbitReport::all_pass() const {
  return !clauses.empty() && std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
}

namespace {

OrbitReport measure(std::span<const cplx> z0, int steps_hint, const RangeContext& ctx, const CoordinateMap& map,
                    const OriginalSystem& sys, const VerifyOptions& opts) {
  OrbitReport r;
  r.eta = ctx.eta;
  r.T = ctx.T;
  r.n = ctx.n;
  r.k = ctx.k;
  r.gcd = 0;
  for (long v : ctx.k) r.gcd = std::gcd(r.gcd, std::abs(v));
  r.z0.assign(z0.begin(), z0.end());
  const auto w = mode_weights(sys.modes(), opts.s, opts.a);

  IntegrationOptions io;
  io.drift_tol = opts.drift_tol;
  io.halving_tol = opts.halving_tol;
  io.min_steps = steps_hint;
  const IntegrationResult ir = integrate_orbit(sys, z0, ctx.T, io);
  r.halving_change = ir.halving_change;
  r.steps = ir.steps;

  std::vector<double> times;
  for (int m = 2; m <= opts.m_max; ++m) times.push_back(ctx.T / m);
  const int ts = std::max(1, opts.torus_samples);
  for (int q = 0; q < ts; ++q) times.push_back(ctx.T * q / ts);
  double sup = weighted_norm(z0, w), tail = weighted_norm(z0, w, ctx.n);
  const FixedRun run = integrate_fixed(sys, z0, ctx.T, ir.steps, times, [&](double, const std::vector<cplx>& z) {
    sup = std::max(sup, weighted_norm(z, w));
    tail = std::max(tail, weighted_norm(z, w, ctx.n));
  });
  r.drift = run.drift;
  r.sup_norm = sup;
  r.tail_sup = tail;
  const double z0n = weighted_norm(z0, w);
  r.closure = weighted_distance(run.endpoint, z0, w) / z0n;
  for (int m = 2; m <= opts.m_max; ++m) r.sub_closures.push_back(weighted_distance(run.samples[m - 2], z0, w) / z0n);

  // Nearest torus point: angles of the normalized image, actions I0.
  std::vector<double> theta(ctx.n);
  for (int q = 0; q < ts; ++q) {
    const auto& z = run.samples[opts.m_max - 1 + q];
    const std::vector<cplx> y = map.pushforward(z);
    for (int i = 0; i < ctx.n; ++i) theta[i] = std::arg(y[i]);
    const std::vector<cplx> zt = map.pullback(torus_point(ctx, theta));
    r.torus_distance = std::max(r.torus_distance, weighted_distance(z, zt, w));
  }
  return r;
}

// Shooting on z0 -> z(T) - z0 in weighted real coordinates; the Jacobian is
// formed once by forward differences and refreshed when progress stalls.
// Truncated SVD handles the directions along the orbit family.
std::vector<cplx> refine_initial_point(std::vector<cplx> z0, int steps, double T, const OriginalSystem& sys,
                                       const VerifyOptions& opts, double& closure, int& iterations) {
  const int m = sys.modes();
  const auto w = mode_weights(m, opts.s, opts.a);
  auto to_real = [&](const std::vector<cplx>& z) {
    Eigen::VectorXd x(2 * m);
    for (int j = 0; j < m; ++j) {
      x(2 * j) = w[j] * z[j].real();
      x(2 * j + 1) = w[j] * z[j].imag();
    }
    return x;
  };
  auto to_cplx = [&](const Eigen::VectorXd& x) {
    std::vector<cplx> z(m);
    for (int j = 0; j < m; ++j) z[j] = cplx(x(2 * j), x(2 * j + 1)) / w[j];
    return z;
  };
  auto residual = [&](const Eigen::VectorXd& x) {
    const FixedRun run = integrate_fixed(sys, to_cplx(x), T, steps);
    return Eigen::VectorXd(to_real(run.endpoint) - x);
  };

  Eigen::VectorXd x = to_real(z0);
  Eigen::VectorXd r = residual(x);
  closure = r.norm() / x.norm();
  Eigen::MatrixXd Jac;
  bool fresh = false;
  iterations = 0;
  for (int it = 0; it < opts.refine_iters && closure > 0.1 * opts.closure_tol; ++it) {
    if (Jac.size() == 0 || !fresh) {
      Jac.resize(2 * m, 2 * m);
      const double hfd = 1e-7 * x.norm();
      for (int c = 0; c < 2 * m; ++c) {
        Eigen::VectorXd xp = x;
        xp(c) += hfd;
        Jac.col(c) = (residual(xp) - r) / hfd;
      }
      fresh = true;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    Eigen::VectorXd ur = svd.matrixU().transpose() * r;
    for (int i = 0; i < sv.size(); ++i) ur(i) = sv(i) > opts.rcond * sv(0) ? ur(i) / sv(i) : 0.0;
    const Eigen::VectorXd dx = -(svd.matrixV() * ur);
    const Eigen::VectorXd xn = x + dx;
    const Eigen::VectorXd rn = residual(xn);
    const double cn = rn.norm() / xn.norm();
    ++iterations;
    if (!(cn < closure)) {
      if (fresh && Jac.size() > 0 && it > 0) {
        fresh = false;  // retry with a new Jacobian at the same point
        continue;
      }
      break;
    }
    if (cn > 0.25 * closure) fresh = false;
    else fresh = true;
    x = xn;
    r = rn;
    closure = cn;
  }
  return to_cplx(x);
}

}  // namespace

OrbitReport measure_orbit(std::span<const cplx> z0, const RangeContext& ctx, const CoordinateMap& map,
                          const OriginalSystem& sys, const VerifyOptions& opts) {
  OrbitReport r = measure(z0, 0, ctx, map, sys, opts);
  r.z0_unrefined = r.z0;
  r.closure_unrefined = r.closure;
  evaluate_clauses(r, opts);
  return r;
}

OrbitReport verify_orbit(const ReducedActionPoint& p, const RangeContext& ctx, const CoordinateMap& map,
                         const OriginalSystem& sys, const VerifyOptions& opts) {
  const std::vector<cplx> z0u = map.pullback(normalized_initial_point(p, ctx));
  IntegrationOptions io;
  io.drift_tol = opts.drift_tol;
  io.halving_tol = opts.halving_tol;
  const IntegrationResult ir = integrate_orbit(sys, z0u, ctx.T, io);
  const auto w = mode_weights(sys.modes(), opts.s, opts.a);
  const double closure_u = weighted_distance(ir.endpoint, z0u, w) / weighted_norm(z0u, w);

  std::vector<cplx> z0 = z0u;
  int iters = 0;
  if (opts.refine && closure_u > 0.1 * opts.closure_tol) {
    double c = 0.0;
    z0 = refine_initial_point(z0u, ir.steps, ctx.T, sys, opts, c, iters);
  }
  OrbitReport r = measure(z0, ir.steps / 2, ctx, map, sys, opts);
  r.z0_unrefined = z0u;
  r.closure_unrefined = closure_u;
  r.refine_iterations = iters;
  evaluate_clauses(r, opts);
  return r;
}

void evaluate_clauses(OrbitReport& r, const VerifyOptions& opts, const OrbitReport* companion) {
  r.clauses.clear();
  auto add = [&](std::string id, std::string name, bool pass, double value, double threshold, std::string detail) {
    r.clauses.push_back({std::move(id), std::move(name), pass, value, threshold, std::move(detail)});
  };
  add("i", "closure", r.closure <= opts.closure_tol, r.closure, opts.closure_tol,
      "||z(T)-z(0)||/||z(0)|| (before refinement " + std::to_string(r.closure_unrefined) + ")");

  auto stable = [&](const char* id, const char* name, double C, double Cc, const std::string& what) {
    if (!companion) {
      add(id, name, std::isfinite(C), C, 0.0, what + "; no eta/2 companion, constant reported only");
      return;
    }
    const double ratio = Cc / C;
    add(id, name, ratio >= 0.5 && ratio <= 2.0, ratio, 2.0,
        what + " = " + std::to_string(C) + " at eta, " + std::to_string(Cc) + " at eta/2; value is their ratio");
  };
  stable("ii", "amplitude", r.C_amplitude(), companion ? companion->C_amplitude() : 0.0, "sup ||z||/eta");
  stable("iii", "tail", r.C_tail(), companion ? companion->C_tail() : 0.0, "sup ||Pi_{>n} z||/eta^2");

  const double lo = 1.0 / (r.eta * r.eta), hi = 2.0 / (r.eta * r.eta);
  add("iv", "period window", r.T >= lo && r.T <= hi, r.T, hi,
      "T in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");

  const double bar = opts.sub_closure_factor * r.closure;
  int first = 0;
  double min_sub = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < r.sub_closures.size(); ++q) {
    min_sub = std::min(min_sub, r.sub_closures[q]);
    if (first == 0 && r.sub_closures[q] <= bar) first = static_cast<int>(q) + 2;
  }
  if (r.gcd == 1) {
    add("v", "minimal period", first == 0, min_sub, bar,
        first == 0 ? "gcd(k) = 1, no closure at T/m for m <= " + std::to_string(opts.m_max)
                   : "gcd(k) = 1 but closure at T/" + std::to_string(first));
  } else {
    add("v", "minimal period", first != 0 && r.gcd % first == 0, first == 0 ? min_sub : r.sub_closures[first - 2],
        bar,
        "gcd(k) = " + std::to_string(r.gcd) +
            (first == 0 ? ", no sub-period closure found" : ", closes at T/" + std::to_string(first)));
  }

  const double Ct = r.C_torus();
  if (companion) {
    const double ratio = companion->C_torus() / Ct;
    add("vi", "torus distance", ratio <= 2.0, ratio, 2.0,
        "sup dist(z, T(I0))/eta^2 = " + std::to_string(Ct) + " at eta, " + std::to_string(companion->C_torus()) +
            " at eta/2; the constant must not grow");
  } else {
    add("vi", "torus distance", std::isfinite(Ct), Ct, 0.0,
        "sup dist(z, T(I0))/eta^2; no eta/2 companion, constant reported only");
  }
  add("drift", "energy drift", r.drift <= opts.drift_tol, r.drift, opts.drift_tol, "max |H(t)-H(0)|/|H(0)|");
  add("halving", "step halving", r.halving_change <= opts.halving_tol, r.halving_change, opts.halving_tol,
      "relative endpoint change under step halving (" + std::to_string(r.steps) + " steps)");
}

std::string report_json(const OrbitReport& r) {
  nlohmann::json j;
  j["eta"] = r.eta;
  j["T"] = r.T;
  j["k"] = r.k;
  j["gcd"] = r.gcd;
  j["closure"] = r.closure;
  j["closure_unrefined"] = r.closure_unrefined;
  j["refine_iterations"] = r.refine_iterations;
  j["energy_drift"] = r.drift;
  j["halving_change"] = r.halving_change;
  j["steps"] = r.steps;
  j["sup_norm"] = r.sup_norm;
  j["tail_sup"] = r.tail_sup;
  j["torus_distance"] = r.torus_distance;
  nlohmann::json z0 = nlohmann::json::array();
  for (const cplx& c : r.z0) z0.push_back({c.real(), c.imag()});
  j["z0"] = z0;
  nlohmann::json cl = nlohmann::json::object();
  for (const auto& c : r.clauses) {
    cl[c.id] = {{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold},
                {"detail", c.detail}};
  }
  j["clauses"] = cl;
  j["all_pass"] = r.all_pass();
  return j.dump(2);
}

}  // namespace blorbit
