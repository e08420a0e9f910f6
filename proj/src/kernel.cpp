#include "blorbit/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "blorbit/error.hpp"

namespace blorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI{0.0, 1.0};

// int_0^T a(t) b(t) dt = T sum_l a_l b_{-l}, summed over rows.
cplx pairing(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b, int L, double T) {
  cplx acc{};
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (int l = -L; l <= L; ++l) acc += a(r, l + L) * b(r, -l + L);
  return T * acc;
}

// L x - N(x) with the mean of R_phi kept in the psi slot.
Loop full_equation_residual(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx) {
  NResult nr = eval_N(x, phi0, ctx);
  for (int i = 0; i < ctx.n; ++i) nr.rhs.psi_at(i, 0) = nr.mean(i);
  return apply_L(x, ctx.lin) - nr.rhs;
}

}  // namespace

ActionValue action_functional(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx, int N_t) {
  const int n = ctx.n, M = ctx.M;
  const int N = N_t > 0 ? N_t : ctx.N_t;
  const double e2 = ctx.eta * ctx.eta;
  const TrajectorySamples tr = trajectory(x, phi0, ctx, N);
  const LoopSamples s = to_samples(x, N);
  const LoopSamples ds = to_samples(x.derivative(), N);

  const int dim = 2 * (n + M);
  std::vector<double> xr(std::size_t(dim) * N), xi(xr.size()), gr(xr.size(), 0.0), gi(xr.size(), 0.0);
  std::vector<double> vr(N, 0.0), vi(N, 0.0);
  for (int m = 0; m < N; ++m) {
    for (int i = 0; i < n; ++i) {
      const cplx zeta = std::polar(std::sqrt(tr.I(i, m)), tr.phi(i, m));
      xr[std::size_t(2 * i) * N + m] = zeta.real();
      xi[std::size_t(2 * i) * N + m] = zeta.imag();
      xr[std::size_t(2 * i + 1) * N + m] = zeta.real();
      xi[std::size_t(2 * i + 1) * N + m] = -zeta.imag();
    }
    for (int j = 0; j < M; ++j) {
      xr[std::size_t(2 * (n + j)) * N + m] = tr.z(j, m).real();
      xi[std::size_t(2 * (n + j)) * N + m] = tr.z(j, m).imag();
      xr[std::size_t(2 * (n + j) + 1) * N + m] = tr.zbar(j, m).real();
      xi[std::size_t(2 * (n + j) + 1) * N + m] = tr.zbar(j, m).imag();
    }
  }
  ctx.W.gradient_batch(xr.data(), xi.data(), N, N, gr.data(), gi.data(), vr.data(), vi.data());

  // Integrand minus its value on the torus; omega_tilde = omega + eta^2 A I0
  // cancels the terms linear in J.
  double acc = 0.0;
  Eigen::VectorXd J(n), Z(M);
  for (int m = 0; m < N; ++m) {
    for (int i = 0; i < n; ++i) J(i) = s.J(i, m).real();
    double f = 0.0;
    for (int i = 0; i < n; ++i) f += tr.I(i, m) * ds.psi(i, m).real();
    f -= 0.5 * e2 * J.dot(ctx.A * J);
    for (int j = 0; j < M; ++j) {
      Z(j) = (s.z(j, m) * s.zbar(j, m)).real();
      f += (kI * s.z(j, m) * ds.zbar(j, m)).real() - ctx.Omega_tilde(j) * Z(j);
    }
    f -= e2 * (ctx.B * J).dot(Z);
    f -= vr[m];
    acc += f;
  }
  ActionValue a;
  a.constant = ctx.T * (ctx.I0.dot(ctx.omega_tilde) - ctx.H_I0);
  a.offset = ctx.T * acc / N;
  return a;
}

double action_derivative(const Loop& x, const Loop& dx, const Eigen::VectorXd& phi0, const Eigen::VectorXd& dphi0,
                         const RangeContext& ctx) {
  const Loop E = full_equation_residual(x, phi0, ctx);
  const int L = x.L;
  const double T = x.T;
  Eigen::MatrixXcd dphi = dx.psi;
  for (int i = 0; i < ctx.n; ++i) dphi(i, L) += dphi0(i);
  cplx d = pairing(dx.J, E.J, L, T) - pairing(dphi, E.psi, L, T);
  d += kI * pairing(dx.z, E.zbar, L, T) - kI * pairing(dx.zbar, E.z, L, T);
  return d.real();
}

ReducedActionPoint reduced_action(const Eigen::VectorXd& phi0, const RangeContext& ctx, const ContractionConfig& cfg,
                                  const Loop* warm) {
  ReducedActionPoint p;
  p.phi0 = phi0;
  p.range = solve_range(phi0, ctx, cfg, warm);
  p.grad = p.range.mean;
  p.action = action_functional(p.range.zeta, phi0, ctx);
  p.S_value = p.action.total();
  return p;
}

Eigen::MatrixXi unimodular_completion(const std::vector<long>& k) {
  const int n = static_cast<int>(k.size());
  std::vector<long> v(k);
  long g = 0;
  for (long c : v) g = std::gcd(g, std::abs(c));
  if (g == 0) throw Error(tags::kInvalid, "resonance vector k must be nonzero");
  for (long& c : v) c /= g;

  // Row operations Q with Q v = e_1, tracked together with Q^{-1}.
  Eigen::MatrixXi Qinv = Eigen::MatrixXi::Identity(n, n);
  while (true) {
    int p = -1;
    for (int i = 0; i < n; ++i)
      if (v[i] != 0 && (p < 0 || std::abs(v[i]) < std::abs(v[p]))) p = i;
    bool done = true;
    for (int i = 0; i < n; ++i) {
      if (i == p || v[i] == 0) continue;
      const long q = v[i] / v[p];
      v[i] -= q * v[p];
      Qinv.col(p) += static_cast<int>(q) * Qinv.col(i);
      if (v[i] != 0) done = false;
    }
    if (done) {
      if (p != 0) {
        std::swap(v[0], v[p]);
        Qinv.col(0).swap(Qinv.col(p));
      }
      if (v[0] < 0) {
        v[0] = -v[0];
        Qinv.col(0) *= -1;
      }
      break;
    }
  }
  return Qinv;
}

Eigen::VectorXd slice_point(const Eigen::MatrixXi& U, const Eigen::VectorXd& theta) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(U.rows());
  c.tail(theta.size()) = theta;
  return kTwoPi * (U.cast<double>() * c);
}

Loop cartesian_loop(const ReducedActionPoint& p, const RangeContext& ctx) {
  const Loop& x = p.range.zeta;
  // The tangential carrier e^{i 2 pi k t / T} needs |k| more harmonics.
  long kmax = 0;
  for (long v : ctx.k) kmax = std::max(kmax, std::abs(v));
  const int Lc = x.L + static_cast<int>(kmax);
  const int N = oversampled_size(Lc);
  const TrajectorySamples tr = trajectory(x, p.phi0, ctx, N);
  LoopSamples s;
  s.T = ctx.T;
  s.N = N;
  s.psi.resize(0, N);
  s.J.resize(0, N);
  s.z.resize(ctx.n + ctx.M, N);
  s.zbar.resize(ctx.n + ctx.M, N);
  for (int m = 0; m < N; ++m) {
    for (int i = 0; i < ctx.n; ++i) {
      const cplx zeta = std::polar(std::sqrt(tr.I(i, m)), tr.phi(i, m));
      s.z(i, m) = zeta;
      s.zbar(i, m) = std::conj(zeta);
    }
    for (int j = 0; j < ctx.M; ++j) {
      s.z(ctx.n + j, m) = tr.z(j, m);
      s.zbar(ctx.n + j, m) = tr.zbar(j, m);
    }
  }
  return from_samples(s, 0, ctx.n + ctx.M, Lc);
}

ShiftMatch orbit_distance(const Loop& X, const Loop& Y, const NormWeights& w) {
  const int L = X.L;
  if (Y.L != L || Y.M != X.M || Y.n != X.n) throw Error(tags::kInvalid, "orbit_distance: shape mismatch");
  // Correlation weights of the quadratic part of the norm.
  Loop c(X.T, 0, 1, L);
  for (int l = -L; l <= L; ++l) {
    const double f = 1.0 + std::pow(kTwoPi * l, 2);
    cplx acc{};
    for (int r = 0; r < X.M; ++r) {
      const double j = w.first_tail_mode + r;
      const double wr = std::pow(j, 2.0 * w.s) * std::exp(2.0 * j * w.a);
      acc += wr * f * std::conj(X.z(r, l + L)) * Y.z(r, l + L);
    }
    for (int r = 0; r < X.n; ++r) {
      acc += f * std::conj(X.psi(r, l + L)) * Y.psi(r, l + L);
      acc += f * std::conj(X.J(r, l + L)) * Y.J(r, l + L);
    }
    c.z_at(0, l) = acc;
  }
  // C(sigma) = Re sum_l c_l e^{i 2 pi l sigma / T} on a grid.
  const int G = fft_size(4 * L + 4);
  const LoopSamples cs = to_samples(c, G);
  int best = 0;
  for (int m = 1; m < G; ++m)
    if (cs.z(0, m).real() > cs.z(0, best).real()) best = m;
  const double ym = cs.z(0, (best + G - 1) % G).real(), y0 = cs.z(0, best).real(), yp = cs.z(0, (best + 1) % G).real();
  const double den = ym - 2.0 * y0 + yp;
  const double off = den < 0.0 ? std::clamp(0.5 * (ym - yp) / den, -0.5, 0.5) : 0.0;
  // Newton on C'(sigma) = 0 from the parabolic estimate.
  double sigma = (best + off) * X.T / G;
  for (int it = 0; it < 30; ++it) {
    double d1 = 0.0, d2 = 0.0;
    for (int l = -L; l <= L; ++l) {
      const double th = kTwoPi * l / X.T;
      const cplx e = c.z_at(0, l) * std::polar(1.0, th * sigma);
      d1 -= th * e.imag();
      d2 -= th * th * e.real();
    }
    if (!(d2 < 0.0)) break;
    const double step = std::clamp(-d1 / d2, -X.T / G, X.T / G);
    sigma += step;
    if (std::abs(step) <= 1e-15 * X.T) break;
  }
  ShiftMatch r;
  r.shift = std::fmod(std::fmod(sigma, X.T) + X.T, X.T);
  r.distance = norm_Tas(X - Y.shifted(r.shift), w);
  return r;
}

double full_residual(const ReducedActionPoint& p, const RangeContext& ctx) {
  return norm_Tas(full_equation_residual(p.range.zeta, p.phi0, ctx), ctx.weights);
}

KernelResult find_critical_points(const RangeContext& ctx, const KernelOptions& opts) {
  if (ctx.n < 1) throw Error(tags::kInvalid, "kernel search needs n >= 1");
  if (opts.grid_per_dim < 1) throw Error(tags::kConfig, "grid_per_dim must be positive");
  const int d = ctx.n - 1;
  const Eigen::MatrixXi U = unimodular_completion(ctx.k);
  const double T = ctx.T;

  // Gradient of S_n along the slice coordinates.
  auto slice_grad = [&](const ReducedActionPoint& p) {
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g(i) = kTwoPi * T * U.col(i + 1).cast<double>().dot(p.grad);
    return g;
  };

  std::vector<Eigen::VectorXd> seeds;
  const int total = static_cast<int>(std::pow(double(opts.grid_per_dim), d));
  for (int s = 0; s < total; ++s) {
    Eigen::VectorXd th(d);
    int rest = s;
    for (int i = 0; i < d; ++i) {
      th(i) = double(rest % opts.grid_per_dim) / opts.grid_per_dim;
      rest /= opts.grid_per_dim;
    }
    seeds.push_back(th);
  }

  KernelResult res;
  res.seeds = static_cast<int>(seeds.size());
  std::vector<ReducedActionPoint> accepted;
  std::vector<Loop> shapes;
  const Loop* warm = nullptr;
  Loop last;
  for (const Eigen::VectorXd& seed : seeds) {
    Eigen::VectorXd th = seed;
    bool ok = false;
    ReducedActionPoint p;
    try {
      for (int it = 0; it <= opts.max_newton; ++it) {
        p = reduced_action(slice_point(U, th), ctx, opts.range, warm);
        p.theta = th;
        p.newton_iterations = it;
        last = p.range.zeta;
        warm = &last;
        if (p.grad.norm() <= opts.newton_tol) {
          ok = true;
          break;
        }
        if (it == opts.max_newton || d == 0) break;
        // Central-difference Hessian of S_n on the slice.
        const Eigen::VectorXd g = slice_grad(p);
        Eigen::MatrixXd H(d, d);
        for (int i = 0; i < d; ++i) {
          Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
          e(i) = opts.fd_step;
          const auto pp = reduced_action(slice_point(U, th + e), ctx, opts.range, &p.range.zeta);
          const auto pm = reduced_action(slice_point(U, th - e), ctx, opts.range, &p.range.zeta);
          H.col(i) = (slice_grad(pp) - slice_grad(pm)) / (2.0 * opts.fd_step);
        }
        Eigen::VectorXd step = -H.fullPivLu().solve(g);
        if (!step.allFinite()) break;
        const double len = step.cwiseAbs().maxCoeff();
        if (len > 0.1) step *= 0.1 / len;
        th += step;
      }
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      ++res.diverged;
      continue;
    }
    const Loop shape = cartesian_loop(p, ctx);
    NormWeights w = ctx.weights;
    w.first_tail_mode = 1;
    bool dup = false;
    for (std::size_t a = 0; a < accepted.size() && !dup; ++a) {
      if (orbit_distance(shapes[a], shape, w).distance < opts.same_orbit) {
        dup = true;
        if (p.grad.norm() < accepted[a].grad.norm()) accepted[a] = p;
      }
    }
    if (!dup) {
      accepted.push_back(std::move(p));
      shapes.push_back(shape);
    }
  }
  if (accepted.empty()) {
    throw Error(tags::kKernel, "Newton iteration failed on all " + std::to_string(res.seeds) + " seeds");
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const ReducedActionPoint& a, const ReducedActionPoint& b) { return a.S_value < b.S_value; });
  int cid = 0;
  for (std::size_t a = 0; a < accepted.size(); ++a) {
    if (a > 0) {
      const double ref = std::max(std::abs(accepted[a].S_value), 1.0);
      if (accepted[a].S_value - accepted[a - 1].S_value > opts.cluster_tol * ref) ++cid;
    }
    accepted[a].cluster = cid;
  }
  res.clusters = cid + 1;
  res.points = std::move(accepted);
  res.fewer_than_n = static_cast<int>(res.points.size()) < ctx.n;
  return res;
}

}  // namespace blorbit
