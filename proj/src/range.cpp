#include "blorbit/range.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "blorbit/error.hpp"

namespace blorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI{0.0, 1.0};

}  // namespace

LinearSolveData LinearSolveData::make(const Eigen::MatrixXd& A, const Eigen::VectorXd& Omega_tilde, double T,
                                      double eta, double guard) {
  LinearSolveData d;
  d.A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.A);
  d.lambda = es.eigenvalues();
  d.E = es.eigenvectors();
  const double scale = d.lambda.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < d.lambda.size(); ++k) {
    if (!(std::abs(d.lambda(k)) > 1e-12 * scale)) {
      throw Error(tags::kSingularA, "eigenvalue " + std::to_string(k) + " of A vanishes");
    }
  }
  d.Omega_tilde = Omega_tilde;
  d.T = T;
  d.eta = eta;
  d.guard = guard;
  return d;
}

Loop apply_L(const Loop& x, const LinearSolveData& d) {
  const Loop dx = x.derivative();
  Loop r(x.T, x.n, x.M, x.L);
  const double e2 = d.eta * d.eta;
  r.psi = dx.J;
  r.J = dx.psi - e2 * d.A * x.J;
  for (int j = 0; j < x.M; ++j) {
    r.z.row(j) = dx.z.row(j) - kI * d.Omega_tilde(j) * x.z.row(j);
    r.zbar.row(j) = dx.zbar.row(j) + kI * d.Omega_tilde(j) * x.zbar.row(j);
  }
  return r;
}

Loop invert_L(const Loop& rhs, const LinearSolveData& d) {
  const int L = rhs.L;
  const double T = rhs.T;
  const double e2 = d.eta * d.eta;
  Loop x(T, rhs.n, rhs.M, L);

  const double mean = rhs.n ? rhs.psi.col(L).cwiseAbs().maxCoeff() : 0.0;
  if (mean > 1e-10 * std::max(rhs.max_abs(), 1e-300)) {
    throw Error(tags::kInvalid, "invert_L: psi-equation right-hand side is not mean-free");
  }

  if (rhs.n) {
    const Eigen::MatrixXcd pt = d.E.transpose() * rhs.psi;
    const Eigen::MatrixXcd jt = d.E.transpose() * rhs.J;
    Eigen::MatrixXcd J(rhs.n, 2 * L + 1), P(rhs.n, 2 * L + 1);
    for (int k = 0; k < rhs.n; ++k) {
      const double lam = d.lambda(k);
      for (int l = -L; l <= L; ++l) {
        const int c = l + L;
        if (l == 0) {
          J(k, c) = -jt(k, c) / (e2 * lam);
          P(k, c) = 0.0;
        } else {
          const cplx den = kI * (kTwoPi * l);
          J(k, c) = T * pt(k, c) / den;
          P(k, c) = T * (jt(k, c) + e2 * lam * J(k, c)) / den;
        }
      }
    }
    x.J = d.E * J;
    x.psi = d.E * P;
  }

  for (int j = 0; j < rhs.M; ++j) {
    const double wT = d.Omega_tilde(j) * T;
    for (int l = -L; l <= L; ++l) {
      const int c = l + L;
      const double dm = kTwoPi * l - wT;
      const double dp = kTwoPi * l + wT;
      if (std::abs(dm) < d.guard || std::abs(dp) < d.guard) {
        std::ostringstream os;
        os << "denominator " << std::min(std::abs(dm), std::abs(dp)) << " below guard " << d.guard
           << " at (j=" << rhs.n + j + 1 << ", l=" << (std::abs(dm) < d.guard ? l : -l) << ")";
        throw Error(tags::kSmallDenominator, os.str());
      }
      x.z(j, c) = T * rhs.z(j, c) / (kI * dm);
      x.zbar(j, c) = T * rhs.zbar(j, c) / (kI * dp);
    }
  }
  return x;
}

Eigen::VectorXcd pack_range(const Loop& x, bool drop_psi_mean) {
  const int C = x.cols();
  const int np = x.n * (drop_psi_mean ? C - 1 : C);
  Eigen::VectorXcd v(np + x.n * C + 2 * x.M * C);
  Eigen::Index p = 0;
  for (int k = 0; k < x.n; ++k)
    for (int c = 0; c < C; ++c)
      if (!drop_psi_mean || c != x.L) v(p++) = x.psi(k, c);
  for (int k = 0; k < x.n; ++k)
    for (int c = 0; c < C; ++c) v(p++) = x.J(k, c);
  for (int j = 0; j < x.M; ++j)
    for (int c = 0; c < C; ++c) v(p++) = x.z(j, c);
  for (int j = 0; j < x.M; ++j)
    for (int c = 0; c < C; ++c) v(p++) = x.zbar(j, c);
  return v;
}

Loop unpack_range(const Eigen::VectorXcd& v, double T, int n, int M, int L, bool psi_mean_dropped) {
  Loop x(T, n, M, L);
  const int C = x.cols();
  Eigen::Index p = 0;
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < C; ++c)
      if (!psi_mean_dropped || c != L) x.psi(k, c) = v(p++);
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < C; ++c) x.J(k, c) = v(p++);
  for (int j = 0; j < M; ++j)
    for (int c = 0; c < C; ++c) x.z(j, c) = v(p++);
  for (int j = 0; j < M; ++j)
    for (int c = 0; c < C; ++c) x.zbar(j, c) = v(p++);
  return x;
}

Eigen::MatrixXcd dense_L(const LinearSolveData& d, int n, int M, int L) {
  const Loop zero(d.T, n, M, L);
  const Eigen::Index dim = pack_range(zero, true).size();
  Eigen::MatrixXcd mat(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(c) = 1.0;
    mat.col(c) = pack_range(apply_L(unpack_range(e, d.T, n, M, L, true), d), true);
  }
  return mat;
}

RangeContext RangeContext::build(const SeminormalForm& form, const TorusSelection& sel, const RangeOptions& opts) {
  RangeContext c;
  c.n = form.n;
  c.M = form.M;
  c.eta = sel.eta;
  c.T = sel.T;
  c.k = sel.k;
  c.I0 = sel.I0;
  c.omega_tilde = sel.omega_tilde;
  c.Omega_tilde = sel.Omega_tilde;
  c.A = form.A;
  c.B = form.B;

  // W = everything beyond H0 + Gbar.
  SparsePoly W = form.transformed;
  W -= quadratic_hamiltonian(form.n, form.M, form.freqs);
  W -= form.Gbar;
  if (!opts.include_ghat) W -= form.Ghat;
  W.prune();
  c.W_poly = W;
  c.W = CompiledPoly(W, c.eta, 2);

  Eigen::VectorXd omega(c.n);
  for (int i = 0; i < c.n; ++i) omega(i) = form.freqs[i];
  c.H_I0 = omega.dot(c.I0) + 0.5 * c.eta * c.eta * c.I0.dot(c.A * c.I0);

  long forcing = 0;
  for (const auto& [key, coef] : W.terms()) {
    const Monomial m(key);
    long h = 0;
    for (int i = 0; i < c.n; ++i) h += static_cast<long>(m.count(z_var(i)) - m.count(zbar_var(i))) * c.k[i];
    forcing = std::max(forcing, std::abs(h));
  }
  c.forcing_harmonic = static_cast<int>(forcing);
  c.L = std::clamp(std::max<int>(opts.L_min, c.forcing_harmonic + opts.L_margin), 1, opts.L_cap);
  c.N_t = oversampled_size(c.L);

  c.weights = opts.weights;
  c.weights.first_tail_mode = c.n + 1;
  const double guard = opts.guard > 0.0 ? opts.guard : sel.delta / std::pow(double(c.n + c.M), sel.tau);
  c.lin = LinearSolveData::make(c.A, c.Omega_tilde, c.T, c.eta, guard);
  return c;
}

TrajectorySamples trajectory(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx, int N_t) {
  const LoopSamples s = to_samples(x, N_t);
  TrajectorySamples tr;
  tr.N = N_t;
  tr.phi.resize(ctx.n, N_t);
  tr.I.resize(ctx.n, N_t);
  for (int m = 0; m < N_t; ++m) {
    const double t = ctx.T * m / N_t;
    for (int i = 0; i < ctx.n; ++i) {
      tr.phi(i, m) = phi0(i) + ctx.omega_tilde(i) * t + s.psi(i, m).real();
      tr.I(i, m) = ctx.I0(i) + s.J(i, m).real();
    }
  }
  tr.z = s.z;
  tr.zbar = s.zbar;
  return tr;
}

NResult eval_N(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx) {
  const int n = ctx.n, M = ctx.M, N = ctx.N_t;
  const double e2 = ctx.eta * ctx.eta;
  const TrajectorySamples tr = trajectory(x, phi0, ctx, N);
  const LoopSamples js = to_samples(x, N);

  LoopSamples out;
  out.T = ctx.T;
  out.N = N;
  out.psi.resize(n, N);
  out.J.resize(n, N);
  out.z.resize(M, N);
  out.zbar.resize(M, N);

  // Phase-space points, variable-major, then one batched gradient pass.
  const int dim = 2 * (n + M);
  std::vector<double> xr(std::size_t(dim) * N), xi(xr.size()), gr(xr.size(), 0.0), gi(xr.size(), 0.0);
  auto put = [&](int v, int m, cplx c) {
    xr[std::size_t(v) * N + m] = c.real();
    xi[std::size_t(v) * N + m] = c.imag();
  };
  for (int m = 0; m < N; ++m) {
    for (int i = 0; i < n; ++i) {
      const double I = tr.I(i, m);
      if (!(I > 0.0)) {
        std::ostringstream os;
        os << "action I_" << i + 1 << " = " << I << " at t = " << ctx.T * m / N;
        throw Error(tags::kChart, os.str());
      }
      const cplx zeta = std::polar(std::sqrt(I), tr.phi(i, m));
      put(2 * i, m, zeta);
      put(2 * i + 1, m, std::conj(zeta));
    }
    for (int j = 0; j < M; ++j) {
      put(2 * (n + j), m, tr.z(j, m));
      put(2 * (n + j) + 1, m, tr.zbar(j, m));
    }
  }
  ctx.W.gradient_batch(xr.data(), xi.data(), N, N, gr.data(), gi.data());
  auto at = [&](const std::vector<double>& re, const std::vector<double>& im, int v, int m) {
    return cplx(re[std::size_t(v) * N + m], im[std::size_t(v) * N + m]);
  };

  Eigen::VectorXd Z(M), Jt(n);
  for (int m = 0; m < N; ++m) {
    for (int i = 0; i < n; ++i) Jt(i) = js.J(i, m).real();
    for (int j = 0; j < M; ++j) Z(j) = (tr.z(j, m) * tr.zbar(j, m)).real();
    const Eigen::VectorXd ZB = e2 * (ctx.B.transpose() * Z);
    const Eigen::VectorXd BJ = e2 * (ctx.B * Jt);
    for (int i = 0; i < n; ++i) {
      const cplx a = at(gr, gi, 2 * i, m) * at(xr, xi, 2 * i, m);
      const cplx b = at(gr, gi, 2 * i + 1, m) * at(xr, xi, 2 * i + 1, m);
      out.psi(i, m) = (-kI * (a - b)).real();
      out.J(i, m) = ZB(i) + ((a + b) / (2.0 * tr.I(i, m))).real();
    }
    for (int j = 0; j < M; ++j) {
      out.z(j, m) = kI * BJ(j) * tr.z(j, m) + kI * at(gr, gi, 2 * (n + j) + 1, m);
      out.zbar(j, m) = -kI * BJ(j) * tr.zbar(j, m) - kI * at(gr, gi, 2 * (n + j), m);
    }
  }

  NResult r;
  r.rhs = from_samples(out, n, M, x.L);
  r.mean = r.rhs.psi.col(x.L).real();
  r.rhs.psi.col(x.L).setZero();
  return r;
}

RangeSolution solve_range(const Eigen::VectorXd& phi0, const RangeContext& ctx, const ContractionConfig& cfg,
                          const Loop* initial) {
  if (!(cfg.tol > 0.0)) throw Error(tags::kConfig, "contraction tol must be positive");
  if (cfg.ball_radius < 0.0) throw Error(tags::kConfig, "ball radius must be positive");
  RangeSolution sol;
  Loop zeta = initial ? initial->resized(ctx.L) : Loop(ctx.T, ctx.n, ctx.M, ctx.L);
  double rho = cfg.ball_radius;
  for (int it = 0; it < cfg.max_iters; ++it) {
    NResult nr = eval_N(zeta, phi0, ctx);
    Loop next = invert_L(nr.rhs, ctx.lin);
    const double nn = norm_Tas(next, ctx.weights);
    if (rho == 0.0) rho = std::max(10.0 * nn, 1e-300);
    const double res = norm_Tas(next - zeta, ctx.weights);
    sol.residuals.push_back(res);
    if (sol.residuals.size() >= 2) {
      const double prev = sol.residuals[sol.residuals.size() - 2];
      sol.factors.push_back(prev > 0.0 ? res / prev : 0.0);
      // Factors measured once the step is at round-off carry no information.
      if (prev > 1e-11 * nn) sol.contraction = std::max(sol.contraction, sol.factors.back());
    }
    sol.iterations = it + 1;
    sol.mean = nr.mean;
    if (nn > rho) {
      const double lip = sol.factors.empty() ? 0.0 : sol.factors.back();
      std::ostringstream os;
      os << "iterate left the ball of radius " << rho << " (norm " << nn << ", Lipschitz estimate " << lip
         << ", eta^2 + rho/eta = " << ctx.eta * ctx.eta + rho / ctx.eta << ")";
      throw Error(tags::kRange, os.str());
    }
    zeta = std::move(next);
    if (res <= cfg.tol * std::max(nn, 1e-300) || nn == 0.0) {
      sol.converged = true;
      break;
    }
  }
  sol.ball_radius = rho;
  if (!sol.converged) {
    std::ostringstream os;
    os << "no convergence in " << cfg.max_iters << " iterations (last residual "
       << (sol.residuals.empty() ? 0.0 : sol.residuals.back()) << ")";
    throw Error(tags::kRange, os.str());
  }
  // Mean of R_phi at the returned point.
  sol.mean = eval_N(zeta, phi0, ctx).mean;
  sol.zeta = std::move(zeta);
  return sol;
}

WorstDenominator worst_denominator(const LinearSolveData& d, int L) {
  WorstDenominator w;
  w.value = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < d.Omega_tilde.size(); ++j) {
    const double wT = d.Omega_tilde(j) * d.T;
    const long l0 = std::clamp<long>(std::lround(wT / kTwoPi), -L, L);
    for (long l = std::max<long>(l0 - 1, -L); l <= std::min<long>(l0 + 1, L); ++l) {
      const double v = std::abs(kTwoPi * l - wT);
      if (v < w.value) w = {static_cast<int>(j), static_cast<int>(l), v};
    }
  }
  return w;
}

double operator_norm_probe(const LinearSolveData& d, int n, int M, int L, const NormWeights& w, double tau,
                           int samples, std::uint64_t seed) {
  NormWeights wt = w;
  wt.s += tau;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Loop r = random_loop(d.T, n, M, L, seed + s);
    r.psi.col(L).setZero();
    const double den = norm_Tas(r, wt);
    if (den > 0.0) worst = std::max(worst, norm_Tas(invert_L(r, d), w) / den);
  }
  if (M > 0) {
    const WorstDenominator wd = worst_denominator(d, L);
    if (std::isfinite(wd.value)) {
      Loop r(d.T, n, M, L);
      r.z_at(wd.row, wd.l) = 1.0;
      worst = std::max(worst, norm_Tas(invert_L(r, d), w) / norm_Tas(r, wt));
    }
  }
  return worst;
}

}  // namespace blorbit
