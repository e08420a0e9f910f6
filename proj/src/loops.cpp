#include "blorbit/loops.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <random>

#include "blorbit/error.hpp"
#include "json.hpp"

namespace blorbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One cached plan per (size, direction), planned on its own aligned buffers
// and reused with copy-in/copy-out.
class FftPlan {
 public:
  FftPlan(int n, int sign) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    plan_ = fftw_plan_dft_1d(n, in_, out_, sign, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  cplx* in() { return reinterpret_cast<cplx*>(in_); }
  const cplx* out() const { return reinterpret_cast<const cplx*>(out_); }
  void run() { fftw_execute(plan_); }
  int size() const { return n_; }

 private:
  int n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

FftPlan& plan_for(int n, int sign) {
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[{n, sign}];
  if (!slot) slot = std::make_unique<FftPlan>(n, sign);
  return *slot;
}

// Harmonics (rows x (2L+1)) -> samples (rows x N).
void synthesize(const Eigen::MatrixXcd& h, int L, int N, Eigen::MatrixXcd& out) {
  out.resize(h.rows(), N);
  FftPlan& p = plan_for(N, FFTW_BACKWARD);
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    cplx* in = p.in();
    std::fill(in, in + N, cplx{});
    for (int l = -L; l <= L; ++l) in[(l % N + N) % N] += h(r, l + L);
    p.run();
    for (int m = 0; m < N; ++m) out(r, m) = p.out()[m];
  }
}

void analyze(const Eigen::MatrixXcd& s, int L, Eigen::MatrixXcd& out) {
  const int N = static_cast<int>(s.cols());
  out.setZero(s.rows(), 2 * L + 1);
  FftPlan& p = plan_for(N, FFTW_FORWARD);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    for (int m = 0; m < N; ++m) p.in()[m] = s(r, m);
    p.run();
    for (int l = -L; l <= L; ++l) out(r, l + L) = p.out()[(l % N + N) % N] / double(N);
  }
}

double tail_weight(const NormWeights& w, int row) {
  const double j = w.first_tail_mode + row;
  return std::pow(j, 2.0 * w.s) * std::exp(2.0 * j * w.a);
}

// sqrt(sum_l f(l) |x_l|^2), with optional tail weights per row.
double block_norm(const Eigen::MatrixXcd& x, int L, const NormWeights* w, bool derivative) {
  double acc = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double wr = w ? tail_weight(*w, static_cast<int>(r)) : 1.0;
    for (int l = -L; l <= L; ++l) {
      const double f = derivative ? kTwoPi * l : 1.0;
      acc += wr * f * f * std::norm(x(r, l + L));
    }
  }
  return std::sqrt(acc);
}

nlohmann::json matrix_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXcd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
  Eigen::MatrixXcd m(rows, cols);
  if (static_cast<int>(j.size()) != rows) throw Error(tags::kConfig, "loop snapshot: wrong row count");
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw Error(tags::kConfig, "loop snapshot: wrong column count");
    for (int c = 0; c < cols; ++c) m(r, c) = cplx(j[r][c][0].get<double>(), j[r][c][1].get<double>());
  }
  return m;
}

}  // namespace

Loop::Loop(double T_, int n_, int M_, int L_) : T(T_), n(n_), M(M_), L(L_) {
  psi.setZero(n, cols());
  J.setZero(n, cols());
  z.setZero(M, cols());
  zbar.setZero(M, cols());
}

Loop& Loop::operator+=(const Loop& o) {
  psi += o.psi;
  J += o.J;
  z += o.z;
  zbar += o.zbar;
  return *this;
}

Loop& Loop::operator-=(const Loop& o) {
  psi -= o.psi;
  J -= o.J;
  z -= o.z;
  zbar -= o.zbar;
  return *this;
}

Loop& Loop::operator*=(double s) {
  psi *= s;
  J *= s;
  z *= s;
  zbar *= s;
  return *this;
}

Loop Loop::resized(int L2) const {
  Loop out(T, n, M, L2);
  const int keep = std::min(L, L2);
  for (int l = -keep; l <= keep; ++l) {
    out.psi.col(l + L2) = psi.col(l + L);
    out.J.col(l + L2) = J.col(l + L);
    out.z.col(l + L2) = z.col(l + L);
    out.zbar.col(l + L2) = zbar.col(l + L);
  }
  return out;
}

Loop Loop::derivative() const {
  Loop out = *this;
  for (int l = -L; l <= L; ++l) {
    const cplx f(0.0, kTwoPi * l / T);
    out.psi.col(l + L) *= f;
    out.J.col(l + L) *= f;
    out.z.col(l + L) *= f;
    out.zbar.col(l + L) *= f;
  }
  return out;
}

Loop Loop::shifted(double sigma) const {
  Loop out = *this;
  for (int l = -L; l <= L; ++l) {
    const cplx f = std::polar(1.0, kTwoPi * l * sigma / T);
    out.psi.col(l + L) *= f;
    out.J.col(l + L) *= f;
    out.z.col(l + L) *= f;
    out.zbar.col(l + L) *= f;
  }
  return out;
}

void Loop::enforce_reality() {
  for (int l = 0; l <= L; ++l) {
    for (int k = 0; k < n; ++k) {
      for (auto* m : {&psi, &J}) {
        const cplx a = (*m)(k, l + L), b = std::conj((*m)(k, -l + L));
        (*m)(k, l + L) = 0.5 * (a + b);
        (*m)(k, -l + L) = std::conj((*m)(k, l + L));
      }
    }
  }
  for (int l = -L; l <= L; ++l) zbar.col(l + L) = z.col(-l + L).conjugate();
}

double Loop::reality_defect() const {
  double d = 0.0;
  for (int l = -L; l <= L; ++l) {
    for (int k = 0; k < n; ++k) {
      d = std::max(d, std::abs(psi(k, l + L) - std::conj(psi(k, -l + L))));
      d = std::max(d, std::abs(J(k, l + L) - std::conj(J(k, -l + L))));
    }
    for (int j = 0; j < M; ++j) d = std::max(d, std::abs(zbar(j, l + L) - std::conj(z(j, -l + L))));
  }
  return d;
}

double Loop::max_abs() const {
  double m = 0.0;
  for (const auto* x : {&psi, &J, &z, &zbar}) {
    if (x->size()) m = std::max(m, x->cwiseAbs().maxCoeff());
  }
  return m;
}

double norm_L2T(const Loop& x, const NormWeights& w) {
  return block_norm(x.psi, x.L, nullptr, false) + block_norm(x.J, x.L, nullptr, false) +
         block_norm(x.z, x.L, &w, false);
}

double norm_Tas(const Loop& x, const NormWeights& w) {
  // T ||x'||: harmonic l contributes (2 pi l / T) T = 2 pi l.
  return norm_L2T(x, w) + block_norm(x.psi, x.L, nullptr, true) + block_norm(x.J, x.L, nullptr, true) +
         block_norm(x.z, x.L, &w, true);
}

int fft_size(int lo) {
  int best = 1;
  while (best < lo) best *= 2;
  for (long a = 1; a < best; a *= 2)
    for (long b = a; b < best; b *= 3)
      for (long c = b; c < best; c *= 5)
        if (c >= lo && c < best) best = static_cast<int>(c);
  return best;
}

LoopSamples to_samples(const Loop& x, int N_t) {
  if (N_t < 2 * x.L + 2) {
    throw Error(tags::kUndersampled, "N_t=" + std::to_string(N_t) + " < 2L+2 with L=" + std::to_string(x.L));
  }
  LoopSamples s;
  s.T = x.T;
  s.N = N_t;
  synthesize(x.psi, x.L, N_t, s.psi);
  synthesize(x.J, x.L, N_t, s.J);
  synthesize(x.z, x.L, N_t, s.z);
  synthesize(x.zbar, x.L, N_t, s.zbar);
  return s;
}

Loop from_samples(const LoopSamples& s, int n, int M, int L) {
  if (s.N < 2 * L + 2) {
    throw Error(tags::kUndersampled, "N_t=" + std::to_string(s.N) + " < 2L+2 with L=" + std::to_string(L));
  }
  Loop x(s.T, n, M, L);
  if (n) {
    analyze(s.psi, L, x.psi);
    analyze(s.J, L, x.J);
  }
  if (M) {
    analyze(s.z, L, x.z);
    analyze(s.zbar, L, x.zbar);
  }
  return x;
}

double product_bound(const Loop& a, const Loop& b, const NormWeights& w) {
  const int L2 = a.L + b.L;
  const int N = fft_size(2 * L2 + 2);
  const LoopSamples sa = to_samples(a, N), sb = to_samples(b, N);
  LoopSamples p = sa;
  p.psi = sa.psi.cwiseProduct(sb.psi);
  p.J = sa.J.cwiseProduct(sb.J);
  p.z = sa.z.cwiseProduct(sb.z);
  p.zbar = sa.zbar.cwiseProduct(sb.zbar);
  const Loop prod = from_samples(p, a.n, a.M, L2);
  const double den = norm_Tas(a, w) * norm_Tas(b, w);
  return den > 0.0 ? norm_Tas(prod, w) / den : 0.0;
}

Loop random_loop(double T, int n, int M, int L, std::uint64_t seed, double decay) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Loop x(T, n, M, L);
  for (int l = -L; l <= L; ++l) {
    const double f = std::pow(1.0 + std::abs(l), -decay - 1.0);
    for (int k = 0; k < n; ++k) {
      x.psi_at(k, l) = f * cplx(g(rng), g(rng));
      x.J_at(k, l) = f * cplx(g(rng), g(rng));
    }
    for (int j = 0; j < M; ++j) x.z_at(j, l) = f * cplx(g(rng), g(rng)) / double((j + 1) * (j + 1));
  }
  x.psi.col(L).setZero();
  x.enforce_reality();
  return x;
}

double product_bound_check(double T, int n, int M, int L, const NormWeights& w, int pairs, std::uint64_t seed) {
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Loop a = random_loop(T, n, M, L, seed + 2 * p);
    const Loop b = random_loop(T, n, M, L, seed + 2 * p + 1);
    worst = std::max(worst, product_bound(a, b, w));
  }
  return worst;
}

double sup_norm(const Loop& x, const NormWeights& w, int N_t) {
  const LoopSamples s = to_samples(x, N_t);
  double worst = 0.0;
  for (int m = 0; m < N_t; ++m) {
    double tail = 0.0;
    for (int j = 0; j < x.M; ++j) tail += tail_weight(w, j) * std::norm(s.z(j, m));
    const double v = (x.n ? s.psi.col(m).norm() + s.J.col(m).norm() : 0.0) + std::sqrt(tail);
    worst = std::max(worst, v);
  }
  return worst;
}

std::string loop_to_json(const Loop& x) {
  nlohmann::json j;
  j["T"] = x.T;
  j["n"] = x.n;
  j["M"] = x.M;
  j["L"] = x.L;
  j["psi"] = matrix_json(x.psi);
  j["J"] = matrix_json(x.J);
  j["z"] = matrix_json(x.z);
  j["zbar"] = matrix_json(x.zbar);
  return j.dump(1);
}

Loop loop_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"T", "n", "M", "L", "psi", "J", "z", "zbar"}) {
    if (!j.contains(key)) throw Error(tags::kConfig, std::string("loop snapshot: missing field '") + key + "'");
  }
  Loop x(j["T"].get<double>(), j["n"].get<int>(), j["M"].get<int>(), j["L"].get<int>());
  x.psi = matrix_from_json(j["psi"], x.n, x.cols());
  x.J = matrix_from_json(j["J"], x.n, x.cols());
  x.z = matrix_from_json(j["z"], x.M, x.cols());
  x.zbar = matrix_from_json(j["zbar"], x.M, x.cols());
  return x;
}

}  // namespace blorbit
