#include "blorbit/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "blorbit/error.hpp"

namespace blorbit {

namespace {

std::uint64_t pack(const Var* vars, int deg) {
  std::uint64_t key = static_cast<std::uint64_t>(deg) << 48;
  for (int i = 0; i < deg; ++i) {
    key |= static_cast<std::uint64_t>(vars[i] + 1) << (8 * (5 - i));
  }
  return key;
}

}  // namespace

Monomial Monomial::from_vars(std::span<const Var> vars) {
  if (vars.size() > static_cast<std::size_t>(kMaxDegree)) {
    throw Error(tags::kInvalid, "monomial degree exceeds " + std::to_string(kMaxDegree));
  }
  std::array<Var, kMaxDegree> buf{};
  std::copy(vars.begin(), vars.end(), buf.begin());
  std::sort(buf.begin(), buf.begin() + vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (buf[i] == 0xff) throw Error(tags::kInvalid, "variable index out of range");
  }
  return Monomial(pack(buf.data(), static_cast<int>(vars.size())));
}

Monomial Monomial::from_exponents(std::span<const int> exps) {
  std::vector<Var> vars;
  for (std::size_t v = 0; v < exps.size(); ++v) {
    for (int e = 0; e < exps[v]; ++e) vars.push_back(static_cast<Var>(v));
  }
  return from_vars(vars);
}

std::array<Var, kMaxDegree> Monomial::vars() const {
  std::array<Var, kMaxDegree> out{};
  const int d = degree();
  for (int i = 0; i < d; ++i) out[i] = var(i);
  return out;
}

int Monomial::count(Var v) const {
  int c = 0;
  const int d = degree();
  for (int i = 0; i < d; ++i) c += var(i) == v ? 1 : 0;
  return c;
}

Monomial Monomial::conj() const {
  auto vs = vars();
  const int d = degree();
  for (int i = 0; i < d; ++i) vs[i] = conj_var(vs[i]);
  std::sort(vs.begin(), vs.begin() + d);
  return Monomial(pack(vs.data(), d));
}

int Monomial::tail_degree(int n) const {
  int t = 0;
  const int d = degree();
  for (int i = 0; i < d; ++i) t += mode_of(var(i)) >= n ? 1 : 0;
  return t;
}

Monomial Monomial::times(Monomial other) const {
  const int da = degree();
  const int db = other.degree();
  if (da + db > kMaxDegree) throw Error(tags::kInvalid, "monomial product exceeds max degree");
  std::array<Var, kMaxDegree> out{};
  int i = 0, j = 0, k = 0;
  while (i < da && j < db) {
    const Var a = var(i);
    const Var b = other.var(j);
    if (a <= b) {
      out[k++] = a;
      ++i;
    } else {
      out[k++] = b;
      ++j;
    }
  }
  while (i < da) out[k++] = var(i++);
  while (j < db) out[k++] = other.var(j++);
  return Monomial(pack(out.data(), k));
}

Monomial Monomial::without(Var v) const {
  std::array<Var, kMaxDegree> out{};
  const int d = degree();
  int k = 0;
  bool removed = false;
  for (int i = 0; i < d; ++i) {
    const Var w = var(i);
    if (!removed && w == v) {
      removed = true;
      continue;
    }
    out[k++] = w;
  }
  if (!removed) throw Error(tags::kInvalid, "variable not present in monomial");
  return Monomial(pack(out.data(), k));
}

// ----------------------------------------------------------------------------

SparsePoly::SparsePoly(int n, int M, int max_degree) : n_(n), M_(M), max_degree_(max_degree) {
  if (n < 0 || M < 0 || 2 * (n + M) > 254) throw Error(tags::kInvalid, "mode counts out of range");
  if (max_degree < 0 || max_degree > kMaxDegree) {
    throw Error(tags::kInvalid, "max_degree must lie in [0, 6]");
  }
}

cplx SparsePoly::coeff(Monomial m) const {
  auto it = terms_.find(m.key());
  return it == terms_.end() ? cplx{} : it->second;
}

void SparsePoly::add(Monomial m, cplx c) {
  if (m.degree() > max_degree_ || c == cplx{}) return;
  auto [it, inserted] = terms_.try_emplace(m.key(), c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) terms_.erase(it);
  }
}

void SparsePoly::set(Monomial m, cplx c) {
  if (m.degree() > max_degree_) return;
  if (c == cplx{}) {
    terms_.erase(m.key());
  } else {
    terms_[m.key()] = c;
  }
}

SparsePoly& SparsePoly::operator+=(const SparsePoly& other) {
  if (other.modes() != modes() && !other.empty()) {
    throw Error(tags::kInvalid, "mode-count mismatch in polynomial sum");
  }
  for (const auto& [k, c] : other.terms_) add(Monomial(k), c);
  return *this;
}

SparsePoly& SparsePoly::operator-=(const SparsePoly& other) {
  if (other.modes() != modes() && !other.empty()) {
    throw Error(tags::kInvalid, "mode-count mismatch in polynomial difference");
  }
  for (const auto& [k, c] : other.terms_) add(Monomial(k), -c);
  return *this;
}

SparsePoly& SparsePoly::operator*=(cplx s) {
  if (s == cplx{}) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, c] : terms_) c *= s;
  return *this;
}

void SparsePoly::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

SparsePoly SparsePoly::degree_part(int d) const {
  return filter([d](Monomial m) { return m.degree() == d; });
}

SparsePoly SparsePoly::filter(const std::function<bool(Monomial)>& keep) const {
  SparsePoly out(n_, M_, max_degree_);
  for (const auto& [k, c] : terms_) {
    if (keep(Monomial(k))) out.terms_.emplace(k, c);
  }
  return out;
}

int SparsePoly::min_degree() const {
  int d = kMaxDegree + 1;
  for (const auto& [k, c] : terms_) d = std::min(d, Monomial(k).degree());
  return d;
}

int SparsePoly::top_degree() const {
  int d = -1;
  for (const auto& [k, c] : terms_) d = std::max(d, Monomial(k).degree());
  return d;
}

double SparsePoly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double SparsePoly::max_abs_coeff(int degree) const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) {
    if (Monomial(k).degree() == degree) m = std::max(m, std::abs(c));
  }
  return m;
}

double SparsePoly::reality_defect() const {
  double worst = 0.0;
  for (const auto& [k, c] : terms_) {
    const cplx partner = coeff(Monomial(k).conj());
    worst = std::max(worst, std::abs(c - std::conj(partner)));
  }
  return worst;
}

std::vector<std::pair<Monomial, cplx>> SparsePoly::sorted_terms() const {
  std::vector<std::pair<Monomial, cplx>> out;
  out.reserve(terms_.size());
  for (const auto& [k, c] : terms_) out.emplace_back(Monomial(k), c);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::array<std::vector<int>, 4> SparsePoly::exponent_record(Monomial m) const {
  std::array<std::vector<int>, 4> rec{std::vector<int>(n_, 0), std::vector<int>(n_, 0),
                                      std::vector<int>(M_, 0), std::vector<int>(M_, 0)};
  const int d = m.degree();
  for (int i = 0; i < d; ++i) {
    const Var v = m.var(i);
    const int j = mode_of(v);
    if (j < n_) {
      ++rec[is_conj(v) ? 1 : 0][j];
    } else {
      ++rec[is_conj(v) ? 3 : 2][j - n_];
    }
  }
  return rec;
}

std::vector<std::string> SparsePoly::dump_lines() const {
  std::vector<std::string> lines;
  for (const auto& [m, c] : sorted_terms()) {
    std::ostringstream os;
    os.precision(17);
    const auto rec = exponent_record(m);
    for (int part = 0; part < 4; ++part) {
      if (part) os << '|';
      for (std::size_t i = 0; i < rec[part].size(); ++i) {
        if (i) os << ',';
        os << rec[part][i];
      }
    }
    os << ' ' << c.real() << ' ' << c.imag();
    lines.push_back(os.str());
  }
  return lines;
}

std::string SparsePoly::dump() const {
  std::string out;
  for (const auto& line : dump_lines()) {
    out += line;
    out += '\n';
  }
  return out;
}

SparsePoly quadratic_hamiltonian(int n, int M, std::span<const double> freqs) {
  if (static_cast<int>(freqs.size()) < n + M) throw Error(tags::kInvalid, "frequency table too short");
  SparsePoly h(n, M);
  for (int j = 0; j < n + M; ++j) h.add(Monomial::from_vars({z_var(j), zbar_var(j)}), freqs[j]);
  return h;
}

// ----------------------------------------------------------------------------

SparsePoly poisson_bracket(const SparsePoly& f, const SparsePoly& g, const BracketOptions& opts) {
  if (f.modes() != g.modes() || f.n() != g.n()) {
    throw Error(tags::kInvalid, "mode-count mismatch in Poisson bracket");
  }
  const int max_out = std::min(opts.max_degree, kMaxDegree);
  SparsePoly out(f.n(), f.M(), max_out);
  if (f.empty() || g.empty()) return out;

  // For each variable v: the terms of g differentiated by v.
  struct Partial {
    Monomial rest;
    cplx c;
  };
  std::vector<std::vector<Partial>> by_var(2 * g.modes());
  for (const auto& [k, c] : g.terms()) {
    const Monomial m(k);
    const int d = m.degree();
    for (int i = 0; i < d; ++i) {
      const Var v = m.var(i);
      if (i > 0 && m.var(i - 1) == v) continue;
      by_var[v].push_back({m.without(v), c * static_cast<double>(m.count(v))});
    }
  }

  const cplx I(0.0, 1.0);
  for (const auto& [k, c] : f.terms()) {
    const Monomial m(k);
    const int d = m.degree();
    for (int i = 0; i < d; ++i) {
      const Var v = m.var(i);
      if (i > 0 && m.var(i - 1) == v) continue;
      const auto& partners = by_var[conj_var(v)];
      if (partners.empty()) continue;
      const Monomial fr = m.without(v);
      // i * (d_z f d_zbar g - d_zbar f d_z g)
      const cplx pref = (is_conj(v) ? -I : I) * c * static_cast<double>(m.count(v));
      for (const auto& p : partners) {
        if (fr.degree() + p.rest.degree() > max_out) continue;
        const Monomial prod = fr.times(p.rest);
        if (opts.keep && !opts.keep(prod)) continue;
        out.add(prod, pref * p.c);
      }
    }
  }
  out.prune();
  return out;
}

SparsePoly lie_transform(const SparsePoly& h, const SparsePoly& chi, int order,
                         const BracketOptions& opts) {
  if (order > kMaxDegree) throw Error(tags::kInvalid, "lie_transform order exceeds 6");
  if (!chi.empty() && chi.min_degree() < 3) {
    throw Error(tags::kInvalid, "generating function must have degree >= 3");
  }
  BracketOptions bo = opts;
  bo.max_degree = order;
  SparsePoly result = h.filter([order](Monomial m) { return m.degree() <= order; });
  if (chi.empty()) return result;
  SparsePoly term = result;
  for (int k = 1; !term.empty(); ++k) {
    term = poisson_bracket(chi, term, bo);
    term *= 1.0 / static_cast<double>(k);
    result += term;
  }
  result.prune();
  return result;
}

// ----------------------------------------------------------------------------

CompiledPoly::CompiledPoly(const SparsePoly& p, double scale, int shift) : modes_(p.modes()) {
  const auto terms = p.sorted_terms();
  vars_.reserve(terms.size());
  degrees_.reserve(terms.size());
  coeffs_.reserve(terms.size());
  for (const auto& [m, c] : terms) {
    vars_.push_back(m.vars());
    degrees_.push_back(static_cast<std::uint8_t>(m.degree()));
    coeffs_.push_back(c * std::pow(scale, m.degree() - shift));
  }
}

cplx CompiledPoly::value(std::span<const cplx> x) const {
  cplx total{};
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    cplx v = coeffs_[t];
    const auto& vs = vars_[t];
    for (int i = 0; i < degrees_[t]; ++i) v *= x[vs[i]];
    total += v;
  }
  return total;
}

cplx CompiledPoly::gradient(std::span<const cplx> x, std::span<cplx> grad) const {
  cplx total{};
  std::array<cplx, kMaxDegree + 1> prefix;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    const auto& vs = vars_[t];
    const int d = degrees_[t];
    const cplx c = coeffs_[t];
    prefix[0] = c;
    for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * x[vs[i]];
    total += prefix[d];
    cplx suffix = 1.0;
    for (int i = d - 1; i >= 0; --i) {
      grad[vs[i]] += prefix[i] * suffix;
      suffix *= x[vs[i]];
    }
  }
  return total;
}

void CompiledPoly::gradient_batch(const double* xr, const double* xi, int stride, int count, double* gr,
                                  double* gi, double* vr, double* vi) const {
  constexpr int kChunk = 64;
  alignas(64) double pr[kMaxDegree + 1][kChunk], pi[kMaxDegree + 1][kChunk];
  alignas(64) double sr[kChunk], si[kChunk];
  for (int s0 = 0; s0 < count; s0 += kChunk) {
    const int S = std::min(kChunk, count - s0);
    for (std::size_t t = 0; t < coeffs_.size(); ++t) {
      const auto& vs = vars_[t];
      const int d = degrees_[t];
      const double cr = coeffs_[t].real(), ci = coeffs_[t].imag();
      for (int s = 0; s < S; ++s) {
        pr[0][s] = cr;
        pi[0][s] = ci;
      }
      for (int i = 0; i < d; ++i) {
        const double* ar = xr + vs[i] * stride + s0;
        const double* ai = xi + vs[i] * stride + s0;
        for (int s = 0; s < S; ++s) {
          pr[i + 1][s] = pr[i][s] * ar[s] - pi[i][s] * ai[s];
          pi[i + 1][s] = pr[i][s] * ai[s] + pi[i][s] * ar[s];
        }
      }
      if (vr) {
        for (int s = 0; s < S; ++s) {
          vr[s0 + s] += pr[d][s];
          vi[s0 + s] += pi[d][s];
        }
      }
      for (int s = 0; s < S; ++s) {
        sr[s] = 1.0;
        si[s] = 0.0;
      }
      for (int i = d - 1; i >= 0; --i) {
        const double* ar = xr + vs[i] * stride + s0;
        const double* ai = xi + vs[i] * stride + s0;
        double* outr = gr + vs[i] * stride + s0;
        double* outi = gi + vs[i] * stride + s0;
        for (int s = 0; s < S; ++s) {
          outr[s] += pr[i][s] * sr[s] - pi[i][s] * si[s];
          outi[s] += pr[i][s] * si[s] + pi[i][s] * sr[s];
          const double nr = sr[s] * ar[s] - si[s] * ai[s];
          si[s] = sr[s] * ai[s] + si[s] * ar[s];
          sr[s] = nr;
        }
      }
    }
  }
}

void vector_field(const CompiledPoly& h, std::span<const cplx> point, std::span<cplx> out) {
  const int modes = h.modes();
  std::vector<cplx> grad(2 * modes);
  h.gradient(point, grad);
  const cplx I(0.0, 1.0);
  for (int j = 0; j < modes; ++j) {
    out[z_var(j)] = I * grad[zbar_var(j)];
    out[zbar_var(j)] = -I * grad[z_var(j)];
  }
}

std::vector<cplx> vector_field(const SparsePoly& h, std::span<const cplx> point) {
  if (static_cast<int>(point.size()) != 2 * h.modes()) {
    throw Error(tags::kInvalid, "point dimension must be 2(n+M)");
  }
  std::vector<cplx> out(point.size());
  vector_field(CompiledPoly(h), point, out);
  return out;
}

std::vector<cplx> hamiltonian_flow(const CompiledPoly& chi, std::span<const cplx> point, double t,
                                   int steps) {
  const std::size_t dim = point.size();
  std::vector<cplx> y(point.begin(), point.end());
  if (chi.size() == 0 || t == 0.0) return y;
  std::vector<cplx> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  const double h = t / steps;
  for (int s = 0; s < steps; ++s) {
    vector_field(chi, y, k1);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    vector_field(chi, tmp, k2);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    vector_field(chi, tmp, k3);
    for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
    vector_field(chi, tmp, k4);
    for (std::size_t i = 0; i < dim; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

std::vector<cplx> real_point(std::span<const cplx> z) {
  std::vector<cplx> x(2 * z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    x[2 * j] = z[j];
    x[2 * j + 1] = std::conj(z[j]);
  }
  return x;
}

}  // namespace blorbit
