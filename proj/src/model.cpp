#include "blorbit/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "blorbit/error.hpp"

namespace blorbit {

std::string to_string(ModelKind kind) { return kind == ModelKind::beam ? "beam" : "nls"; }

void ModelSpec::validate() const {
  if (coeffs.empty()) throw Error(tags::kConfig, "nonlinearity coefficients must not be empty");
  if (kind == ModelKind::beam) {
    if (m < 0.0) throw Error(tags::kConfig, "beam mass parameter m must be >= 0");
    if (coeffs[0] == 0.0) throw Error(tags::kConfig, "beam cubic coefficient a must be nonzero");
  } else {
    if (smoothing_d < 0.0) throw Error(tags::kConfig, "smoothing order d must be >= 0");
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (rho[j] == 0.0) throw Error(tags::kConfig, "rho_" + std::to_string(j + 1) + " must be nonzero");
    }
  }
}

void TruncationParams::validate() const {
  if (n < 2) throw Error(tags::kConfig, "n must be >= 2");
  if (M < 1) throw Error(tags::kConfig, "M must be >= 1");
  if (L_max < 1) throw Error(tags::kConfig, "Lmax must be >= 1");
  if (s < 0.0 || a_weight < 0.0) throw Error(tags::kConfig, "norm exponents s, aw must be >= 0");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(tags::kConfig, "eta must lie in (0, 1)");
  if (2 * (n + M) > 254) throw Error(tags::kConfig, "too many modes");
}

double FrequencyTable::at(int j) const {
  if (j < 1 || j > modes()) throw Error(tags::kInvalid, "mode index out of range");
  return j <= n() ? omega[j - 1] : Omega[j - n() - 1];
}

std::vector<double> FrequencyTable::all() const {
  std::vector<double> out(omega);
  out.insert(out.end(), Omega.begin(), Omega.end());
  return out;
}

FrequencyTable frequencies(const ModelSpec& spec, const TruncationParams& trunc) {
  spec.validate();
  trunc.validate();
  FrequencyTable t;
  for (int j = 1; j <= trunc.modes(); ++j) {
    const double jj = static_cast<double>(j) * j;
    const double w = spec.kind == ModelKind::beam ? std::sqrt(jj * jj + spec.m) : jj;
    (j <= trunc.n ? t.omega : t.Omega).push_back(w);
  }
  t.growth_const = 1.0;
  t.growth_exp = 2.0;
  return t;
}

std::vector<ResonantCombination> check_nonresonance(const FrequencyTable& freqs, int tail_cutoff,
                                                    int max_order, double zero_tol) {
  const int n = freqs.n();
  if (tail_cutoff > freqs.modes()) {
    throw Error(tags::kInvalid, "tail_cutoff " + std::to_string(tail_cutoff) +
                                    " exceeds stored frequencies (" + std::to_string(freqs.modes()) + ")");
  }
  std::vector<ResonantCombination> found;
  if (max_order <= 0) return found;

  // Tail vectors with |l| <= 2.
  std::vector<std::vector<std::pair<int, int>>> tails{{}};
  for (int a = n + 1; a <= tail_cutoff; ++a) {
    for (int sa : {-2, -1, 1, 2}) tails.push_back({{a, sa}});
    for (int b = a + 1; b <= tail_cutoff; ++b) {
      for (int sa : {-1, 1}) {
        for (int sb : {-1, 1}) tails.push_back({{a, sa}, {b, sb}});
      }
    }
  }

  std::vector<int> k(n, 0);
  for (const auto& l : tails) {
    int l_norm = 0;
    double l_val = 0.0;
    for (auto [mode, c] : l) {
      l_norm += std::abs(c);
      l_val += c * freqs.at(mode);
    }
    const int budget = max_order - l_norm;
    if (budget < 0) continue;
    // Enumerate k with |k|_1 <= budget.
    std::function<void(int, int, double)> rec = [&](int i, int left, double acc) {
      if (i == n) {
        const bool nonzero = l_norm > 0 || std::any_of(k.begin(), k.end(), [](int v) { return v != 0; });
        if (nonzero && std::abs(acc + l_val) < zero_tol) found.push_back({k, l, acc + l_val});
        return;
      }
      for (int c = -left; c <= left; ++c) {
        k[i] = c;
        rec(i + 1, left - std::abs(c), acc + c * freqs.omega[i]);
      }
      k[i] = 0;
    };
    rec(0, budget, 0.0);
  }
  return found;
}

double sine_product_integral(std::span<const int> modes) {
  // prod sin(j_i x) = (2i)^{-r} sum_s (prod s_i) exp(i (s.j) x)
  const int r = static_cast<int>(modes.size());
  if (r == 0) return std::numbers::pi;
  if (r > 12) throw Error(tags::kInvalid, "too many sine factors");
  cplx total{};
  for (unsigned mask = 0; mask < (1u << r); ++mask) {
    long sum = 0;
    int sign = 1;
    for (int i = 0; i < r; ++i) {
      if (mask & (1u << i)) {
        sum -= modes[i];
        sign = -sign;
      } else {
        sum += modes[i];
      }
    }
    // int_0^pi exp(i N x) dx
    cplx integral;
    if (sum == 0) {
      integral = std::numbers::pi;
    } else {
      const double parity = (std::abs(sum) % 2 == 0) ? 1.0 : -1.0;
      integral = (parity - 1.0) / cplx(0.0, static_cast<double>(sum));
    }
    total += static_cast<double>(sign) * integral;
  }
  total /= std::pow(cplx(0.0, 2.0), r);
  return total.real();
}

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double binomial(int nn, int kk) { return factorial(nn) / (factorial(kk) * factorial(nn - kk)); }

// Visit nondecreasing mode sequences of length r from [0, modes).
template <class F>
void for_each_multiset(int modes, int r, F&& visit) {
  std::vector<int> seq(r, 0);
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == r) {
      visit(seq);
      return;
    }
    for (int j = start; j < modes; ++j) {
      seq[pos] = j;
      rec(pos + 1, j);
    }
  };
  rec(0, 0);
}

// r! / prod(multiplicity!) for a sorted sequence.
double multinomial(const std::vector<int>& seq) {
  double denom = 1.0;
  int run = 1;
  for (std::size_t i = 1; i <= seq.size(); ++i) {
    if (i < seq.size() && seq[i] == seq[i - 1]) {
      ++run;
    } else {
      denom *= factorial(run);
      run = 1;
    }
  }
  return factorial(static_cast<int>(seq.size())) / denom;
}

void add_beam_term(SparsePoly& h, const std::vector<double>& alpha, int r, double coeff) {
  const int modes = h.modes();
  for_each_multiset(modes, r, [&](const std::vector<int>& seq) {
    std::vector<int> one_based(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) one_based[i] = seq[i] + 1;
    const double integral = sine_product_integral(one_based);
    if (std::abs(integral) < 1e-13) return;
    double base = coeff * multinomial(seq) * integral;
    for (int j : seq) base *= alpha[j];
    // Group by mode and distribute z / conj z over each mode's multiplicity.
    std::vector<std::pair<int, int>> groups;
    for (int j : seq) {
      if (!groups.empty() && groups.back().first == j) {
        ++groups.back().second;
      } else {
        groups.emplace_back(j, 1);
      }
    }
    std::vector<int> take(groups.size(), 0);
    std::function<void(std::size_t)> rec = [&](std::size_t g) {
      if (g == groups.size()) {
        double c = base;
        std::vector<Var> vars;
        for (std::size_t i = 0; i < groups.size(); ++i) {
          const auto [mode, mult] = groups[i];
          c *= binomial(mult, take[i]);
          for (int a = 0; a < take[i]; ++a) vars.push_back(z_var(mode));
          for (int a = take[i]; a < mult; ++a) vars.push_back(zbar_var(mode));
        }
        h.add(Monomial::from_vars(vars), c);
        return;
      }
      for (int a = 0; a <= groups[g].second; ++a) {
        take[g] = a;
        rec(g + 1);
      }
    };
    rec(0);
  });
}

void add_nls_term(SparsePoly& h, const std::vector<double>& weight, int r, double coeff) {
  const int modes = h.modes();
  std::vector<std::vector<int>> sets;
  for_each_multiset(modes, r, [&](const std::vector<int>& seq) { sets.push_back(seq); });
  std::vector<double> pref(sets.size());
  for (std::size_t a = 0; a < sets.size(); ++a) {
    pref[a] = multinomial(sets[a]);
    for (int j : sets[a]) pref[a] *= weight[j];
  }
  std::vector<int> all(2 * r);
  std::vector<Var> vars(2 * r);
  for (std::size_t a = 0; a < sets.size(); ++a) {
    for (std::size_t b = 0; b < sets.size(); ++b) {
      // Cheap selection rule: the total mode sum parity must vanish mod 2.
      long parity = 0;
      for (int i = 0; i < r; ++i) parity += sets[a][i] + sets[b][i] + 2;
      if (parity % 2 != 0) continue;
      for (int i = 0; i < r; ++i) {
        all[i] = sets[a][i] + 1;
        all[r + i] = sets[b][i] + 1;
        vars[i] = z_var(sets[a][i]);
        vars[r + i] = zbar_var(sets[b][i]);
      }
      const double integral = sine_product_integral(all);
      if (std::abs(integral) < 1e-13) continue;
      h.add(Monomial::from_vars(vars), coeff * pref[a] * pref[b] * integral);
    }
  }
}

}  // namespace

SparsePoly hamiltonian_polynomial(const ModelSpec& spec, const TruncationParams& trunc, int max_order) {
  if (max_order > kMaxDegree || max_order < 2) {
    throw Error(tags::kInvalid, "unsupported order " + std::to_string(max_order) + " (must be 2..6)");
  }
  const FrequencyTable freqs = frequencies(spec, trunc);
  const int modes = trunc.modes();
  SparsePoly h = quadratic_hamiltonian(trunc.n, trunc.M, freqs.all());
  h = SparsePoly(trunc.n, trunc.M, max_order) + h;

  if (spec.kind == ModelKind::beam) {
    // u = sum_j q_j/sqrt(w_j) sqrt(2/pi) sin(jx), q_j = (z_j + conj z_j)/sqrt 2.
    std::vector<double> alpha(modes);
    for (int j = 0; j < modes; ++j) alpha[j] = 1.0 / std::sqrt(std::numbers::pi * freqs.at(j + 1));
    for (std::size_t i = 0; i < spec.coeffs.size(); ++i) {
      const int r = 4 + 2 * static_cast<int>(i);  // g(u) = f_{r-1} u^r / r
      if (r > max_order) break;
      if (spec.coeffs[i] == 0.0) continue;
      add_beam_term(h, alpha, r, spec.coeffs[i] / r);
    }
  } else {
    if (static_cast<int>(spec.rho.size()) < modes) {
      throw Error(tags::kConfig, "rho sequence shorter than n+M (" + std::to_string(spec.rho.size()) + " < " +
                                     std::to_string(modes) + ")");
    }
    // u = sum_j z_j sqrt(2/pi) sin(jx); (Gamma u)_j = rho_j u_j.
    std::vector<double> weight(modes);
    for (int j = 0; j < modes; ++j) weight[j] = spec.rho[j] * std::sqrt(2.0 / std::numbers::pi);
    for (std::size_t i = 0; i < spec.coeffs.size(); ++i) {
      const int r = 2 + static_cast<int>(i);  // p_r s^r, degree 2r
      if (2 * r > max_order) break;
      if (spec.coeffs[i] == 0.0) continue;
      add_nls_term(h, weight, r, spec.coeffs[i]);
    }
  }
  h.prune();
  return h;
}

double smoothing_order(const ModelSpec& spec) { return spec.kind == ModelKind::beam ? 2.0 : spec.smoothing_d; }

double phase_norm(std::span<const cplx> z, double s, double a, int first_mode) {
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double j = static_cast<double>(first_mode) + static_cast<double>(i);
    acc += std::norm(z[i]) * std::pow(j, 2.0 * s) * std::exp(2.0 * j * a);
  }
  return std::sqrt(acc);
}

}  // namespace blorbit
