#include "blorbit/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "blorbit/error.hpp"

namespace blorbit {

std::pair<SparsePoly, SparsePoly> split_tail_degree(const SparsePoly& p, int cut) {
  const int n = p.n();
  return {p.filter([n, cut](Monomial m) { return m.tail_degree(n) <= cut; }),
          p.filter([n, cut](Monomial m) { return m.tail_degree(n) > cut; })};
}

double small_denominator(Monomial m, std::span<const double> freqs) {
  double d = 0.0;
  const int deg = m.degree();
  for (int i = 0; i < deg; ++i) {
    const Var v = m.var(i);
    d += is_conj(v) ? -freqs[mode_of(v)] : freqs[mode_of(v)];
  }
  return d;
}

namespace {

std::string describe_combination(const SparsePoly& p, Monomial m) {
  const auto rec = p.exponent_record(m);
  std::ostringstream os;
  os << "k=(";
  for (int i = 0; i < p.n(); ++i) os << (i ? "," : "") << rec[0][i] - rec[1][i];
  os << ") l={";
  bool first = true;
  for (int j = 0; j < p.M(); ++j) {
    const int l = rec[2][j] - rec[3][j];
    if (l == 0) continue;
    os << (first ? "" : ",") << (p.n() + j + 1) << ":" << l;
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace

SparsePoly solve_homological(const SparsePoly& p, const FrequencyTable& freqs, const HomologicalOptions& opts,
                             SparsePoly* resonant_out) {
  const std::vector<double> w = freqs.all();
  if (static_cast<int>(w.size()) < p.modes()) throw Error(tags::kInvalid, "frequency table too short");
  SparsePoly chi(p.n(), p.M(), p.max_degree());
  if (resonant_out) *resonant_out = SparsePoly(p.n(), p.M(), p.max_degree());
  const cplx I(0.0, 1.0);
  for (const auto& [m, c] : p.sorted_terms()) {
    if (m.tail_degree(p.n()) > 2) {
      throw Error(tags::kInvalid, "homological equation needs tail degree <= 2");
    }
    if (m.is_action()) {
      if (resonant_out) resonant_out->add(m, c);
      continue;
    }
    const double den = small_denominator(m, w);
    if (std::abs(den) < opts.zero_tol) {
      if (!opts.allow_resonant) {
        throw Error(tags::kNonResonance, "vanishing denominator " + std::to_string(den) + " at " +
                                             describe_combination(p, m));
      }
      if (resonant_out) resonant_out->add(m, c);
      continue;
    }
    chi.add(m, -c / (I * den));
  }
  return chi;
}

SeminormalForm seminormalize(const SparsePoly& h, const FrequencyTable& freqs, const NormalFormOptions& opts) {
  const int n = h.n();
  const int cap = opts.k_tail_cap;
  BracketOptions bo;
  bo.max_degree = kMaxDegree;
  bo.keep = [n, cap](Monomial m) { return m.degree() < kMaxDegree || m.tail_degree(n) <= cap; };

  SparsePoly H = h.filter(bo.keep);
  HomologicalOptions ho{opts.zero_tol, opts.resonant_variant};

  SeminormalForm form;
  form.n = n;
  form.M = h.M();
  form.freqs = freqs.all();
  form.resonant_variant = opts.resonant_variant;
  form.k_tail_cap = cap;
  for (int r = 3; r <= 5; ++r) {
    const auto [low, high] = split_tail_degree(H.degree_part(r), 2);
    SparsePoly chi = solve_homological(low, freqs, ho);
    if (!chi.empty()) H = lie_transform(H, chi, kMaxDegree, bo);
    form.generators.push_back(std::move(chi));
  }
  H.prune();

  form.Gbar = H.filter([n](Monomial m) { return m.degree() == 4 && m.is_action() && m.tail_degree(n) <= 2; });
  form.Ghat = H.filter([n](Monomial m) { return m.degree() >= 3 && m.degree() <= 5 && m.tail_degree(n) >= 3; });
  form.K = H.degree_part(6);
  form.resonant_extra = H.filter([n](Monomial m) {
    return m.degree() >= 3 && m.degree() <= 5 && m.tail_degree(n) <= 2 && !m.is_action();
  });
  form.transformed = std::move(H);
  std::tie(form.A, form.B) = extract_AB(form);
  return form;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> extract_AB(const SeminormalForm& form) {
  const int n = form.n;
  const int M = form.M;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M, n);
  auto action_pair = [](int i, int j) {
    return Monomial::from_vars({z_var(i), zbar_var(i), z_var(j), zbar_var(j)});
  };
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0 * form.Gbar.coeff(action_pair(i, i)).real();
    for (int j = i + 1; j < n; ++j) {
      A(i, j) = A(j, i) = form.Gbar.coeff(action_pair(i, j)).real();
    }
    for (int t = 0; t < M; ++t) B(t, i) = form.Gbar.coeff(action_pair(i, n + t)).real();
  }
  return {A, B};
}

std::vector<AuditRow> audit_normal_form(const SeminormalForm& form) {
  std::vector<AuditRow> rows;
  const int n = form.n;
  for (int r = 3; r <= kMaxDegree; ++r) {
    AuditRow row;
    row.order = r;
    for (const auto& [k, c] : form.transformed.terms()) {
      const Monomial m(k);
      if (m.degree() != r) continue;
      ++row.terms;
      row.max_coeff = std::max(row.max_coeff, std::abs(c));
      if (r <= 5 && m.tail_degree(n) <= 2 && !m.is_action()) {
        ++row.offending;
        row.max_offending = std::max(row.max_offending, std::abs(c));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

double empirical_vectorfield_bound(const SparsePoly& chi, double s, double a, double d, int samples,
                                   std::uint64_t seed, double rotation) {
  if (chi.empty()) return 0.0;
  const int modes = chi.modes();
  const CompiledPoly compiled(chi);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> radius(0.01, 0.1);
  const cplx phase = std::polar(1.0, rotation);
  std::vector<cplx> z(modes), field(2 * modes), zdot(modes);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    for (int j = 0; j < modes; ++j) {
      const double jj = j + 1.0;
      z[j] = cplx(gauss(rng), gauss(rng)) / (std::pow(jj, s) * std::exp(jj * a) * jj);
    }
    const double scale = radius(rng) / phase_norm(z, s, a);
    for (auto& v : z) v *= scale * phase;
    const auto x = real_point(z);
    vector_field(compiled, x, field);
    for (int j = 0; j < modes; ++j) zdot[j] = field[z_var(j)];
    const double nz = phase_norm(z, s, a);
    worst = std::max(worst, phase_norm(zdot, s + d, a) / (nz * nz));
  }
  return worst;
}

std::pair<double, double> scalar_fit(const Eigen::MatrixXd& target, const Eigen::MatrixXd& reference) {
  const double c = (target.array() * reference.array()).sum() / reference.squaredNorm();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double ref = c * reference(i);
    if (ref == 0.0) {
      worst = std::max(worst, std::abs(target(i)));
    } else {
      worst = std::max(worst, std::abs(target(i) - ref) / std::abs(ref));
    }
  }
  return {c, worst};
}

}  // namespace blorbit
