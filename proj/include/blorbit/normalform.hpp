#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "blorbit/model.hpp"
#include "blorbit/poly.hpp"

namespace blorbit {

/// H composed with the normalizing transformation, split as
/// H_0 + Gbar + Ghat + K (+ resonant leftovers when (NR) fails).
struct SeminormalForm {
  int n = 0;
  int M = 0;
  Eigen::MatrixXd A;  // n x n, A_ij = Gbar_ij
  Eigen::MatrixXd B;  // M x n, B_{j,i} = Gbar_{n+j,i}
  SparsePoly Gbar;    // 1/2 sum Gbar_ij |z_i|^2 |z_j|^2, min(i,j) <= n
  SparsePoly Ghat;    // orders 3..5, tail degree >= 3
  SparsePoly K;       // order 6
  /// Orders 3..5, tail degree <= 2, not action-only. Empty (up to roundoff)
  /// when (NR) holds; for the resonant variant it holds the kept resonant
  /// monomials.
  SparsePoly resonant_extra;
  /// chi^(3), chi^(4), chi^(5).
  std::vector<SparsePoly> generators;
  /// Full transformed Hamiltonian through order six.
  SparsePoly transformed;
  std::vector<double> freqs;
  bool resonant_variant = false;
  int k_tail_cap = 2;
};

std::pair<SparsePoly, SparsePoly> split_tail_degree(const SparsePoly& p, int cut);

/// omega.(j1 - j2) + Omega.(j3 - j4) for a monomial.
double small_denominator(Monomial m, std::span<const double> freqs);

struct HomologicalOptions {
  double zero_tol = 1e-9;
  /// Keep zero-denominator monomials instead of failing (resonant variant).
  bool allow_resonant = false;
};

/// chi with {chi, H_0} + p = resonant part of p. Resonant monomials are
/// collected into `resonant_out` when given.
SparsePoly solve_homological(const SparsePoly& p, const FrequencyTable& freqs,
                             const HomologicalOptions& opts = {}, SparsePoly* resonant_out = nullptr);

struct NormalFormOptions {
  double zero_tol = 1e-9;
  bool resonant_variant = false;
  /// Order-six terms with more tail degree than this are dropped (6 keeps all).
  int k_tail_cap = 2;
};

SeminormalForm seminormalize(const SparsePoly& h, const FrequencyTable& freqs,
                             const NormalFormOptions& opts = {});

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> extract_AB(const SeminormalForm& form);

/// Per-order coefficient audit of the transformed Hamiltonian.
struct AuditRow {
  int order = 0;
  std::size_t terms = 0;
  std::size_t offending = 0;  // tail degree <= 2 and not action-only
  double max_offending = 0.0;
  double max_coeff = 0.0;
  double ratio() const { return max_coeff > 0.0 ? max_offending / max_coeff : 0.0; }
};
std::vector<AuditRow> audit_normal_form(const SeminormalForm& form);

/// max over random points with ||z||_{a,s} <= 0.1 of
/// ||X_chi(z)||_{a,s+d} / ||z||_{a,s}^2.
double empirical_vectorfield_bound(const SparsePoly& chi, double s, double a, double d, int samples,
                                   std::uint64_t seed, double rotation = 0.0);

/// Fit target = c * reference entrywise in least squares; returns (c, max
/// relative entry error after the fit).
std::pair<double, double> scalar_fit(const Eigen::MatrixXd& target, const Eigen::MatrixXd& reference);

}  // namespace blorbit
