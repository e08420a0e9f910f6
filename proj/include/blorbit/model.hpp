#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blorbit/poly.hpp"

namespace blorbit {

enum class ModelKind { beam, nls };

std::string to_string(ModelKind kind);

/// Truncated PDE model.
///
/// beam: u_tt + u_xxxx + m u = f(u) with hinged ends, f(u) = a u^3 + f5 u^5 + ...;
///       coeffs = {a, f5, f7, ...}.
/// nls:  H = int |u_x|^2 + P(|Gamma u|^2), P(s) = p2 s^2 + p3 s^3 + ...,
///       (Gamma u)_j = rho_j u_j; coeffs = {p2, p3, ...}.
struct ModelSpec {
  ModelKind kind = ModelKind::beam;
  double m = 0.0;
  std::vector<double> coeffs{1.0};
  std::vector<double> rho;
  double smoothing_d = 2.0;

  void validate() const;
};

struct TruncationParams {
  int n = 2;
  int M = 16;
  int L_max = 64;
  double s = 1.0;
  double a_weight = 0.0;
  double eta = 0.05;

  int modes() const { return n + M; }
  void validate() const;
};

/// Linear frequencies: omega (modes 1..n) and Omega (modes n+1..n+M), plus the
/// growth law omega_j ~ growth_const * j^growth_exp.
struct FrequencyTable {
  std::vector<double> omega;
  std::vector<double> Omega;
  double growth_const = 1.0;
  double growth_exp = 2.0;

  int n() const { return static_cast<int>(omega.size()); }
  int modes() const { return static_cast<int>(omega.size() + Omega.size()); }
  /// Frequency of mode j (1-based).
  double at(int j) const;
  std::vector<double> all() const;
};

FrequencyTable frequencies(const ModelSpec& spec, const TruncationParams& trunc);

/// A vanishing (within tolerance) combination omega.k + Omega.l.
struct ResonantCombination {
  std::vector<int> k;
  /// Sparse tail part: (mode index, integer coefficient).
  std::vector<std::pair<int, int>> l;
  double value = 0.0;
};

/// Exhaustive scan over k in Z^n and tail vectors l supported on modes
/// n+1..tail_cutoff with |l| <= 2, 0 < |k| + |l| <= max_order.
std::vector<ResonantCombination> check_nonresonance(const FrequencyTable& freqs, int tail_cutoff,
                                                    int max_order = 5, double zero_tol = 1e-9);

/// int_0^pi prod_i sin(j_i x) dx, evaluated exactly by sign enumeration.
double sine_product_integral(std::span<const int> modes);

/// H_0 + Taylor expansion of the nonlinearity through `max_order` in the
/// truncated complex coordinates.
SparsePoly hamiltonian_polynomial(const ModelSpec& spec, const TruncationParams& trunc,
                                  int max_order = kMaxDegree);

double smoothing_order(const ModelSpec& spec);

/// Weighted phase-space norm ||w||_{a,s} of a full mode vector (1-based modes).
double phase_norm(std::span<const cplx> z, double s, double a, int first_mode = 1);

}  // namespace blorbit
