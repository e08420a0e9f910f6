#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "blorbit/model.hpp"
#include "blorbit/normalform.hpp"

namespace blorbit {

/// Data of the amplitude-frequency map needed to place resonant tori.
struct ResonanceContext {
  Eigen::MatrixXd A;       // n x n
  Eigen::MatrixXd B;       // M x n
  Eigen::VectorXd omega;   // tangential
  Eigen::VectorXd Omega;   // tail
  double eta = 0.05;
  double floor_fraction = 0.05;
  /// k = floor(omega T / 2 pi) + k_offset, with k_offset in {0,1}^n. Zero is
  /// the plain integer part; other corners are needed when A is indefinite.
  std::vector<long> k_offset;

  int n() const { return static_cast<int>(omega.size()); }
  int M() const { return static_cast<int>(Omega.size()); }
  /// Mode number (1-based) of tail row j.
  int tail_mode(int j) const { return n() + j + 1; }
  double T_min() const { return 1.0 / (eta * eta); }
  double T_max() const { return 2.0 / (eta * eta); }

  static ResonanceContext from(const SeminormalForm& form, const FrequencyTable& freqs, double eta);
};

struct TorusSelection {
  double eta = 0.0;
  double T = 0.0;
  std::vector<long> k;
  Eigen::VectorXd I0;
  Eigen::VectorXd omega_tilde;
  Eigen::VectorXd Omega_tilde;
  Eigen::VectorXd Omega_hat;
  double delta = 0.0;
  double tau = 0.0;
  /// min over tail j and all l of j^tau |Omega_tilde_j T - 2 pi l|.
  double h2_margin = 0.0;
  std::vector<long> k_offset;
  /// Constancy interval of k(T) holding T, and the good gap T was taken from.
  std::pair<double, double> interval{0.0, 0.0};
  std::pair<double, double> gap{0.0, 0.0};
};

struct BadSet {
  int j = 0;  // mode number
  long l = 0;
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<long> k_of_T(std::span<const double> omega, double T, std::span<const long> offset = {});

/// I0 = (2 pi / (eta^2 T)) A^{-1} (k(T) - omega T / 2pi).
Eigen::VectorXd I0_of_T(const Eigen::MatrixXd& A, const Eigen::VectorXd& omega, double T, double eta,
                        std::span<const long> offset = {});

/// k(T) and I0(T) with the context's offset.
std::vector<long> k_of_T(const ResonanceContext& ctx, double T);
Eigen::VectorXd I0_of_T(const ResonanceContext& ctx, double T);

/// All I0_j >= fraction * max_i I0_i and I0_j > 0.
bool passes_floor(const Eigen::VectorXd& I0, double fraction);

/// Every T in (T_min, T_max] at which some omega_i T / 2 pi is an integer.
std::vector<double> breakpoints(std::span<const double> omega, double eta);

/// Consecutive intervals between the window ends and the breakpoints.
std::vector<std::pair<double, double>> constancy_intervals(std::span<const double> omega, double eta);

/// Omega_hat = Omega - B A^{-1} omega.
Eigen::VectorXd omega_hat(const ResonanceContext& ctx);

/// Omega_tilde at period T (with k = k(T)).
Eigen::VectorXd omega_tilde_tail(const ResonanceContext& ctx, double T);

/// Closed-form bad intervals B_{jl} inside one constancy interval, for tail
/// rows [j_begin, j_end).
std::vector<BadSet> bad_sets(std::pair<double, double> interval, const ResonanceContext& ctx, int j_begin,
                             int j_end, double delta, double tau);

/// Sorted union of the intervals.
std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> iv);

struct MeasureRow {
  double delta = 0.0;
  double measure = 0.0;
  std::size_t intervals = 0;
};

std::vector<MeasureRow> measure_audit(const ResonanceContext& ctx, std::span<const double> deltas, double tau);

/// Merged bad set over the whole window.
std::vector<std::pair<double, double>> window_bad_union(const ResonanceContext& ctx, double delta, double tau);

/// min_j j^tau dist(Omega_tilde_j T, 2 pi Z) evaluated pointwise.
double h2_margin(const ResonanceContext& ctx, double T, double tau);

struct SelectOptions {
  double delta = 1e-2;
  double tau = 1.5;
  double d = 2.0;
  /// Pick T minimizing |I0(T) - target| inside the good gaps instead of the
  /// widest-gap midpoint.
  std::optional<Eigen::VectorXd> target_I0;
  /// Fraction of each good gap trimmed from both ends before the target search.
  double gap_trim = 0.1;
  /// Restrict the search to eta^2 T in [lo, hi] (a sub-window of [1, 2]).
  std::optional<std::pair<double, double>> scaled_window;
  /// Skip constancy intervals whose k has a common divisor.
  bool require_coprime = false;
};

TorusSelection select_torus(const ResonanceContext& ctx, const SelectOptions& opts);

/// Fill the derived frequencies of a selection at T.
TorusSelection make_selection(const ResonanceContext& ctx, double T, double delta, double tau);

long gcd_of(std::span<const long> k);

}  // namespace blorbit
