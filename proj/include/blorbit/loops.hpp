#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "blorbit/poly.hpp"

namespace blorbit {

/// T-periodic range component (psi, J, zhat, conj zhat) stored as time
/// harmonics x(t) = sum_{|l| <= L} x_l exp(i 2 pi l t / T). Column l + L holds
/// harmonic l. The conjugate tail is kept as its own table; for a real
/// trajectory zbar_l = conj(z_{-l}).
struct Loop {
  double T = 1.0;
  int n = 0;
  int M = 0;
  int L = 0;
  Eigen::MatrixXcd psi;
  Eigen::MatrixXcd J;
  Eigen::MatrixXcd z;
  Eigen::MatrixXcd zbar;

  Loop() = default;
  Loop(double T, int n, int M, int L);

  int cols() const { return 2 * L + 1; }
  cplx& psi_at(int k, int l) { return psi(k, l + L); }
  cplx& J_at(int k, int l) { return J(k, l + L); }
  cplx& z_at(int j, int l) { return z(j, l + L); }
  cplx& zbar_at(int j, int l) { return zbar(j, l + L); }

  Loop& operator+=(const Loop& o);
  Loop& operator-=(const Loop& o);
  Loop& operator*=(double s);
  friend Loop operator+(Loop a, const Loop& b) { return a += b; }
  friend Loop operator-(Loop a, const Loop& b) { return a -= b; }
  friend Loop operator*(Loop a, double s) { return a *= s; }

  /// Copy with harmonic cutoff L2 (padding with zeros or truncating).
  Loop resized(int L2) const;
  /// Time derivative: harmonic l times i 2 pi l / T.
  Loop derivative() const;
  /// Shift in time: x(t) -> x(t + sigma).
  Loop shifted(double sigma) const;
  /// zbar regenerated as the conjugate of z, psi and J made Hermitian.
  void enforce_reality();
  /// Largest violation of the reality symmetries.
  double reality_defect() const;
  double max_abs() const;
};

/// Norm exponents for the tail weights j^{2s} e^{2ja}; `first_tail_mode` is
/// the 1-based mode number of tail row 0 (n + 1).
struct NormWeights {
  double s = 1.0;
  double a = 0.0;
  int first_tail_mode = 3;
};

/// |psi|_{L2,T} + |J|_{L2,T} + ||z||_{L2,T,a,s}.
double norm_L2T(const Loop& x, const NormWeights& w);
/// ||x||_{L2,T,a,s} + T ||dx/dt||_{L2,T,a,s}.
double norm_Tas(const Loop& x, const NormWeights& w);

/// Time samples t_m = m T / N_t of every component.
struct LoopSamples {
  double T = 1.0;
  int N = 0;
  Eigen::MatrixXcd psi;
  Eigen::MatrixXcd J;
  Eigen::MatrixXcd z;
  Eigen::MatrixXcd zbar;
};

LoopSamples to_samples(const Loop& x, int N_t);
/// Harmonics |l| <= L of sampled data; requires N_t >= 2L + 2.
Loop from_samples(const LoopSamples& s, int n, int M, int L);

/// Smallest N >= lo of the form 2^a 3^b 5^c.
int fft_size(int lo);

/// N_t >= 4L (the dealiasing factor used for nonlinear evaluation).
inline int oversampled_size(int L) { return fft_size(4 * L + 4); }

/// max over `pairs` random loop pairs of ||a * b||_{T,a,s} / (||a|| ||b||),
/// componentwise products of every component pair.
double product_bound_check(double T, int n, int M, int L, const NormWeights& w, int pairs, std::uint64_t seed);

/// Product bound for two given loops.
double product_bound(const Loop& a, const Loop& b, const NormWeights& w);

Loop random_loop(double T, int n, int M, int L, std::uint64_t seed, double decay = 1.0);

/// Max over the sample grid of the pointwise phase-space norm
/// |psi(t)| + |J(t)| + ||z(t)||_{a,s}.
double sup_norm(const Loop& x, const NormWeights& w, int N_t);

std::string loop_to_json(const Loop& x);
Loop loop_from_json(const std::string& text);

}  // namespace blorbit
