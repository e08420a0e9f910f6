#pragma once

#include <Eigen/Dense>
#include <vector>

#include "blorbit/range.hpp"

namespace blorbit {

/// Action of a T-periodic trajectory of the rescaled normal form,
/// int_0^T (I.phi' + i sum z zbar' - H) dt. `constant` holds the closed-form
/// value T (I0.omega_tilde - H(I0)) on the torus, `offset` the spectrally
/// integrated remainder; their sum is the action.
struct ActionValue {
  double constant = 0.0;
  double offset = 0.0;
  double total() const { return constant + offset; }
};

ActionValue action_functional(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx, int N_t = 0);

/// dS(x)[dx] from the equation residuals: the pairing of the direction with
/// (E_J, <R_phi> - E_psi, i E_zbar, -i E_z), E = L x - N(x).
double action_derivative(const Loop& x, const Loop& dx, const Eigen::VectorXd& phi0, const Eigen::VectorXd& dphi0,
                         const RangeContext& ctx);

struct ReducedActionPoint {
  Eigen::VectorXd phi0;
  /// Transverse coordinates on the slice (empty for points not from the slice).
  Eigen::VectorXd theta;
  double S_value = 0.0;
  ActionValue action;
  /// <R_phi> at the range solution; the gradient of S_n is T * grad.
  Eigen::VectorXd grad;
  RangeSolution range;
  int cluster = -1;
  int newton_iterations = 0;
};

ReducedActionPoint reduced_action(const Eigen::VectorXd& phi0, const RangeContext& ctx, const ContractionConfig& cfg,
                                  const Loop* warm = nullptr);

/// Integer unimodular matrix whose first column is k / gcd(k). Time shifts
/// move the first coordinate of U^{-1} phi0 / 2pi, so the remaining n - 1
/// coordinates parametrize the transverse slice.
Eigen::MatrixXi unimodular_completion(const std::vector<long>& k);

/// phi0 = 2 pi U (0, theta).
Eigen::VectorXd slice_point(const Eigen::MatrixXi& U, const Eigen::VectorXd& theta);

/// Cartesian trajectory (sqrt(I) e^{i phi} on the tangential modes, zhat on the
/// tail) as one M' = n + M row loop with harmonics up to L + max|k|.
Loop cartesian_loop(const ReducedActionPoint& p, const RangeContext& ctx);

struct ShiftMatch {
  double shift = 0.0;
  double distance = 0.0;
};

/// min over sigma of ||X - Y(. + sigma)||_{T,a,s}: coarse grid scan of the
/// cross-correlation, then Newton on the correlation peak.
ShiftMatch orbit_distance(const Loop& X, const Loop& Y, const NormWeights& w);

struct KernelOptions {
  int grid_per_dim = 16;
  double newton_tol = 1e-10;
  int max_newton = 12;
  /// Step for finite-difference Hessians on the slice.
  double fd_step = 1e-3;
  /// Loop distance below which two points are the same orbit.
  double same_orbit = 1e-6;
  /// Relative action gap within which distinct orbits share a cluster.
  double cluster_tol = 1e-9;
  ContractionConfig range;
};

struct KernelResult {
  std::vector<ReducedActionPoint> points;  // sorted by S_value
  int clusters = 0;
  int seeds = 0;
  int diverged = 0;
  bool fewer_than_n = false;
};

KernelResult find_critical_points(const RangeContext& ctx, const KernelOptions& opts);

/// Full residual of the periodic-orbit equations including the projected
/// mean: ||L x - N(x)||_{T,a,s} / T plus |<R_phi>|.
double full_residual(const ReducedActionPoint& p, const RangeContext& ctx);

}  // namespace blorbit
