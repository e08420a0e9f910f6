#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "blorbit/loops.hpp"
#include "blorbit/normalform.hpp"
#include "blorbit/resonance.hpp"

namespace blorbit {

/// Diagonalized data of the linear operator
/// L(psi, J, w) = (J', psi' - eta^2 A J, w' - i Omega_tilde w).
struct LinearSolveData {
  Eigen::VectorXd lambda;    // eigenvalues of A
  Eigen::MatrixXd E;         // orthonormal eigenvectors (columns)
  Eigen::MatrixXd A;
  Eigen::VectorXd Omega_tilde;
  double T = 1.0;
  double eta = 0.05;
  /// Smallest allowed |2 pi l - Omega_tilde_j T|.
  double guard = 0.0;

  static LinearSolveData make(const Eigen::MatrixXd& A, const Eigen::VectorXd& Omega_tilde, double T, double eta,
                              double guard);
};

/// Right-hand side slots: rhs.psi is the J' equation, rhs.J the psi' equation.
Loop apply_L(const Loop& x, const LinearSolveData& data);
Loop invert_L(const Loop& rhs, const LinearSolveData& data);

/// Dense matrix of L on the discretized range space (psi_0 removed), in the
/// unknown order psi (l != 0), J, z, zbar; used as an oracle.
Eigen::MatrixXcd dense_L(const LinearSolveData& data, int n, int M, int L);
Eigen::VectorXcd pack_range(const Loop& x, bool drop_psi_mean);
Loop unpack_range(const Eigen::VectorXcd& v, double T, int n, int M, int L, bool psi_mean_dropped);

struct RangeOptions {
  int L_min = 64;
  /// Harmonics kept beyond the largest forcing harmonic of the perturbation.
  int L_margin = 16;
  int L_cap = 1 << 15;
  NormWeights weights;
  double guard = 0.0;  // defaults to the selection's delta / (n + M)^tau
  /// Include tail-degree >= 3 terms (Ghat) in the perturbation.
  bool include_ghat = true;
};

/// Everything needed to evaluate the nonlinear part and solve the range
/// equation at one selected torus.
struct RangeContext {
  int n = 0;
  int M = 0;
  double eta = 0.0;
  double T = 0.0;
  std::vector<long> k;
  Eigen::VectorXd I0;
  Eigen::VectorXd omega_tilde;
  Eigen::VectorXd Omega_tilde;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  LinearSolveData lin;
  /// Perturbation W = Ghat + K (+ resonant leftovers), compiled with the
  /// rescaling factor eta^{deg - 2}.
  SparsePoly W_poly;
  CompiledPoly W;
  /// Value of the action-only part of the rescaled normal form at I0:
  /// omega.I0 + eta^2/2 A I0.I0.
  double H_I0 = 0.0;
  NormWeights weights;
  int L = 0;
  int N_t = 0;
  /// Largest harmonic forced directly by W on the unperturbed torus.
  int forcing_harmonic = 0;

  static RangeContext build(const SeminormalForm& form, const TorusSelection& sel, const RangeOptions& opts);
};

/// Trajectory samples of the full rescaled solution for a range component.
struct TrajectorySamples {
  int N = 0;
  Eigen::MatrixXd phi;    // n x N
  Eigen::MatrixXd I;      // n x N
  Eigen::MatrixXcd z;     // M x N
  Eigen::MatrixXcd zbar;  // M x N
};

TrajectorySamples trajectory(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx, int N_t);

struct NResult {
  Loop rhs;              // (R_phi - <R_phi>, R_I, R_z, R_zbar) harmonics
  Eigen::VectorXd mean;  // <R_phi>
};

/// Nonlinear part of the periodic-orbit equations at (x, phi0).
NResult eval_N(const Loop& x, const Eigen::VectorXd& phi0, const RangeContext& ctx);

struct ContractionConfig {
  double ball_radius = 0.0;  // 0: ten times the norm of the first iterate
  double tol = 1e-12;        // relative to the iterate norm
  int max_iters = 200;
};

struct RangeSolution {
  Loop zeta;
  Eigen::VectorXd mean;  // <R_phi> at the fixed point
  std::vector<double> residuals;
  std::vector<double> factors;
  double contraction = 0.0;  // largest measured factor before round-off
  double ball_radius = 0.0;
  int iterations = 0;
  bool converged = false;
};

RangeSolution solve_range(const Eigen::VectorXd& phi0, const RangeContext& ctx, const ContractionConfig& cfg,
                          const Loop* initial = nullptr);

/// ||invert_L(r)||_{T,a,s} / ||r||_{T,a,s+tau} maximized over random right
/// hand sides plus the single worst (j, l) denominator.
double operator_norm_probe(const LinearSolveData& data, int n, int M, int L, const NormWeights& w, double tau,
                           int samples, std::uint64_t seed);

/// Smallest |2 pi l - Omega_tilde_j T| over l with |l| <= L, and where.
struct WorstDenominator {
  int row = 0;
  int l = 0;
  double value = 0.0;
};
WorstDenominator worst_denominator(const LinearSolveData& data, int L);

}  // namespace blorbit
