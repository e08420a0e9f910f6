#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "blorbit/kernel.hpp"
#include "blorbit/model.hpp"
#include "blorbit/normalform.hpp"

namespace blorbit {

/// The Galerkin-truncated original equation dz/dt = i dH/dconj(z), with the
/// nonlinearity evaluated pseudo-spectrally on a midpoint grid in x (exact for
/// the polynomial integrands). Independent of the polynomial engine.
class OriginalSystem {
 public:
  OriginalSystem(const ModelSpec& spec, const TruncationParams& trunc, int quad_points = 0);

  int modes() const { return modes_; }
  int quad_points() const { return nx_; }
  const std::vector<double>& freqs() const { return freqs_; }
  /// Nonlinear part F of dz/dt = i omega z + F(z).
  void nonlinear_field(std::span<const cplx> z, std::span<cplx> out) const;
  void field(std::span<const cplx> z, std::span<cplx> out) const;
  double energy(std::span<const cplx> z) const;

 private:
  ModelKind kind_;
  int modes_ = 0;
  int nx_ = 0;
  std::vector<double> freqs_;
  std::vector<double> coeffs_;
  std::vector<double> weight_;  // alpha_j (beam) or rho_j sqrt(2/pi) (nls)
  Eigen::MatrixXd S_;           // nx x modes, sin(j x_i)
  double dx_ = 0.0;
};

/// Called after every step with the time and the state.
using StepObserver = std::function<void(double, const std::vector<cplx>&)>;

struct FixedRun {
  std::vector<cplx> endpoint;
  double drift = 0.0;  // max relative deviation of the energy
  /// States at the requested sample times, in order.
  std::vector<std::vector<cplx>> samples;
};

/// One Lawson (integrating-factor) RK4 step of size h.
void lawson_step(const OriginalSystem& sys, std::vector<cplx>& z, double h);

/// `steps` Lawson RK4 steps over [0, T]. Sample times must lie in [0, T].
FixedRun integrate_fixed(const OriginalSystem& sys, std::span<const cplx> z0, double T, int steps,
                         const std::vector<double>& sample_times = {}, const StepObserver& observe = {});

/// Smallest step count the adaptive driver starts from.
int default_steps(const OriginalSystem& sys, double T);

struct IntegrationOptions {
  double drift_tol = 1e-8;
  /// Largest relative endpoint change allowed when the step is halved.
  double halving_tol = 1e-8;
  int min_steps = 0;  // 0: default_steps
  int max_doublings = 8;
};

struct IntegrationResult {
  std::vector<cplx> endpoint;
  double drift = 0.0;
  double halving_change = 0.0;
  int steps = 0;
};

/// Fixed-step Lawson RK4 over [0, T]; the step count doubles until the drift
/// and the step-halving change both meet their tolerances.
IntegrationResult integrate_orbit(const OriginalSystem& sys, std::span<const cplx> z0, double T,
                                  const IntegrationOptions& opts);

/// The normalizing transformation between normalized coordinates y and the
/// original coordinates z: z = Phi3(Phi4(Phi5(y))), each the time -1 flow of
/// its generator.
class CoordinateMap {
 public:
  explicit CoordinateMap(const SeminormalForm& form, int steps = 64);
  std::vector<cplx> pullback(std::span<const cplx> y) const;
  std::vector<cplx> pushforward(std::span<const cplx> z) const;

 private:
  std::vector<CompiledPoly> chi_;  // chi3, chi4, chi5
  int steps_;
};

/// Physical normalized coordinates (eta times the rescaled variables) of a
/// solved orbit at t = 0.
std::vector<cplx> normalized_initial_point(const ReducedActionPoint& p, const RangeContext& ctx);

/// Rescaled-coordinate torus point sqrt(I0) e^{i theta} with zero tail,
/// times eta.
std::vector<cplx> torus_point(const RangeContext& ctx, std::span<const double> theta);

struct ClauseResult {
  std::string id;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  double closure_tol = 1e-6;
  double drift_tol = 1e-8;
  double halving_tol = 1e-8;
  /// Sub-periods T/m tested for m in [2, m_max].
  int m_max = 64;
  double sub_closure_factor = 1e3;
  double s = 1.0;
  double a = 0.0;
  /// Shooting correction of the initial point in the original system.
  bool refine = true;
  int refine_iters = 10;
  /// Singular values below rcond * largest are dropped in the correction.
  double rcond = 1e-8;
  /// Samples for the torus-distance clause.
  int torus_samples = 64;
};

struct OrbitReport {
  double eta = 0.0;
  double T = 0.0;
  int n = 0;
  std::vector<long> k;
  long gcd = 1;
  std::vector<cplx> z0;
  std::vector<cplx> z0_unrefined;
  double closure = 0.0;
  double closure_unrefined = 0.0;
  int refine_iterations = 0;
  double drift = 0.0;
  double halving_change = 0.0;
  int steps = 0;
  double sup_norm = 0.0;        // sup_t ||z(t)||_{a,s}
  double tail_sup = 0.0;        // sup_t ||Pi_{>n} z(t)||_{a,s}
  double torus_distance = 0.0;  // sup_t distance to the torus T(I0), original coordinates
  /// Relative distances ||z(T/m) - z(0)|| / ||z(0)|| for m = 2..m_max.
  std::vector<double> sub_closures;
  double C_amplitude() const { return sup_norm / eta; }
  double C_tail() const { return tail_sup / (eta * eta); }
  double C_torus() const { return torus_distance / (eta * eta); }
  std::vector<ClauseResult> clauses;
  bool all_pass() const;
};

/// Pull back the solved orbit, optionally refine its initial point by
/// shooting, integrate over one period and measure everything the clauses
/// need, then evaluate them without a companion run.
OrbitReport verify_orbit(const ReducedActionPoint& p, const RangeContext& ctx, const CoordinateMap& map,
                         const OriginalSystem& sys, const VerifyOptions& opts);

/// Measurements for an explicit initial point (no refinement).
OrbitReport measure_orbit(std::span<const cplx> z0, const RangeContext& ctx, const CoordinateMap& map,
                          const OriginalSystem& sys, const VerifyOptions& opts);

/// Clauses (i)-(vi) plus the integrator checks. A companion report at eta/2
/// turns the "stable C" clauses into ratio checks.
void evaluate_clauses(OrbitReport& r, const VerifyOptions& opts, const OrbitReport* companion = nullptr);

std::string report_json(const OrbitReport& r);

}  // namespace blorbit
