#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace blorbit {

using cplx = std::complex<double>;

/// Polynomials never exceed this total degree (the seminormal form stops at
/// order six).
inline constexpr int kMaxDegree = 6;

/// Coefficients below this magnitude are dropped after every arithmetic pass.
inline constexpr double kPruneTol = 1e-14;

/// Variable index: 2*j is z_j, 2*j+1 is conj(z_j), with j the 0-based mode.
using Var = std::uint8_t;

constexpr int mode_of(Var v) { return v >> 1; }
constexpr bool is_conj(Var v) { return (v & 1) != 0; }
constexpr Var conj_var(Var v) { return static_cast<Var>(v ^ 1); }
constexpr Var z_var(int mode) { return static_cast<Var>(2 * mode); }
constexpr Var zbar_var(int mode) { return static_cast<Var>(2 * mode + 1); }

/// A monomial is a sorted multiset of at most kMaxDegree variables, packed into
/// one 64-bit key. Numeric key order is graded lexicographic.
class Monomial {
 public:
  constexpr Monomial() = default;
  explicit constexpr Monomial(std::uint64_t key) : key_(key) {}

  static Monomial from_vars(std::span<const Var> vars);
  static Monomial from_vars(std::initializer_list<Var> vars) {
    return from_vars(std::span<const Var>(vars.begin(), vars.size()));
  }
  /// Monomial prod_j z_j^{a_j} conj(z_j)^{b_j}; exps has 2*modes entries laid
  /// out like Var.
  static Monomial from_exponents(std::span<const int> exps);

  std::uint64_t key() const { return key_; }
  int degree() const { return static_cast<int>(key_ >> 48); }
  Var var(int i) const {
    return static_cast<Var>(((key_ >> (8 * (5 - i))) & 0xff) - 1);
  }
  std::array<Var, kMaxDegree> vars() const;
  int count(Var v) const;

  /// Swap every z with conj(z).
  Monomial conj() const;
  /// Depends on the actions only: equal z and conj(z) exponent per mode.
  bool is_action() const { return conj() == *this; }
  /// Total exponent carried by modes with index >= n (0-based).
  int tail_degree(int n) const;
  Monomial times(Monomial other) const;
  /// Remove one copy of v; v must be present.
  Monomial without(Var v) const;

  friend bool operator==(Monomial a, Monomial b) { return a.key_ == b.key_; }
  friend auto operator<=>(Monomial a, Monomial b) { return a.key_ <=> b.key_; }

 private:
  std::uint64_t key_ = 0;
};

/// Truncated complex polynomial in (z, conj z) over `n` tangential and `M`
/// tail modes.
class SparsePoly {
 public:
  using TermMap = std::unordered_map<std::uint64_t, cplx>;

  SparsePoly() = default;
  SparsePoly(int n, int M, int max_degree = kMaxDegree);

  int n() const { return n_; }
  int M() const { return M_; }
  int modes() const { return n_ + M_; }
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const TermMap& terms() const { return terms_; }

  cplx coeff(Monomial m) const;
  /// Accumulate c onto m; terms beyond max_degree are discarded.
  void add(Monomial m, cplx c);
  void set(Monomial m, cplx c);

  SparsePoly& operator+=(const SparsePoly& other);
  SparsePoly& operator-=(const SparsePoly& other);
  SparsePoly& operator*=(cplx s);
  friend SparsePoly operator+(SparsePoly a, const SparsePoly& b) { return a += b; }
  friend SparsePoly operator-(SparsePoly a, const SparsePoly& b) { return a -= b; }
  friend SparsePoly operator*(SparsePoly a, cplx s) { return a *= s; }

  void prune(double tol = kPruneTol);
  SparsePoly degree_part(int d) const;
  SparsePoly filter(const std::function<bool(Monomial)>& keep) const;
  int min_degree() const;
  int top_degree() const;
  double max_abs_coeff() const;
  double max_abs_coeff(int degree) const;

  /// max |c(m) - conj(c(conj m))| over the support.
  double reality_defect() const;

  std::vector<std::pair<Monomial, cplx>> sorted_terms() const;

  /// One term per line, "j1|j2|j3|j4 re im": exponent lists of x, conj x,
  /// zhat, conj zhat, each comma separated, in graded lexicographic order.
  std::vector<std::string> dump_lines() const;
  std::string dump() const;

  /// Exponent record (j1, j2, j3, j4) of a monomial in this poly's split.
  std::array<std::vector<int>, 4> exponent_record(Monomial m) const;

 private:
  int n_ = 0;
  int M_ = 0;
  int max_degree_ = kMaxDegree;
  TermMap terms_;
};

/// Unperturbed Hamiltonian sum_j omega_j |z_j|^2.
SparsePoly quadratic_hamiltonian(int n, int M, std::span<const double> freqs);

struct BracketOptions {
  int max_degree = kMaxDegree;
  /// Optional filter applied to output monomials (e.g. a tail-degree cap).
  std::function<bool(Monomial)> keep;
};

/// {f,g} = i sum_j (df/dz_j dg/dconj(z_j) - df/dconj(z_j) dg/dz_j).
SparsePoly poisson_bracket(const SparsePoly& f, const SparsePoly& g,
                           const BracketOptions& opts = {});

/// sum_k ad_chi^k h / k!, ad_chi h = {chi, h}, truncated at `order`. This is
/// h composed with the time -1 flow of X_chi.
SparsePoly lie_transform(const SparsePoly& h, const SparsePoly& chi, int order,
                         const BracketOptions& opts = {});

/// Flat, evaluation-friendly copy of a SparsePoly. A point is a vector of 2*modes
/// complex values indexed by Var (conjugate slots are independent inputs).
class CompiledPoly {
 public:
  CompiledPoly() = default;
  explicit CompiledPoly(const SparsePoly& p, double coefficient_scale_per_degree = 1.0,
                        int degree_shift = 0);

  int modes() const { return modes_; }
  std::size_t size() const { return coeffs_.size(); }
  cplx value(std::span<const cplx> x) const;
  /// Adds dp/dx_v into grad[v] and returns the value.
  cplx gradient(std::span<const cplx> x, std::span<cplx> grad) const;
  /// Gradient (and optionally value) at `count` points stored variable-major,
  /// x[v * stride + s], as separate real and imaginary planes. Results are
  /// accumulated into g and val with the same layout.
  void gradient_batch(const double* xr, const double* xi, int stride, int count, double* gr, double* gi,
                      double* vr = nullptr, double* vi = nullptr) const;

 private:
  int modes_ = 0;
  std::vector<std::array<Var, kMaxDegree>> vars_;
  std::vector<std::uint8_t> degrees_;
  std::vector<cplx> coeffs_;
};

/// X_h = (i dh/dconj(z_j), -i dh/dz_j) at `point`, laid out like Var.
std::vector<cplx> vector_field(const SparsePoly& h, std::span<const cplx> point);
void vector_field(const CompiledPoly& h, std::span<const cplx> point, std::span<cplx> out);

/// Integrate the Hamiltonian flow of chi for time t with fixed-step RK4 on the
/// complexified coordinates.
std::vector<cplx> hamiltonian_flow(const CompiledPoly& chi, std::span<const cplx> point,
                                   double t, int steps = 64);

/// Point with independent conjugate slots built from z (slot 2j+1 = conj z_j).
std::vector<cplx> real_point(std::span<const cplx> z);

}  // namespace blorbit
