#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qsim/qobj.hpp"
#include "qsim/superop.hpp"

namespace qsim {

using Params = std::vector<double>;
using CoeffFn = std::function<Complex(const Params&, double)>;

struct TdTerm {
  QuantumObject op;
  CoeffFn coeff;
};

/// Constant part plus a list of (operator, scalar coefficient of (params, t))
/// pairs. All parts share kind and dims.
class TimeDependentOperator {
 public:
  TimeDependentOperator() = default;
  TimeDependentOperator(QuantumObject constant);  // implicit: constant operator
  TimeDependentOperator(QuantumObject constant, std::vector<TdTerm> terms);

  void add_term(QuantumObject op, CoeffFn coeff);

  const QuantumObject& constant() const { return constant_; }
  std::span<const TdTerm> terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  Kind kind() const { return constant_.kind(); }
  const Dims& dims() const { return constant_.dims(); }

  /// Materialize constant + sum_j coeff_j(params, t) op_j.
  QuantumObject evaluate(const Params& params, double t) const;

 private:
  QuantumObject constant_;
  std::vector<TdTerm> terms_;
};

inline QuantumObject evaluate_td(const TimeDependentOperator& op, const Params& params,
                                 double t) {
  return op.evaluate(params, t);
}

/// Time-dependent Liouvillian: each Hamiltonian term keeps its coefficient,
/// mapped through -i(spre - spost); dissipators join the constant part.
TimeDependentOperator liouvillian(const TimeDependentOperator& h,
                                  std::span<const QuantumObject> c_ops);

struct SolveOptions {
  enum class Method { AdaptiveRK45, FixedRK4 };
  Method method = Method::AdaptiveRK45;
  double abstol = 1e-8;
  double reltol = 1e-6;
  double dt_fixed = 1e-3;  // FixedRK4 only
  bool store_states = false;
  std::optional<std::vector<double>> saveat;  // defaults to tlist when states are kept
  long max_steps = 10'000'000;
};

struct SolveStats {
  long steps = 0;
  long rejected = 0;
  long rhs_evals = 0;
  std::vector<std::string> warnings;
};

struct SolveResult {
  std::vector<double> times;
  Eigen::MatrixXcd expect;  // n_e_ops x n_times
  std::vector<QuantumObject> states;
  SolveStats stats;
};

/// Integrate the Schrödinger equation i d|psi>/dt = H(t)|psi>.
SolveResult sesolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                    std::span<const double> tlist, std::span<const QuantumObject> e_ops = {},
                    const Params& params = {}, const SolveOptions& options = {});

/// Integrate the Lindblad master equation d vec(rho)/dt = L(t) vec(rho).
/// Accepts a Hamiltonian (plus c_ops) or a ready-made SuperOperator; kets
/// are promoted to projectors.
SolveResult mesolve(const TimeDependentOperator& h_or_l, const QuantumObject& rho0,
                    std::span<const double> tlist, std::span<const QuantumObject> c_ops = {},
                    std::span<const QuantumObject> e_ops = {}, const Params& params = {},
                    const SolveOptions& options = {});

namespace detail {

/// Sparse-matrix sum A0 + sum_j c_j(t) A_j with allocation-free application.
class SparseGenerator {
 public:
  SparseGenerator() = default;
  SparseGenerator(const TimeDependentOperator& op, Complex prefactor, const Params& params);

  /// out = G(t) y
  void apply(double t, const Vector& y, Vector& out) const;
  long size() const { return const_part_.rows(); }
  bool is_constant() const { return terms_.empty(); }

 private:
  SparseMatrix const_part_;
  std::vector<std::pair<SparseMatrix, CoeffFn>> terms_;
  Params params_;
  mutable Vector tmp_;
};

void check_tlist(std::span<const double> tlist);

}  // namespace detail

}  // namespace qsim
