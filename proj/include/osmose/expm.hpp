#pragma once

#include <cmath>
#include <iosfwd>
#include <utility>
#include <vector>

#include "osmose/generator.hpp"

namespace osmose {

struct StepperConfig {
  double tau = 100.0;
  double tol = std::ldexp(1.0, -53);  // relative backward-error tolerance
  int max_steps = 1;
  double steady_tol = 1e-8;  // relative sup-norm change for early stopping
};

struct EvolutionTrace {
  std::vector<double> mean;      // per step, entry 0 is the initial state
  std::vector<double> min_value;
  std::vector<double> residual;  // relative sup-norm change per performed step
  int steps = 0;
  double final_residual() const { return residual.empty() ? 0.0 : residual.back(); }
};

/// Action of the matrix exponential: exp(tau*A) b by a truncated Taylor
/// polynomial of the trace-shifted matrix, applied over ceil(||tau*B||_1)
/// sub-steps with the backward-error driven truncation rule. Matvec only, no
/// linear solves. `shift` exists for testing the trace-shift invariance.
std::vector<double> expm_action(const SparseOperator& a, const std::vector<double>& b, double tau,
                                double tol, bool shift = true);

/// Dense row-major square matrix, only for small reference computations.
struct DenseMatrix {
  int n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, 0.0) {}
  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
  static DenseMatrix identity(int n);
  static DenseMatrix from_operator(const SparseOperator& op, double scale = 1.0);
  DenseMatrix multiply(const DenseMatrix& other) const;
  std::vector<double> apply(const std::vector<double>& x) const;
  double norm1() const;
};

/// Reference exponential for tests: scaling and squaring with a fixed
/// high-degree Taylor core, accuracy around 1e-13 for the norms used here.
/// Dimension capped at 400.
DenseMatrix dense_expm_reference(const DenseMatrix& m);

/// Repeated exponential stepping u^{k+1} = exp(tau*A) u^k with conservation
/// diagnostics and steady-state early stopping.
std::pair<std::vector<double>, EvolutionTrace> evolve(const SparseOperator& a,
                                                      const std::vector<double>& f,
                                                      const StepperConfig& cfg);

/// CSV export with columns step, mean, min, residual.
void write_trace_csv(const EvolutionTrace& trace, std::ostream& out);

}  // namespace osmose
