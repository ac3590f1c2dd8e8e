#pragma once

#include <iosfwd>
#include <vector>

#include "osmose/anisotropy.hpp"
#include "osmose/core.hpp"

namespace osmose {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Sparse generator of the semi-discrete evolution u' = A u, stored in
/// compressed rows (duplicate triplets summed, explicit zeros kept so the
/// sparsity pattern stays structurally symmetric). Immutable once built;
/// apply() is safe to call concurrently.
class SparseOperator {
 public:
  static SparseOperator from_triplets(int size, std::vector<Triplet> triplets,
                                      int grid_rows = 0, int grid_cols = 0, double h = 1.0);

  int size() const { return size_; }
  int grid_rows() const { return grid_rows_; }
  int grid_cols() const { return grid_cols_; }
  double grid_step() const { return h_; }
  size_t nnz() const { return val_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  void apply(const double* x, double* y) const;
  std::vector<double> apply(const std::vector<double>& x) const;

  /// Hot path for the exponential stepper: next = scale * ((A - mu I) prev),
  /// sum += next, in one sweep; returns the 1-norms of next and of sum.
  void taylor_update(const double* prev, double* next, double* sum, double scale, double mu,
                     double& next_norm, double& sum_norm) const;

  double trace() const;
  /// Matrix 1-norm of A - mu*I (max column abs sum).
  double shifted_norm1(double mu) const;
  std::vector<double> column_sums() const;
  double entry(int row, int col) const;

  /// Text dump, one "row col value" line per stored entry.
  void dump_triplets(std::ostream& out) const;

 private:
  int size_ = 0;
  int grid_rows_ = 0;
  int grid_cols_ = 0;
  double h_ = 1.0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;

  // Diagonal-band split of the entries for a fast sequential matvec; bands
  // hold A[k, k+offset] indexed by row, the remainder stays in CSR form.
  // Generators from a grid mostly populate the five Laplacian diagonals, so
  // that case gets a fused single-sweep kernel.
  struct Band {
    int offset;
    std::vector<double> vals;  // size_, zero where absent
  };
  std::vector<Band> bands_;
  bool fused_five_ = false;  // bands are exactly {-g, -1, 0, 1, g}
  std::vector<int> tail_row_ptr_;
  std::vector<int> tail_col_;
  std::vector<double> tail_val_;
  std::vector<int> tail_rows_;  // rows with a nonempty tail range
  void build_fast_path();
};

/// Directional drift sample along the edge from (row, col) to (row + e.dy,
/// col + e.dx): zero if either endpoint is masked, otherwise the harmonic-mean
/// form 2 (v_y - v_x) / (h (v_y + v_x)), which keeps |h delta| < 2 for any
/// positive guidance.
double edge_drift(const ScalarField& v, int row, int col, Offset e, const MaskField& mask);

/// Assembles the drift-diffusion generator from a positive guidance channel,
/// a weight field and the mask. Edges leaving the grid are dropped (zero-flux
/// boundary); columns sum to zero and off-diagonals are nonnegative by
/// construction.
SparseOperator assemble(const ScalarField& v, const WeightField& w, const MaskField& mask);

struct GeneratorReport {
  double max_column_sum = 0.0;  // max |column sum|
  double min_off_diagonal = 0.0;
  int scc_count = 0;
  int size = 0;
};

GeneratorReport validate_generator(const SparseOperator& a);

struct SccResult {
  int count = 0;
  std::vector<int> label;  // labels in [0, count)
};

/// Iterative Tarjan strongly-connected-components.
SccResult tarjan_scc(const std::vector<std::vector<int>>& adjacency);

/// Discrete anisotropic osmosis energy: quadrature of v * grad(u/v)^T W
/// grad(u/v) with forward differences, one-sided at the last row/column.
double osmosis_energy(const ScalarField& u, const ScalarField& v, const WeightField& w);

}  // namespace osmose
