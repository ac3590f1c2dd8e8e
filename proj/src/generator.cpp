#include "osmose/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace osmose {

SparseOperator SparseOperator::from_triplets(int size, std::vector<Triplet> triplets,
                                             int grid_rows, int grid_cols, double h) {
  if (size < 1) throw std::invalid_argument("SparseOperator: size must be >= 1");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= size || t.col < 0 || t.col >= size)
      throw std::invalid_argument("SparseOperator: triplet index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseOperator op;
  op.size_ = size;
  op.grid_rows_ = grid_rows;
  op.grid_cols_ = grid_cols;
  op.h_ = h;
  op.row_ptr_.assign(static_cast<size_t>(size) + 1, 0);
  op.col_.reserve(triplets.size());
  op.val_.reserve(triplets.size());

  size_t k = 0;
  for (int r = 0; r < size; ++r) {
    while (k < triplets.size() && triplets[k].row == r) {
      const int c = triplets[k].col;
      double v = 0.0;
      while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
        v += triplets[k].value;
        ++k;
      }
      op.col_.push_back(c);
      op.val_.push_back(v);
    }
    op.row_ptr_[r + 1] = static_cast<int>(op.col_.size());
  }
  op.build_fast_path();
  return op;
}

void SparseOperator::build_fast_path() {
  // Entries on diagonals that cover a decent fraction of the rows get a
  // contiguous per-row array; everything else stays in a CSR tail.
  std::map<int, int> offset_count;
  for (int r = 0; r < size_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) ++offset_count[col_[k] - r];

  const int threshold = std::max(64, size_ / 4);
  std::vector<int> banded;
  for (const auto& [off, count] : offset_count)
    if (count >= threshold) banded.push_back(off);

  bands_.clear();
  for (int off : banded) bands_.push_back({off, std::vector<double>(size_, 0.0)});

  tail_row_ptr_.assign(static_cast<size_t>(size_) + 1, 0);
  tail_col_.clear();
  tail_val_.clear();
  for (int r = 0; r < size_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const int off = col_[k] - r;
      auto it = std::lower_bound(banded.begin(), banded.end(), off);
      if (it != banded.end() && *it == off) {
        bands_[static_cast<size_t>(it - banded.begin())].vals[r] = val_[k];
      } else {
        tail_col_.push_back(col_[k]);
        tail_val_.push_back(val_[k]);
      }
    }
    tail_row_ptr_[r + 1] = static_cast<int>(tail_col_.size());
  }

  tail_rows_.clear();
  for (int r = 0; r < size_; ++r)
    if (tail_row_ptr_[r] != tail_row_ptr_[r + 1]) tail_rows_.push_back(r);

  const int g = grid_cols_;
  fused_five_ = g > 1 && banded.size() == 5 && banded[0] == -g && banded[1] == -1 &&
                banded[2] == 0 && banded[3] == 1 && banded[4] == g;
}

void SparseOperator::apply(const double* x, double* y) const {
  const int n = size_;
  if (fused_five_) {
    // Single sweep over the five grid diagonals; absent entries are stored
    // zeros, so only the array bounds need guarding.
    const int g = grid_cols_;
    const double* up = bands_[0].vals.data();
    const double* le = bands_[1].vals.data();
    const double* di = bands_[2].vals.data();
    const double* ri = bands_[3].vals.data();
    const double* dn = bands_[4].vals.data();
    auto row = [&](int r, bool has_up, bool has_left, bool has_right, bool has_down) {
      double s = di[r] * x[r];
      if (has_up) s += up[r] * x[r - g];
      if (has_left) s += le[r] * x[r - 1];
      if (has_right) s += ri[r] * x[r + 1];
      if (has_down) s += dn[r] * x[r + g];
      y[r] = s;
    };
    const int head = std::min(g, n);
    for (int r = 0; r < head; ++r) row(r, false, r > 0, r + 1 < n, r + g < n);
    for (int r = head; r < n - g; ++r)
      y[r] = di[r] * x[r] + up[r] * x[r - g] + le[r] * x[r - 1] + ri[r] * x[r + 1] +
             dn[r] * x[r + g];
    for (int r = std::max(head, n - g); r < n; ++r) row(r, r - g >= 0, r > 0, r + 1 < n, false);
  } else {
    std::fill(y, y + n, 0.0);
    for (const auto& band : bands_) {
      const int off = band.offset;
      const int lo = std::max(0, -off);
      const int hi = std::min(n, n - off);
      const double* bv = band.vals.data();
      const double* xs = x + off;
      for (int r = lo; r < hi; ++r) y[r] += bv[r] * xs[r];
    }
  }
  if (!tail_col_.empty()) {
    for (int r = 0; r < n; ++r) {
      double s = y[r];
      for (int k = tail_row_ptr_[r]; k < tail_row_ptr_[r + 1]; ++k) s += tail_val_[k] * x[tail_col_[k]];
      y[r] = s;
    }
  }
}

std::vector<double> SparseOperator::apply(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != size_) throw std::invalid_argument("SparseOperator::apply: size mismatch");
  std::vector<double> y(x.size());
  apply(x.data(), y.data());
  return y;
}

void SparseOperator::taylor_update(const double* prev, double* next, double* sum, double scale,
                                   double mu, double& next_norm, double& sum_norm) const {
  const int n = size_;

  if (fused_five_) {
    const int g = grid_cols_;
    const double* up = bands_[0].vals.data();
    const double* le = bands_[1].vals.data();
    const double* di = bands_[2].vals.data();
    const double* ri = bands_[3].vals.data();
    const double* dn = bands_[4].vals.data();
    auto guarded_row = [&](int r) {
      double s = di[r] * prev[r];
      if (r - g >= 0) s += up[r] * prev[r - g];
      if (r > 0) s += le[r] * prev[r - 1];
      if (r + 1 < n) s += ri[r] * prev[r + 1];
      if (r + g < n) s += dn[r] * prev[r + g];
      const double t = scale * (s - mu * prev[r]);
      next[r] = t;
      sum[r] += t;
    };
    const int head = std::min(g, n);
    for (int r = 0; r < head; ++r) guarded_row(r);
    // branch-free interior sweep, written so the compiler can vectorise it
    for (int r = head; r < n - g; ++r) {
      const double s = di[r] * prev[r] + up[r] * prev[r - g] + le[r] * prev[r - 1] +
                       ri[r] * prev[r + 1] + dn[r] * prev[r + g];
      const double t = scale * (s - mu * prev[r]);
      next[r] = t;
      sum[r] += t;
    }
    for (int r = std::max(head, n - g); r < n; ++r) guarded_row(r);
    // sparse fix-up for the few rows with entries outside the five bands
    for (int r : tail_rows_) {
      double extra = 0.0;
      for (int k = tail_row_ptr_[r]; k < tail_row_ptr_[r + 1]; ++k)
        extra += tail_val_[k] * prev[tail_col_[k]];
      extra *= scale;
      next[r] += extra;
      sum[r] += extra;
    }
  } else {
    apply(prev, next);
    for (int r = 0; r < n; ++r) {
      const double t = scale * (next[r] - mu * prev[r]);
      next[r] = t;
      sum[r] += t;
    }
  }

  // Norms in a separate unrolled pass; four independent accumulators keep a
  // fixed summation order while letting the adds pipeline.
  double t0 = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0;
  double w0 = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0;
  int r = 0;
  for (; r + 4 <= n; r += 4) {
    t0 += std::abs(next[r]);
    t1 += std::abs(next[r + 1]);
    t2 += std::abs(next[r + 2]);
    t3 += std::abs(next[r + 3]);
    w0 += std::abs(sum[r]);
    w1 += std::abs(sum[r + 1]);
    w2 += std::abs(sum[r + 2]);
    w3 += std::abs(sum[r + 3]);
  }
  for (; r < n; ++r) {
    t0 += std::abs(next[r]);
    w0 += std::abs(sum[r]);
  }
  next_norm = (t0 + t1) + (t2 + t3);
  sum_norm = (w0 + w1) + (w2 + w3);
}

double SparseOperator::trace() const {
  double t = 0.0;
  for (int r = 0; r < size_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      if (col_[k] == r) t += val_[k];
  return t;
}

double SparseOperator::shifted_norm1(double mu) const {
  std::vector<double> colsum(size_, 0.0);
  std::vector<bool> has_diag(size_, false);
  for (int r = 0; r < size_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const double v = col_[k] == r ? val_[k] - mu : val_[k];
      colsum[col_[k]] += std::abs(v);
      if (col_[k] == r) has_diag[r] = true;
    }
  }
  for (int r = 0; r < size_; ++r)
    if (!has_diag[r]) colsum[r] += std::abs(mu);
  double m = 0.0;
  for (double v : colsum) m = std::max(m, v);
  return m;
}

std::vector<double> SparseOperator::column_sums() const {
  std::vector<double> s(size_, 0.0);
  for (int r = 0; r < size_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s[col_[k]] += val_[k];
  return s;
}

double SparseOperator::entry(int row, int col) const {
  for (int k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k)
    if (col_[k] == col) return val_[k];
  return 0.0;
}

void SparseOperator::dump_triplets(std::ostream& out) const {
  for (int r = 0; r < size_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      out << r << ' ' << col_[k] << ' ' << val_[k] << '\n';
}

double edge_drift(const ScalarField& v, int row, int col, Offset e, const MaskField& mask) {
  const int row2 = row + e.dy, col2 = col + e.dx;
  if (row < 0 || row >= v.rows() || col < 0 || col >= v.cols() || row2 < 0 || row2 >= v.rows() ||
      col2 < 0 || col2 >= v.cols())
    throw std::out_of_range("edge_drift: edge endpoint outside the grid");
  if (mask.at(row, col) || mask.at(row2, col2)) return 0.0;
  const double a = v.at(row, col), b = v.at(row2, col2);
  const double h = 1.0;
  return 2.0 * (b - a) / (h * (b + a));
}

SparseOperator assemble(const ScalarField& v, const WeightField& w, const MaskField& mask) {
  const int rows = v.rows(), cols = v.cols();
  if (w.rows() != rows || w.cols() != cols || !mask.same_shape(rows, cols))
    throw std::invalid_argument("assemble: field shape mismatch");
  for (size_t k = 0; k < v.size(); ++k)
    if (!(v[k] > 0.0)) throw std::invalid_argument("assemble: guidance channel must be strictly positive");

  const double h = 1.0;
  const int size = rows * cols;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(size) * 12);

  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const StencilWeights st = stencil_weights(w.at(i, j));
      const int x = linear_index(i, j, cols);
      for (int m = 0; m < 3; ++m) {
        const double c = st.weights[m];
        if (c == 0.0) continue;
        const Offset e = st.offsets[m];
        const int i2 = i + e.dy, j2 = j + e.dx;
        if (i2 < 0 || i2 >= rows || j2 < 0 || j2 >= cols) continue;  // dropped boundary edge
        const int y = linear_index(i2, j2, cols);
        const double delta = edge_drift(v, i, j, e, mask);
        // Four entries per edge; the diagonal contributions are exact
        // negatives of the off-diagonal ones, so columns sum to zero.
        const double off_xy = c * (1.0 / (h * h) - delta / (2.0 * h));
        const double off_yx = c * (1.0 / (h * h) + delta / (2.0 * h));
        trips.push_back({x, y, off_xy});
        trips.push_back({y, y, -off_xy});
        trips.push_back({y, x, off_yx});
        trips.push_back({x, x, -off_yx});
      }
    }
  }
  return SparseOperator::from_triplets(size, std::move(trips), rows, cols, h);
}

SccResult tarjan_scc(const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  SccResult res;
  res.label.assign(n, -1);

  std::vector<int> index(n, -1), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  stack.reserve(n);

  struct Frame {
    int v;
    size_t next_edge;
  };
  std::vector<Frame> call;
  int next_index = 0;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      const int v = f.v;
      if (f.next_edge == 0) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      bool descended = false;
      while (f.next_edge < adjacency[v].size()) {
        const int u = adjacency[v][f.next_edge++];
        if (index[u] == -1) {
          call.push_back({u, 0});
          descended = true;
          break;
        }
        if (on_stack[u]) lowlink[v] = std::min(lowlink[v], index[u]);
      }
      if (descended) continue;
      if (lowlink[v] == index[v]) {
        while (true) {
          const int u = stack.back();
          stack.pop_back();
          on_stack[u] = false;
          res.label[u] = res.count;
          if (u == v) break;
        }
        ++res.count;
      }
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().v;
        lowlink[parent] = std::min(lowlink[parent], lowlink[v]);
      }
    }
  }
  return res;
}

GeneratorReport validate_generator(const SparseOperator& a) {
  GeneratorReport rep;
  rep.size = a.size();

  const auto sums = a.column_sums();
  for (double s : sums) rep.max_column_sum = std::max(rep.max_column_sum, std::abs(s));

  rep.min_off_diagonal = 0.0;
  bool seen_off = false;
  std::vector<std::vector<int>> adj(a.size());
  for (int r = 0; r < a.size(); ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      const int c = a.col_idx()[k];
      if (c == r) continue;
      const double v = a.values()[k];
      if (!seen_off || v < rep.min_off_diagonal) rep.min_off_diagonal = v;
      seen_off = true;
      if (v != 0.0) adj[r].push_back(c);
    }
  }
  rep.scc_count = tarjan_scc(adj).count;
  return rep;
}

double osmosis_energy(const ScalarField& u, const ScalarField& v, const WeightField& w) {
  const int rows = u.rows(), cols = u.cols();
  if (!v.same_shape(rows, cols) || w.rows() != rows || w.cols() != cols)
    throw std::invalid_argument("osmosis_energy: field shape mismatch");
  for (size_t k = 0; k < u.size(); ++k)
    if (!(u[k] > 0.0) || !(v[k] > 0.0))
      throw std::invalid_argument("osmosis_energy: images must be strictly positive");

  ScalarField r(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r.at(i, j) = u.at(i, j) / v.at(i, j);

  const double h = 1.0;
  double energy = 0.0;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double gx = (j + 1 < cols ? r.at(i, j + 1) - r.at(i, j) : r.at(i, j) - r.at(i, j - 1)) / h;
      const double gy = (i + 1 < rows ? r.at(i + 1, j) - r.at(i, j) : r.at(i, j) - r.at(i - 1, j)) / h;
      const Sym2& ww = w.at(i, j);
      energy += h * h * v.at(i, j) *
                (gx * (ww.xx * gx + ww.xy * gy) + gy * (ww.xy * gx + ww.yy * gy));
    }
  }
  return energy;
}

}  // namespace osmose
