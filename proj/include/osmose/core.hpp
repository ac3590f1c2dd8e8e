#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace osmose {

/// Row-major linear pixel index: k = row * cols + col.
inline int linear_index(int row, int col, int cols) { return row * cols + col; }

inline int index_row(int k, int cols) { return k / cols; }
inline int index_col(int k, int cols) { return k % cols; }

/// Symmetric 2x2 matrix. The first coordinate runs along columns (x),
/// the second along rows (y); all tensor-valued fields share this frame.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Sym2 identity() { return {1.0, 0.0, 1.0}; }

  /// Rank-one tensor v v^T.
  static Sym2 outer(double vx, double vy) { return {vx * vx, vx * vy, vy * vy}; }

  Sym2& operator+=(const Sym2& o) {
    xx += o.xx;
    xy += o.xy;
    yy += o.yy;
    return *this;
  }

  Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }

  /// Adjugate: for 2x2, adj(W) = det(W) * inv(W), entrywise [yy, -xy; -xy, xx].
  Sym2 adjugate() const { return {yy, -xy, xx}; }
};

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("ScalarField: bad shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return v_.size(); }

  double& at(int i, int j) { return v_[static_cast<size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return v_[static_cast<size_t>(i) * cols_ + j]; }

  double& operator[](size_t k) { return v_[k]; }
  double operator[](size_t k) const { return v_[k]; }

  const std::vector<double>& data() const { return v_; }
  std::vector<double>& data() { return v_; }

  bool same_shape(int rows, int cols) const { return rows_ == rows && cols_ == cols; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

class TensorField {
 public:
  TensorField() = default;
  TensorField(int rows, int cols)
      : rows_(rows), cols_(cols), t_(static_cast<size_t>(rows) * cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("TensorField: bad shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Sym2& at(int i, int j) { return t_[static_cast<size_t>(i) * cols_ + j]; }
  const Sym2& at(int i, int j) const { return t_[static_cast<size_t>(i) * cols_ + j]; }

  Sym2& operator[](size_t k) { return t_[k]; }
  const Sym2& operator[](size_t k) const { return t_[k]; }

  size_t size() const { return t_.size(); }

  TensorField& operator+=(const TensorField& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("TensorField: shape mismatch");
    for (size_t k = 0; k < t_.size(); ++k) t_[k] += o.t_[k];
    return *this;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Sym2> t_;
};

/// Binary indicator of the inpainting band (1 inside, 0 elsewhere).
class MaskField {
 public:
  MaskField() = default;
  MaskField(int rows, int cols, std::uint8_t fill = 0)
      : rows_(rows), cols_(cols), m_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("MaskField: bad shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  std::uint8_t& at(int i, int j) { return m_[static_cast<size_t>(i) * cols_ + j]; }
  std::uint8_t at(int i, int j) const { return m_[static_cast<size_t>(i) * cols_ + j]; }

  std::uint8_t operator[](size_t k) const { return m_[k]; }
  std::uint8_t& operator[](size_t k) { return m_[k]; }

  size_t size() const { return m_.size(); }

  size_t count() const {
    size_t n = 0;
    for (auto v : m_) n += v;
    return n;
  }

  bool same_shape(int rows, int cols) const { return rows_ == rows && cols_ == cols; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> m_;
};

}  // namespace osmose
