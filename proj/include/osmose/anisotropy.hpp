#pragma once

#include <array>

#include "osmose/core.hpp"

namespace osmose {

/// Integer lattice offset; dx moves along columns, dy along rows.
struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
};

/// Three lattice vectors summing to zero whose pairs are unimodular bases.
struct Superbase {
  std::array<Offset, 3> e;
};

/// The three undirected stencil edges of one pixel. Each weight is the full
/// pair weight of the +-offset: sum_i weight[i] * e_i e_i^T reconstructs W.
struct StencilWeights {
  std::array<Offset, 3> offsets;
  std::array<double, 3> weights;
};

/// Per-pixel diffusion tensor field with eigenvalues in [epsilon, 1];
/// identity wherever the mask is 0.
class WeightField {
 public:
  WeightField() = default;
  WeightField(int rows, int cols, double epsilon)
      : tensors_(rows, cols), epsilon_(epsilon) {
    for (size_t k = 0; k < tensors_.size(); ++k) tensors_[k] = Sym2::identity();
  }

  int rows() const { return tensors_.rows(); }
  int cols() const { return tensors_.cols(); }
  double epsilon() const { return epsilon_; }

  Sym2& at(int i, int j) { return tensors_.at(i, j); }
  const Sym2& at(int i, int j) const { return tensors_.at(i, j); }
  const Sym2& operator[](size_t k) const { return tensors_[k]; }

 private:
  TensorField tensors_;
  double epsilon_ = 1.0;
};

/// Identity weights everywhere (the isotropic model).
inline WeightField identity_weights(int rows, int cols) { return WeightField(rows, cols, 1.0); }

/// W = epsilon * u u^T + u_perp u_perp^T with u = (cos theta, sin theta) on
/// masked pixels, identity elsewhere. The eigenvalue convention is calibrated
/// against the reference stencil table (see stencil_weights tests).
WeightField build_weight_field(const ScalarField& theta, double epsilon, const MaskField& mask);

/// Selling reduction: returns a superbase that is obtuse with respect to w,
/// i.e. <e_i, w e_j> <= 0 for all i != j. Requires w symmetric positive
/// definite.
Superbase selling_superbase(const Sym2& w);

/// AD-LBR stencil: offsets e_i with weights c_i = -<e_{i+1}^perp, w e_{i+2}^perp>,
/// nonnegative because the offsets are the perps of a w-obtuse superbase
/// (equivalently, the superbase itself is adj(w)-obtuse).
StencilWeights stencil_weights(const Sym2& w);

/// kappa = sqrt(lambda1 / lambda2) >= 1.
double anisotropy_ratio(const Sym2& w);

namespace detail {
/// Runs the Selling iteration from `start`; `iterations`, when given,
/// receives the number of update steps (logarithmic in the anisotropy ratio).
Superbase selling_reduce(const Sym2& m, Superbase start, int* iterations = nullptr);
}

}  // namespace osmose
