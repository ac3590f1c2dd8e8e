#include "osmose/anisotropy.hpp"

#include <cmath>

#include "osmose/structure.hpp"

namespace osmose {

namespace {

double dot_w(const Offset& a, const Sym2& w, const Offset& b) {
  return a.dx * (w.xx * b.dx + w.xy * b.dy) + a.dy * (w.xy * b.dx + w.yy * b.dy);
}

Offset perp(const Offset& e) { return {-e.dy, e.dx}; }

void check_pd(const Sym2& w, const char* who) {
  if (!(w.trace() > 0.0) || !(w.det() > 0.0))
    throw std::invalid_argument(std::string(who) + ": matrix must be positive definite");
}

}  // namespace

WeightField build_weight_field(const ScalarField& theta, double epsilon, const MaskField& mask) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_weight_field: epsilon must be > 0");
  if (!mask.same_shape(theta.rows(), theta.cols()))
    throw std::invalid_argument("build_weight_field: mask shape mismatch");

  WeightField w(theta.rows(), theta.cols(), epsilon);
  for (int i = 0; i < theta.rows(); ++i) {
    for (int j = 0; j < theta.cols(); ++j) {
      if (!mask.at(i, j)) continue;  // identity outside the band
      const double c = std::cos(theta.at(i, j));
      const double s = std::sin(theta.at(i, j));
      Sym2 t = Sym2::outer(c, s) * epsilon;
      t += Sym2::outer(-s, c);
      w.at(i, j) = t;
    }
  }
  return w;
}

namespace detail {

Superbase selling_reduce(const Sym2& m, Superbase sb, int* iterations) {
  check_pd(m, "selling_reduce");
  const double tol = 1e-14 * (std::abs(m.xx) + std::abs(m.yy) + std::abs(m.xy));
  for (int iter = 0; iter < 1000; ++iter) {
    bool obtuse = true;
    for (int i = 0; i < 3 && obtuse; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        if (dot_w(sb.e[i], m, sb.e[j]) > tol) {
          // Selling step: flip e_j, replace the third vector by e_j - e_i.
          const int k = 3 - i - j;
          const Offset ei = sb.e[i], ej = sb.e[j];
          sb.e[j] = {-ej.dx, -ej.dy};
          sb.e[k] = {ej.dx - ei.dx, ej.dy - ei.dy};
          obtuse = false;
          break;
        }
      }
    }
    if (obtuse) {
      if (iterations) *iterations = iter;
      return sb;
    }
  }
  throw std::runtime_error("selling_reduce: no termination (input not positive definite?)");
}

}  // namespace detail

Superbase selling_superbase(const Sym2& w) {
  check_pd(w, "selling_superbase");
  return detail::selling_reduce(w, Superbase{{Offset{1, 0}, Offset{0, 1}, Offset{-1, -1}}});
}

StencilWeights stencil_weights(const Sym2& w) {
  check_pd(w, "stencil_weights");
  // Reduce with respect to the adjugate so the perp-form weights below come
  // out nonnegative; Sum_i c_i e_i e_i^T = adj(adj(w)) = w.
  const Sym2 m = w.adjugate();
  const Superbase sb = selling_superbase(m);

  StencilWeights st;
  for (int i = 0; i < 3; ++i) {
    const Offset p1 = perp(sb.e[(i + 1) % 3]);
    const Offset p2 = perp(sb.e[(i + 2) % 3]);
    double c = -dot_w(p1, w, p2);
    if (c < 0.0) {
      if (c < -1e-14 * (w.trace() + std::abs(w.xy)))
        throw std::runtime_error("stencil_weights: negative weight, reduction failed");
      c = 0.0;
    }
    st.offsets[i] = sb.e[i];
    st.weights[i] = c;
  }
  return st;
}

double anisotropy_ratio(const Sym2& w) {
  const EigenPair2 eig = eigen_decompose_2x2(w);
  if (!(eig.lambda2 > 0.0)) throw std::invalid_argument("anisotropy_ratio: matrix must be positive definite");
  return std::sqrt(eig.lambda1 / eig.lambda2);
}

}  // namespace osmose
