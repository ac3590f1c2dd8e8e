#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "osmose/core.hpp"
#include "osmose/image.hpp"

namespace osmose {

/// Separable Gaussian blur, kernel truncated at +-ceil(4*sigma) samples and
/// renormalised to unit mass, symmetric boundary reflection. sigma = 0 is the
/// identity.
ScalarField gaussian_convolve(const ScalarField& field, double sigma);

struct EigenPair2 {
  double lambda1 = 0.0;  // lambda1 >= lambda2
  double lambda2 = 0.0;
  std::array<double, 2> e1{1.0, 0.0};
  std::array<double, 2> e2{0.0, 1.0};
};

/// Closed-form eigen-decomposition of a symmetric 2x2 matrix with a
/// deterministic axis pair for (near-)isotropic input.
EigenPair2 eigen_decompose_2x2(const Sym2& t);

/// J_rho = K_rho * (grad u_sigma  x  grad u_sigma), gradients by central
/// differences (one-sided at borders) in the x-right/y-up frame.
TensorField structure_tensor(const ScalarField& channel, double sigma, double rho);

struct LocalStructure {
  ScalarField saliency;     // lambda1 - lambda2 of the pointwise tensor
  ScalarField ballness;     // lambda2
  ScalarField orientation;  // angle of e2 (tangent) in [0, 2pi), x-right/y-up
};

/// Pointwise orientation encoding of the sigma-smoothed channel.
LocalStructure encode(const ScalarField& channel, double sigma);

/// Dense stick voting: every pixel with positive saliency casts
/// curvature-penalised stick votes into its neighbourhood; returns the
/// accumulated tensor field. Orientations are tangents in the x-right/y-up
/// frame; votes are quantised into 32 orientation bins with one precomputed
/// kernel per bin.
TensorField stick_vote(const ScalarField& saliency, const ScalarField& orientation, double scale);

/// Multi-scale, multi-channel orientation estimation robust to the false
/// edges under the mask: saliency is zeroed and orientation randomised on the
/// masked band before voting. Returns the angle of the minor eigenvector of
/// the accumulated field, converted to the image (i,j) frame.
ScalarField estimate_directions(const ImageBuffer& img, const MaskField& mask,
                                const std::vector<double>& scales, double sigma,
                                std::uint64_t seed);

namespace detail {

/// One stick-vote kernel entry: receiver offset (dx right, dy up) and the
/// decayed tensor contribution for a unit-saliency voter.
struct VoteKernelEntry {
  int dx;
  int dy;
  Sym2 tensor;
};

/// Kernel for a voter whose tangent has angle `angle`, truncated where the
/// decay drops below 1e-6 or the aperture exceeds 45 degrees.
std::vector<VoteKernelEntry> stick_kernel(double angle, double scale);

}  // namespace detail

}  // namespace osmose
