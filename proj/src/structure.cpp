#include "osmose/structure.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace osmose {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Fold an index into [0, n) by symmetric reflection (edge sample repeated).
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[t + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Central differences, one-sided at the borders. gx runs along columns,
// gy along rows counted upward.
void gradients(const ScalarField& u, ScalarField& gx, ScalarField& gy) {
  const int rows = u.rows(), cols = u.cols();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j == 0)
        gx.at(i, j) = u.at(i, 1) - u.at(i, 0);
      else if (j == cols - 1)
        gx.at(i, j) = u.at(i, cols - 1) - u.at(i, cols - 2);
      else
        gx.at(i, j) = 0.5 * (u.at(i, j + 1) - u.at(i, j - 1));

      if (i == 0)
        gy.at(i, j) = u.at(0, j) - u.at(1, j);
      else if (i == rows - 1)
        gy.at(i, j) = u.at(rows - 2, j) - u.at(rows - 1, j);
      else
        gy.at(i, j) = 0.5 * (u.at(i - 1, j) - u.at(i + 1, j));
    }
  }
}

}  // namespace

ScalarField gaussian_convolve(const ScalarField& field, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_convolve: sigma must be >= 0");
  if (sigma == 0.0) return field;

  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int rows = field.rows(), cols = field.cols();

  ScalarField tmp(rows, cols), out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double s = 0.0;
      for (int t = -radius; t <= radius; ++t) s += kernel[t + radius] * field.at(i, reflect(j + t, cols));
      tmp.at(i, j) = s;
    }
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double s = 0.0;
      for (int t = -radius; t <= radius; ++t) s += kernel[t + radius] * tmp.at(reflect(i + t, rows), j);
      out.at(i, j) = s;
    }
  }
  return out;
}

EigenPair2 eigen_decompose_2x2(const Sym2& t) {
  EigenPair2 r;
  const double half_tr = 0.5 * (t.xx + t.yy);
  const double half_diff = 0.5 * (t.xx - t.yy);
  const double disc = std::sqrt(half_diff * half_diff + t.xy * t.xy);
  r.lambda1 = half_tr + disc;
  r.lambda2 = half_tr - disc;

  const double spread = r.lambda1 - r.lambda2;
  if (spread < 1e-12 * (std::abs(r.lambda1) + std::abs(r.lambda2) + 1e-300)) {
    return r;  // isotropic tie-break: e1 = (1,0), e2 = (0,1)
  }
  double vx, vy;
  if (std::abs(t.xy) > 0.0) {
    // Pick the better-conditioned of the two equivalent eigenvector forms.
    if (std::abs(r.lambda1 - t.yy) >= std::abs(r.lambda1 - t.xx)) {
      vx = r.lambda1 - t.yy;
      vy = t.xy;
    } else {
      vx = t.xy;
      vy = r.lambda1 - t.xx;
    }
    const double norm = std::hypot(vx, vy);
    vx /= norm;
    vy /= norm;
  } else if (t.xx >= t.yy) {
    vx = 1.0;
    vy = 0.0;
  } else {
    vx = 0.0;
    vy = 1.0;
  }
  r.e1 = {vx, vy};
  r.e2 = {-vy, vx};
  return r;
}

TensorField structure_tensor(const ScalarField& channel, double sigma, double rho) {
  if (sigma < 0.0 || rho < 0.0) throw std::invalid_argument("structure_tensor: scales must be >= 0");
  const ScalarField smooth = gaussian_convolve(channel, sigma);
  const int rows = channel.rows(), cols = channel.cols();
  ScalarField gx(rows, cols), gy(rows, cols);
  gradients(smooth, gx, gy);

  ScalarField jxx(rows, cols), jxy(rows, cols), jyy(rows, cols);
  for (size_t k = 0; k < jxx.size(); ++k) {
    jxx[k] = gx[k] * gx[k];
    jxy[k] = gx[k] * gy[k];
    jyy[k] = gy[k] * gy[k];
  }
  jxx = gaussian_convolve(jxx, rho);
  jxy = gaussian_convolve(jxy, rho);
  jyy = gaussian_convolve(jyy, rho);

  TensorField out(rows, cols);
  for (size_t k = 0; k < out.size(); ++k) out[k] = {jxx[k], jxy[k], jyy[k]};
  return out;
}

LocalStructure encode(const ScalarField& channel, double sigma) {
  const ScalarField smooth = gaussian_convolve(channel, sigma);
  const int rows = channel.rows(), cols = channel.cols();
  ScalarField gx(rows, cols), gy(rows, cols);
  gradients(smooth, gx, gy);

  LocalStructure out{ScalarField(rows, cols), ScalarField(rows, cols), ScalarField(rows, cols)};
  for (size_t k = 0; k < gx.size(); ++k) {
    const double g2 = gx[k] * gx[k] + gy[k] * gy[k];
    // The pointwise tensor g g^T is rank one: lambda1 = |g|^2 along g,
    // lambda2 = 0 along the tangent (-gy, gx).
    out.saliency[k] = g2;
    out.ballness[k] = 0.0;
    double angle;
    if (g2 > 0.0) {
      angle = std::atan2(gx[k], -gy[k]);  // angle of (-gy, gx)
    } else {
      angle = std::atan2(1.0, 0.0);  // tie-break tangent e2 = (0,1)
    }
    if (angle < 0.0) angle += kTwoPi;
    if (angle >= kTwoPi) angle = 0.0;
    out.orientation[k] = angle;
  }
  return out;
}

namespace detail {

std::vector<VoteKernelEntry> stick_kernel(double angle, double scale) {
  const double tx = std::cos(angle), ty = std::sin(angle);
  // Curvature penalty from the classical decay profile.
  double b = -16.0 * std::log(0.1) * (scale - 1.0) / (M_PI * M_PI);
  b = std::max(b, 0.0);
  const int radius = static_cast<int>(std::ceil(scale * std::sqrt(-std::log(1e-6))));

  std::vector<VoteKernelEntry> kernel;
  kernel.reserve(static_cast<size_t>(2 * radius + 1) * (2 * radius + 1) / 2);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx == 0 && dy == 0) {
        kernel.push_back({0, 0, Sym2::outer(tx, ty)});
        continue;
      }
      const double dist = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
      // Signed angle from the (undirected) tangent to the receiver, folded
      // into [-pi/2, pi/2].
      double psi = std::atan2(tx * dy - ty * dx, tx * dx + ty * dy);
      if (psi > M_PI / 2) psi -= M_PI;
      if (psi < -M_PI / 2) psi += M_PI;
      const double phi = std::abs(psi);
      // Votes outside the 45 degree aperture vanish. The slack keeps lattice
      // diagonals sitting exactly on the boundary in, whatever the rounding.
      if (phi > M_PI / 4 + 1e-9) continue;

      const double arc = phi < 1e-12 ? dist : dist * phi / std::sin(phi);
      const double curv = 2.0 * std::sin(phi) / dist;
      // The cos^24(2 psi) window concentrates votes around the tangent
      // corridor; without it, receivers whose corridor is interrupted (the
      // masked band) accumulate rotated votes until the normal wins.
      const double window = std::pow(std::cos(2.0 * psi), 24);
      const double decay =
          std::exp(-(arc * arc + b * curv * curv) / (scale * scale)) * window;
      if (decay < 1e-6) continue;

      // Received tangent: the voter tangent rotated by 2*psi toward the receiver.
      const double c2 = std::cos(2.0 * psi), s2 = std::sin(2.0 * psi);
      const double nx = c2 * tx - s2 * ty;
      const double ny = s2 * tx + c2 * ty;
      kernel.push_back({dx, dy, Sym2::outer(nx, ny) * decay});
    }
  }
  return kernel;
}

}  // namespace detail

TensorField stick_vote(const ScalarField& saliency, const ScalarField& orientation, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("stick_vote: scale must be > 0");
  if (saliency.rows() != orientation.rows() || saliency.cols() != orientation.cols())
    throw std::invalid_argument("stick_vote: field shape mismatch");

  constexpr int kBins = 32;
  std::vector<std::vector<detail::VoteKernelEntry>> kernels(kBins);
  for (int bin = 0; bin < kBins; ++bin)
    kernels[bin] = detail::stick_kernel(bin * M_PI / kBins, scale);

  const int rows = saliency.rows(), cols = saliency.cols();
  TensorField acc(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double s = saliency.at(i, j);
      if (!(s > 0.0)) continue;
      double theta = std::fmod(orientation.at(i, j), M_PI);
      if (theta < 0.0) theta += M_PI;
      const int bin = static_cast<int>(std::lround(theta * kBins / M_PI)) % kBins;
      for (const auto& entry : kernels[bin]) {
        const int qi = i - entry.dy;  // y counts upward, rows count downward
        const int qj = j + entry.dx;
        if (qi < 0 || qi >= rows || qj < 0 || qj >= cols) continue;
        acc.at(qi, qj) += entry.tensor * s;
      }
    }
  }
  return acc;
}

ScalarField estimate_directions(const ImageBuffer& img, const MaskField& mask,
                                const std::vector<double>& scales, double sigma,
                                std::uint64_t seed) {
  if (scales.empty()) throw std::invalid_argument("estimate_directions: need at least one scale");
  if (!mask.same_shape(img.rows(), img.cols()))
    throw std::invalid_argument("estimate_directions: mask shape mismatch");

  const int rows = img.rows(), cols = img.cols();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);

  TensorField acc(rows, cols);
  for (int c = 0; c < img.channels(); ++c) {
    LocalStructure enc = encode(img.channel(c), sigma);
    // The random field is drawn for every pixel so the stream does not depend
    // on the mask content.
    for (size_t k = 0; k < enc.saliency.size(); ++k) {
      const double r = uniform(rng);
      if (mask[k]) {
        enc.saliency[k] = 0.0;
        enc.orientation[k] = r;
      }
    }
    for (double s : scales) acc += stick_vote(enc.saliency, enc.orientation, s);
  }

  ScalarField theta(rows, cols);
  for (size_t k = 0; k < acc.size(); ++k) {
    const EigenPair2 eig = eigen_decompose_2x2(acc[k]);
    // xy -> ij frame: vertical axis flip.
    double a = -std::atan2(eig.e2[1], eig.e2[0]);
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    theta[k] = a;
  }
  return theta;
}

}  // namespace osmose
