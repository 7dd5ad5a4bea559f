#pragma once

#include "gwrap/types.hpp"

namespace gwrap {

/// Largest admissible opacity. Keeps log(1 - G) finite everywhere.
inline constexpr double kDefaultAlphaMax = 0.999;

/// Mahalanobis radius beyond which a Gaussian is treated as exactly zero.
inline constexpr double kDefaultSupportSigma = 4.0;

struct Covariance {
  Mat3 sigma;
  Mat3 precision;
};

/// Throws kInvalidArgument if any OrientedGaussian invariant is violated.
void validate(const OrientedGaussian& g, double alpha_max = kDefaultAlphaMax);

/// Sigma = R diag(s^2) R^T and its inverse R diag(s^-2) R^T.
Covariance covariance_of(const OrientedGaussian& g);

/// Squared Mahalanobis distance of x to the Gaussian center.
double mahalanobis_sq(const Mat3& precision, const Vec3& mean, const Vec3& x);

/// alpha * exp(-0.5 (x - mu)^T Sigma^-1 (x - mu)), without support cutoff.
double eval_gaussian(const OrientedGaussian& g, const Vec3& x);

/// Gradient of log(1 - G(x)): G/(1-G) * Sigma^-1 (x - mu).
Vec3 grad_log_one_minus_g(const OrientedGaussian& g, const Vec3& x);

/// tanh(normal_sign) * normal_dir / |normal_dir|. Norm is at most 1.
Vec3 oriented_normal(const OrientedGaussian& g);

/// |diag(s) R^T n| for the unit oriented normal n: the ellipsoid extent along n.
/// Throws kZeroNormal when the oriented normal vanishes.
double normal_scale_along(const OrientedGaussian& g);

}  // namespace gwrap
