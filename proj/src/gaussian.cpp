#include "gwrap/gaussian.hpp"

#include <cmath>
#include <sstream>

#include "gwrap/error.hpp"

namespace gwrap {

void validate(const OrientedGaussian& g, double alpha_max) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "invalid gaussian: " + what);
  };
  if (!g.mean.allFinite()) fail("non-finite mean");
  if (!g.scales.allFinite() || (g.scales.array() <= 0.0).any())
    fail("scales must be positive");
  if (std::abs(g.rotation.norm() - 1.0) > 1e-9) fail("rotation is not a unit quaternion");
  if (!(g.opacity >= 0.0 && g.opacity <= alpha_max)) {
    std::ostringstream os;
    os << "opacity " << g.opacity << " outside [0, " << alpha_max << "]";
    fail(os.str());
  }
  if (!std::isfinite(g.normal_sign)) fail("non-finite normal_sign");
  if (!g.normal_dir.allFinite() || g.normal_dir.norm() <= 0.0) fail("zero normal_dir");
  if (!g.color.allFinite()) fail("non-finite color");
}

Covariance covariance_of(const OrientedGaussian& g) {
  const Mat3 r = g.rotation.toRotationMatrix();
  const Vec3 var = g.scales.cwiseProduct(g.scales);
  Covariance c;
  c.sigma = r * var.asDiagonal() * r.transpose();
  c.precision = r * var.cwiseInverse().asDiagonal() * r.transpose();
  return c;
}

double mahalanobis_sq(const Mat3& precision, const Vec3& mean, const Vec3& x) {
  const Vec3 d = x - mean;
  return d.dot(precision * d);
}

double eval_gaussian(const OrientedGaussian& g, const Vec3& x) {
  const Covariance c = covariance_of(g);
  return g.opacity * std::exp(-0.5 * mahalanobis_sq(c.precision, g.mean, x));
}

Vec3 grad_log_one_minus_g(const OrientedGaussian& g, const Vec3& x) {
  const Covariance c = covariance_of(g);
  const Vec3 d = x - g.mean;
  const Vec3 pd = c.precision * d;
  const double value = g.opacity * std::exp(-0.5 * d.dot(pd));
  return (value / (1.0 - value)) * pd;
}

Vec3 oriented_normal(const OrientedGaussian& g) {
  return std::tanh(g.normal_sign) * g.normal_dir / g.normal_dir.norm();
}

double normal_scale_along(const OrientedGaussian& g) {
  const Vec3 n = oriented_normal(g);
  const double len = n.norm();
  if (len < 1e-9) throw Error(ErrorCode::kZeroNormal, "oriented normal vanishes");
  const Vec3 local = g.rotation.toRotationMatrix().transpose() * (n / len);
  return g.scales.cwiseProduct(local).norm();
}

}  // namespace gwrap
