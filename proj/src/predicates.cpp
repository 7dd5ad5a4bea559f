#include "predicates.hpp"

#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

// Double-precision determinants with a static error filter, falling back to
// exact rational arithmetic when the filter cannot certify the sign. The
// expansions and bounds follow the usual lifted-determinant formulation
// evaluated relative to the last argument.

namespace gwrap::detail {
namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = 0x1.0p-53;
constexpr double kOrientBound = (7.0 + 56.0 * kEps) * kEps;
constexpr double kInsphereBound = (16.0 + 224.0 * kEps) * kEps;

template <typename T>
T orient_det(const T& adx, const T& ady, const T& adz, const T& bdx, const T& bdy, const T& bdz,
             const T& cdx, const T& cdy, const T& cdz) {
  return adx * (bdy * cdz - bdz * cdy) + bdx * (cdy * adz - cdz * ady) +
         cdx * (ady * bdz - adz * bdy);
}

template <typename T>
T insphere_det(const T& aex, const T& aey, const T& aez, const T& bex, const T& bey,
               const T& bez, const T& cex, const T& cey, const T& cez, const T& dex,
               const T& dey, const T& dez) {
  const T ab = aex * bey - bex * aey;
  const T bc = bex * cey - cex * bey;
  const T cd = cex * dey - dex * cey;
  const T da = dex * aey - aex * dey;
  const T ac = aex * cey - cex * aey;
  const T bd = bex * dey - dex * bey;
  const T abc = aez * bc - bez * ac + cez * ab;
  const T bcd = bez * cd - cez * bd + dez * bc;
  const T cda = cez * da + dez * ac + aez * cd;
  const T dab = dez * ab + aez * bd + bez * da;
  const T alift = aex * aex + aey * aey + aez * aez;
  const T blift = bex * bex + bey * bey + bez * bez;
  const T clift = cex * cex + cey * cey + cez * cez;
  const T dlift = dex * dex + dey * dey + dez * dez;
  return (dlift * abc - clift * dab) + (blift * cda - alift * bcd);
}

template <typename T>
int sign(const T& v) {
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

}  // namespace

int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  // Computed as the classic det[a - d, b - d, c - d], which has the opposite sign.
  const double adx = a.x() - d.x(), ady = a.y() - d.y(), adz = a.z() - d.z();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y(), bdz = b.z() - d.z();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y(), cdz = c.z() - d.z();
  const double det = orient_det(adx, ady, adz, bdx, bdy, bdz, cdx, cdy, cdz);
  const double permanent = (std::abs(bdx * cdy) + std::abs(cdx * bdy)) * std::abs(adz) +
                           (std::abs(cdx * ady) + std::abs(adx * cdy)) * std::abs(bdz) +
                           (std::abs(adx * bdy) + std::abs(bdx * ady)) * std::abs(cdz);
  if (std::abs(det) > kOrientBound * permanent) return -sign(det);

  auto r = [](double v) { return Rational(v); };
  const Rational dx = r(d.x()), dy = r(d.y()), dz = r(d.z());
  const Rational exact =
      orient_det<Rational>(r(a.x()) - dx, r(a.y()) - dy, r(a.z()) - dz, r(b.x()) - dx,
                           r(b.y()) - dy, r(b.z()) - dz, r(c.x()) - dx, r(c.y()) - dy,
                           r(c.z()) - dz);
  return -sign(exact);
}

int insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& e) {
  const double aex = a.x() - e.x(), aey = a.y() - e.y(), aez = a.z() - e.z();
  const double bex = b.x() - e.x(), bey = b.y() - e.y(), bez = b.z() - e.z();
  const double cex = c.x() - e.x(), cey = c.y() - e.y(), cez = c.z() - e.z();
  const double dex = d.x() - e.x(), dey = d.y() - e.y(), dez = d.z() - e.z();
  const double det = insphere_det(aex, aey, aez, bex, bey, bez, cex, cey, cez, dex, dey, dez);

  const double aexbey = std::abs(aex * bey), bexaey = std::abs(bex * aey);
  const double bexcey = std::abs(bex * cey), cexbey = std::abs(cex * bey);
  const double cexdey = std::abs(cex * dey), dexcey = std::abs(dex * cey);
  const double dexaey = std::abs(dex * aey), aexdey = std::abs(aex * dey);
  const double aexcey = std::abs(aex * cey), cexaey = std::abs(cex * aey);
  const double bexdey = std::abs(bex * dey), dexbey = std::abs(dex * bey);
  const double alift = aex * aex + aey * aey + aez * aez;
  const double blift = bex * bex + bey * bey + bez * bez;
  const double clift = cex * cex + cey * cey + cez * cez;
  const double dlift = dex * dex + dey * dey + dez * dez;
  const double az = std::abs(aez), bz = std::abs(bez), cz = std::abs(cez), dz = std::abs(dez);
  const double permanent =
      ((cexdey + dexcey) * bz + (dexbey + bexdey) * cz + (bexcey + cexbey) * dz) * alift +
      ((dexaey + aexdey) * cz + (aexcey + cexaey) * dz + (cexdey + dexcey) * az) * blift +
      ((aexbey + bexaey) * dz + (bexdey + dexbey) * az + (dexaey + aexdey) * bz) * clift +
      ((bexcey + cexbey) * az + (cexaey + aexcey) * bz + (aexbey + bexaey) * cz) * dlift;
  if (std::abs(det) > kInsphereBound * permanent) return -sign(det);

  auto r = [](double v) { return Rational(v); };
  const Rational ex = r(e.x()), ey = r(e.y()), ez = r(e.z());
  const Rational exact = insphere_det<Rational>(
      r(a.x()) - ex, r(a.y()) - ey, r(a.z()) - ez, r(b.x()) - ex, r(b.y()) - ey, r(b.z()) - ez,
      r(c.x()) - ex, r(c.y()) - ey, r(c.z()) - ez, r(d.x()) - ex, r(d.y()) - ey, r(d.z()) - ez);
  return -sign(exact);
}

}  // namespace gwrap::detail
