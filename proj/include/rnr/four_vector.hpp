#pragma once

#include <Eigen/Dense>
#include <complex>

namespace rnr {

using Vector3d = Eigen::Vector3d;
using Vector3cd = Eigen::Vector3cd;
using Complex = std::complex<double>;

// Four-vector in the (+,+,+,-) signature.  For an event x the temporal slot
// holds c*t; for a wave vector Q it holds omega/c.  Then
//   Q.x = k.r - omega*t   and   Q^2 = |k|^2 - (omega/c)^2.
template <class Scalar>
struct FourVector {
  Eigen::Matrix<Scalar, 3, 1> spatial = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Scalar temporal = Scalar(0);
};

using FourVectorD = FourVector<double>;

template <class Scalar>
[[nodiscard]] Scalar minkowski_dot(const FourVector<Scalar>& a,
                                   const FourVector<Scalar>& b) {
  return a.spatial.dot(b.spatial) - a.temporal * b.temporal;
}

template <class Scalar>
[[nodiscard]] Scalar minkowski_square(const FourVector<Scalar>& v) {
  return v.spatial.squaredNorm() - v.temporal * v.temporal;
}

// Wave four-vector from (k, omega): temporal slot omega/c.
[[nodiscard]] inline FourVectorD wave_vector(const Vector3d& k, double omega,
                                             double c) {
  return FourVectorD{k, omega / c};
}

// Event from (r, t): temporal slot c*t.
[[nodiscard]] inline FourVectorD event(const Vector3d& r, double t, double c) {
  return FourVectorD{r, c * t};
}

// eta_{mu nu} J^mu_{-Q} J^nu_Q for a reality-symmetric current amplitude
// (J_{-Q} = conj(J_Q)): real and equal to |J|^2 - c^2 |rho|^2.
[[nodiscard]] inline double eta_contraction(const Vector3cd& J, Complex rho,
                                            double c) {
  return J.squaredNorm() - c * c * std::norm(rho);
}

}  // namespace rnr
