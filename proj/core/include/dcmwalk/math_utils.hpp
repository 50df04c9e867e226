#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace dcmwalk
{

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
    Eigen::Matrix3d s;
    s <<     0.0, -v.z(),  v.y(),
           v.z(),    0.0, -v.x(),
          -v.y(),  v.x(),    0.0;
    return s;
}

/**
 * Inverse of skew(). A general matrix is first projected onto its
 * skew-symmetric part (m - m^T) / 2, so vee(skew(v)) == v for any v and
 * vee() of a rotation-error product stays well defined.
 */
inline Eigen::Vector3d vee(const Eigen::Matrix3d& m)
{
    const Eigen::Matrix3d s = 0.5 * (m - m.transpose());
    return {s(2, 1), s(0, 2), s(1, 0)};
}

/// Rodrigues formula, exp of the skew matrix of omega.
inline Eigen::Matrix3d expSkew(const Eigen::Vector3d& omega)
{
    const double angle = omega.norm();
    if (angle < 1e-12)
    {
        // Second order expansion keeps the result a rotation to machine precision.
        const Eigen::Matrix3d s = skew(omega);
        return Eigen::Matrix3d::Identity() + s + 0.5 * s * s;
    }
    return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

/// Roll-pitch-yaw (x-y-z extrinsic, i.e. R = Rz(yaw) Ry(pitch) Rx(roll)).
inline Eigen::Matrix3d rotationFromRpy(double roll, double pitch, double yaw)
{
    return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())
            * Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY())
            * Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

inline Eigen::Matrix3d rotationZ(double yaw)
{
    return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

inline bool isRotationMatrix(const Eigen::Matrix3d& r, double tolerance = 1e-9)
{
    return (r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < tolerance
           && std::abs(r.determinant() - 1.0) < tolerance;
}

/// Re-orthonormalizes a near-rotation matrix (closest rotation in Frobenius norm).
inline Eigen::Matrix3d projectToRotation(const Eigen::Matrix3d& m)
{
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0)
    {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1.0;
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

inline double clampValue(double x, double lo, double hi)
{
    return x < lo ? lo : (x > hi ? hi : x);
}

inline Eigen::VectorXd clampVector(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi)
{
    return x.cwiseMax(lo).cwiseMin(hi);
}

} // namespace dcmwalk
