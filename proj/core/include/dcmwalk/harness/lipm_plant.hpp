#pragma once

#include <Eigen/Dense>

namespace dcmwalk
{

struct LipmState
{
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

    Eigen::Vector2d dcm(double timeConstant) const
    {
        return position + timeConstant * velocity;
    }
};

/**
 * Exact flow of the pendulum over one interval with the zmp held constant.
 * The state splits into the divergent component xi = p + b v (growing as
 * e^{t/b}) and the convergent component gamma = p - b v (decaying as
 * e^{-t/b}); both are affine in the zmp, so the discretization has a closed
 * form with no integration error.
 */
LipmState lipmStep(const LipmState& state,
                   const Eigen::Vector2d& zmp,
                   double timeConstant,
                   double timeStep);

/// One planar axis of the continuous pendulum, [p; v] per axis: eigenvalues
/// are +-1/b. Exposed so the spectral properties can be asserted directly.
Eigen::Matrix2d lipmContinuousMatrix(double timeConstant);

/// Exact one step transition of [p; v] per axis (the zmp enters affinely).
Eigen::Matrix2d lipmDiscreteMatrix(double timeConstant, double timeStep);

} // namespace dcmwalk
