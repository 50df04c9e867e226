#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace dcmwalk
{

/// Contact wrench (force; torque) applied to one sole, expressed in the sole
/// frame and reduced at the sole frame origin.
struct SoleWrench
{
    Eigen::Isometry3d solePose = Eigen::Isometry3d::Identity();
    Eigen::Matrix<double, 6, 1> wrench = Eigen::Matrix<double, 6, 1>::Zero();
};

/// Center of pressure of one sole in its own frame: (-tau_y / f_z, tau_x / f_z).
/// Empty when the normal force is below minNormalForce.
std::optional<Eigen::Vector2d> localZmp(const Eigen::Matrix<double, 6, 1>& soleWrench,
                                        double minNormalForce);

/// Ground projection of the overall center of pressure: each sole's local zmp
/// mapped to world coordinates and averaged with its normal force as weight.
/// Soles below minNormalForce are ignored; empty when no sole carries load.
std::optional<Eigen::Vector2d> globalZmp(const std::vector<SoleWrench>& contacts,
                                         double minNormalForce);

} // namespace dcmwalk
