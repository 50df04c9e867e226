#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <dcmwalk/rigidbody/model.hpp>

namespace dcmwalk
{

/**
 * Forward kinematics and dynamics quantities of a Model at one state.
 *
 * The generalized velocity is nu = (vB, omegaB, sDot) of size 6 + n:
 * vB is the world linear velocity of the base frame origin, omegaB the
 * angular velocity expressed in world coordinates, sDot the joint rates.
 * Frame velocities and Jacobians follow the same mixed convention: linear
 * part is the world velocity of the frame origin, angular part the world
 * angular velocity.
 *
 * Call setState() after every state change; all getters read cached data.
 */
class KinDyn
{
public:
    explicit KinDyn(Model model);

    const Model& model() const { return m_model; }
    int numJoints() const { return m_model.numJoints(); }
    int velocityDimension() const { return 6 + m_model.numJoints(); }

    void setState(const Eigen::Isometry3d& basePose,
                  const Eigen::VectorXd& jointPositions,
                  const Eigen::Matrix<double, 6, 1>& baseVelocity,
                  const Eigen::VectorXd& jointVelocities);

    const Eigen::Isometry3d& basePose() const { return m_basePose; }
    const Eigen::VectorXd& jointPositions() const { return m_jointPositions; }
    const Eigen::Matrix<double, 6, 1>& baseVelocity() const { return m_baseVelocity; }
    const Eigen::VectorXd& jointVelocities() const { return m_jointVelocities; }
    Eigen::VectorXd generalizedVelocity() const;

    Eigen::Isometry3d linkTransform(int linkIndex) const;
    Eigen::Isometry3d frameTransform(int frameIndex) const;
    Eigen::Isometry3d frameTransform(const std::string& frameName) const;

    /// World velocity (linear; angular) of a frame.
    Eigen::Matrix<double, 6, 1> frameVelocity(int frameIndex) const;

    /// 6 x (6+n) mixed Jacobian of a frame.
    Eigen::MatrixXd frameJacobian(int frameIndex) const;
    Eigen::MatrixXd frameJacobian(const std::string& frameName) const;

    /// d(J nu)/dt of a frame at zero generalized acceleration.
    Eigen::Matrix<double, 6, 1> frameBiasAcceleration(int frameIndex) const;

    double totalMass() const { return m_totalMass; }
    Eigen::Vector3d comPosition() const;
    Eigen::Vector3d comVelocity() const;
    /// 3 x (6+n) Jacobian of the center of mass.
    Eigen::MatrixXd comJacobian() const;

    /// d(Jcom nu)/dt at zero generalized acceleration.
    Eigen::Vector3d comBiasAcceleration() const;

    /// (6+n) x (6+n) generalized mass matrix.
    Eigen::MatrixXd massMatrix() const;

    /// Coriolis, centrifugal and gravity force vector h(q, nu) = C nu + G,
    /// such that the equations of motion read M nuDot + h = B tau + sum J^T f.
    Eigen::VectorXd generalizedBias() const;

    /// Gravity part of generalizedBias().
    Eigen::VectorXd gravityBias() const;

private:
    struct LinkState
    {
        Eigen::Isometry3d transform = Eigen::Isometry3d::Identity();
        Eigen::Vector3d worldCom = Eigen::Vector3d::Zero();
        Eigen::Matrix<double, 6, 6> spatialInertia = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> velocity = Eigen::Matrix<double, 6, 1>::Zero();
        Eigen::Matrix<double, 6, 1> biasAcceleration = Eigen::Matrix<double, 6, 1>::Zero();
    };

    Eigen::VectorXd projectToGeneralized(const std::vector<Eigen::Matrix<double, 6, 1>>& linkForces)
        const;

    Model m_model;
    double m_totalMass = 0.0;
    std::vector<int> m_parentJoint; ///< inbound joint of each link, -1 for the base

    Eigen::Isometry3d m_basePose = Eigen::Isometry3d::Identity();
    Eigen::VectorXd m_jointPositions;
    Eigen::Matrix<double, 6, 1> m_baseVelocity = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::VectorXd m_jointVelocities;

    std::vector<LinkState> m_linkStates;
    /// Screw of every degree of freedom in Pluecker coordinates about the
    /// world origin, (linear; angular) ordering. Columns 0..5 are the base.
    Eigen::MatrixXd m_dofScrews;
    /// Joint axis unit vector and a point on the axis, world coordinates.
    std::vector<Eigen::Vector3d> m_worldAxis;
    std::vector<Eigen::Vector3d> m_worldAxisPoint;
};

} // namespace dcmwalk
