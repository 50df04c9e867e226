#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <dcmwalk/qp/qp_solver.hpp>
#include <dcmwalk/rigidbody/kindyn.hpp>

namespace dcmwalk
{

/// Weights and gains of the velocity level whole body controller. Task
/// weights may be zero (the tiny Hessian regularization keeps the problem
/// strictly convex); feedback gain matrices must be positive definite.
struct IkGains
{
    double torsoWeight = 5.0;
    double postureWeight = 1.0;
    double postureGain = 2.0; ///< joint space proportional gain

    Eigen::Matrix3d footLinearGain = 5.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d footIntegralGain = 0.5 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d footAngularGain = 5.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d torsoAngularGain = 5.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d comGain = 4.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d comIntegralGain = 0.5 * Eigen::Matrix3d::Identity();

    Eigen::Vector3d footIntegralLimit = Eigen::Vector3d::Constant(0.02);
    Eigen::Vector3d comIntegralLimit = Eigen::Vector3d::Constant(0.02);

    /// Symmetric joint rate bound, additionally capped by the model limits.
    double jointVelocityBound = 2.0;

    void validate() const;
};

struct IkFootReference
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 6, 1> twist = Eigen::Matrix<double, 6, 1>::Zero();
    bool inContact = true;
};

struct IkReferences
{
    Eigen::Vector3d comPosition = Eigen::Vector3d::Zero();
    Eigen::Vector3d comVelocity = Eigen::Vector3d::Zero();
    IkFootReference leftFoot;
    IkFootReference rightFoot;
    Eigen::Matrix3d torsoRotation = Eigen::Matrix3d::Identity();
    Eigen::VectorXd posture;
};

enum class IkStatus
{
    Solved,
    Infeasible,
    Failed
};

struct IkResult
{
    IkStatus status = IkStatus::Failed;
    Eigen::VectorXd generalizedVelocity; ///< nu = (vB, omegaB, sDot), zero unless Solved
    Eigen::Vector3d comVelocityCommand = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 6, 1> leftFootCommand = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 1> rightFootCommand = Eigen::Matrix<double, 6, 1>::Zero();
    int iterations = 0;
    bool polished = false;
    std::string diagnosis; ///< names the suspect constraints when not Solved
};

/**
 * Kinematics based whole body controller: one strictly convex QP per tick in
 * the generalized velocity. The com and both feet are hard equality tasks
 * (stance feet pinned to zero twist, the swing foot tracking its reference
 * with a clamped integral), the torso orientation and the posture are
 * weighted soft tasks, and the joint rates live between hard bounds.
 */
class IkController
{
public:
    IkController(const IkGains& gains, double timeStep, std::string torsoFrame = "torso");

    /// vee of the skew part of R Rref^T (the attitude error used everywhere).
    static Eigen::Vector3d rotationError(const Eigen::Matrix3d& rotation,
                                         const Eigen::Matrix3d& reference);

    /// Proportional attitude law -K rotationError(R, Rref).
    static Eigen::Vector3d desiredAngularVelocity(const Eigen::Matrix3d& rotation,
                                                  const Eigen::Matrix3d& reference,
                                                  const Eigen::Matrix3d& gain);

    /// kinDyn must already hold the current state.
    IkResult solve(const KinDyn& kinDyn, const IkReferences& references);

    void reset();
    const Eigen::Vector3d& comIntegral() const { return m_comIntegral; }
    const Eigen::Vector3d& leftFootIntegral() const { return m_leftFootIntegral; }
    const Eigen::Vector3d& rightFootIntegral() const { return m_rightFootIntegral; }

private:
    IkGains m_gains;
    double m_timeStep = 0.0;
    std::string m_torsoFrame;
    Eigen::Vector3d m_comIntegral = Eigen::Vector3d::Zero();
    Eigen::Vector3d m_leftFootIntegral = Eigen::Vector3d::Zero();
    Eigen::Vector3d m_rightFootIntegral = Eigen::Vector3d::Zero();
    std::optional<QpWarmStart> m_warmStart;
};

/// Forward Euler step clamped to the joint position limits.
Eigen::VectorXd integrateJointPositions(const Eigen::VectorXd& positions,
                                        const Eigen::VectorXd& velocities,
                                        double timeStep,
                                        const Eigen::VectorXd& lowerLimits,
                                        const Eigen::VectorXd& upperLimits);

} // namespace dcmwalk
