#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <dcmwalk/qp/qp_solver.hpp>
#include <dcmwalk/rigidbody/kindyn.hpp>

namespace dcmwalk
{

/// Weights, feedback gains and contact parameters of the torque level whole
/// body controller. Task weights may be zero; feedback gains must be positive.
struct TorqueGains
{
    double torsoWeight = 1.0;
    double postureWeight = 10.0;
    double torqueWeight = 1e-3;
    /// Diagonal penalty per wrench component (fx fy fz tx ty tz).
    Eigen::Matrix<double, 6, 1> wrenchWeight = Eigen::Matrix<double, 6, 1>::Constant(1e-3);
    /// Penalize the deviation from an even weight sharing wrench instead of
    /// the raw wrench magnitude.
    bool wrenchAboutNominal = true;

    double attitudeCoupling = 1.0;   ///< c0, gyroscopic cross term
    double attitudeDamping = 10.0;   ///< c1
    double attitudeStiffness = 25.0; ///< c2

    double postureStiffness = 25.0;
    double postureDamping = 10.0;

    Eigen::Matrix3d footStiffness = 25.0 * Eigen::Matrix3d::Identity();
    Eigen::Matrix3d footDamping = 10.0 * Eigen::Matrix3d::Identity();

    double comHeightStiffness = 25.0;
    double comHeightDamping = 10.0;

    double frictionCoefficient = 1.0 / 3.0;
    int frictionFacets = 8;
    double minNormalForce = 1.0; ///< N, hard floor on every stance normal force

    void validate() const;
};

struct TorqueFootReference
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 6, 1> twist = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 1> twistRate = Eigen::Matrix<double, 6, 1>::Zero();
    bool inContact = true;
};

struct TorqueReferences
{
    Eigen::Matrix3d torsoRotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d torsoAngularVelocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d torsoAngularAcceleration = Eigen::Vector3d::Zero();

    TorqueFootReference leftFoot;
    TorqueFootReference rightFoot;

    double comHeight = 0.0;
    double comHeightRate = 0.0;
    double comHeightAcceleration = 0.0;

    Eigen::VectorXd posture;
    Eigen::VectorXd postureVelocity;

    Eigen::Vector2d zmp = Eigen::Vector2d::Zero(); ///< desired global zmp
};

enum class TorqueStatus
{
    Solved,
    ZmpReferenceInfeasible, ///< reference zmp outside the stance hull
    Infeasible,
    Failed
};

struct TorqueResult
{
    TorqueStatus status = TorqueStatus::Failed;
    Eigen::VectorXd accelerations;     ///< nuDot (6+n)
    Eigen::VectorXd torques;           ///< n
    Eigen::Matrix<double, 6, 1> leftWrench = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 1> rightWrench = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Vector2d reproducedZmp = Eigen::Vector2d::Zero();
    double dynamicsResidual = 0.0;
    int iterations = 0;
    bool polished = false;
    std::string diagnosis;
};

/// Inequality rows confining one world contact wrench (reduced at the sole
/// origin) to the linearized friction cone, the cop rectangle and a minimum
/// normal force: matrix * f <= upperBound.
struct WrenchFeasibility
{
    Eigen::MatrixXd matrix;
    Eigen::VectorXd upperBound;
};

WrenchFeasibility wrenchFeasibilityRows(const Eigen::Isometry3d& solePose,
                                        double frictionCoefficient,
                                        int facets,
                                        double soleLength,
                                        double soleWidth,
                                        double minNormalForce);

/// 2 x 6k map over the stacked world wrenches with A f = 0 exactly when the
/// normal force weighted center of pressure lands on the target.
Eigen::MatrixXd zmpEqualityMatrix(const std::vector<Eigen::Isometry3d>& solePoses,
                                  const Eigen::Vector2d& zmpTarget);

/**
 * Dynamics based whole body controller: one QP per tick over u = (nuDot, tau,
 * stacked stance wrenches). Hard constraints pin the floating base dynamics,
 * the stance feet, the swing foot and com height accelerations, and the
 * global zmp of the contact wrenches; inequalities keep every wrench in its
 * friction/cop set and the torques inside the model limits. The cost trades
 * torso attitude and posture tracking against torque and wrench effort.
 */
class TorqueController
{
public:
    explicit TorqueController(const TorqueGains& gains, std::string torsoFrame = "torso");

    /// Attitude feedback omegaDotRef - c0 vee(skew(omega) E - E skew(omegaRef))
    /// - c1 (omega - omegaRef) - c2 vee(E) with E = R Rref^T.
    static Eigen::Vector3d rotationalPid(const Eigen::Matrix3d& rotation,
                                         const Eigen::Matrix3d& rotationReference,
                                         const Eigen::Vector3d& angularVelocity,
                                         const Eigen::Vector3d& angularVelocityReference,
                                         const Eigen::Vector3d& angularAccelerationReference,
                                         double c0,
                                         double c1,
                                         double c2);

    static Eigen::Vector3d linearPid(const Eigen::Vector3d& position,
                                     const Eigen::Vector3d& positionReference,
                                     const Eigen::Vector3d& velocity,
                                     const Eigen::Vector3d& velocityReference,
                                     const Eigen::Vector3d& accelerationReference,
                                     const Eigen::Matrix3d& stiffness,
                                     const Eigen::Matrix3d& damping);

    /// kinDyn must already hold the current state; at least one foot of the
    /// references must be tagged in contact.
    TorqueResult solve(const KinDyn& kinDyn, const TorqueReferences& references);

    void resetWarmStart() { m_warmStart.reset(); }

private:
    TorqueGains m_gains;
    std::string m_torsoFrame;
    std::optional<QpWarmStart> m_warmStart;
};

} // namespace dcmwalk
