#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <dcmwalk/math_utils.hpp>
#include <dcmwalk/rigidbody/kindyn.hpp>
#include <dcmwalk/rigidbody/model.hpp>
#include <dcmwalk/rigidbody/zmp.hpp>
#include <dcmwalk/wbc/ik_controller.hpp>
#include <dcmwalk/wbc/torque_controller.hpp>

#include "active_set_qp.hpp"

namespace
{

using namespace dcmwalk;
using Vector6 = Eigen::Matrix<double, 6, 1>;

const char* kModelPath = DCMWALK_SOURCE_DIR "/models/mini_biped.model";

Model& testModel()
{
    static Model model = Model::loadFromFile(kModelPath);
    return model;
}

/// Flat-footed crouch with the soles on the ground plane. The symmetric
/// hip/knee/ankle bend keeps the ankle under the hip, so the base only drops;
/// a nonzero bend stays away from the stretched-knee singularity.
struct Stance
{
    Eigen::Isometry3d basePose = Eigen::Isometry3d::Identity();
    Eigen::VectorXd jointPositions;
};

Stance bentStance(double bend = 0.5)
{
    const Model& model = testModel();
    Stance stance;
    stance.jointPositions = Eigen::VectorXd::Zero(model.numJoints());
    for (const std::string side : {"l", "r"})
    {
        stance.jointPositions(model.jointIndex(side + "_hip_pitch")) = -bend;
        stance.jointPositions(model.jointIndex(side + "_knee")) = 2.0 * bend;
        stance.jointPositions(model.jointIndex(side + "_ankle_pitch")) = -bend;
    }
    stance.basePose.translation() = Eigen::Vector3d(-0.03, 0.0, 0.06 + 0.54 * std::cos(bend));
    return stance;
}

void applyStance(KinDyn& kinDyn, const Stance& stance)
{
    kinDyn.setState(stance.basePose, stance.jointPositions, Vector6::Zero(),
                    Eigen::VectorXd::Zero(stance.jointPositions.size()));
}

/// References that ask the torque controller to keep the current state.
TorqueReferences holdingReferences(const KinDyn& kinDyn)
{
    const Model& model = kinDyn.model();
    TorqueReferences refs;
    refs.torsoRotation =
        projectToRotation(kinDyn.frameTransform(model.frameIndex("torso")).rotation());
    refs.leftFoot.position = kinDyn.frameTransform(model.leftFoot().frameIndex).translation();
    refs.leftFoot.rotation =
        projectToRotation(kinDyn.frameTransform(model.leftFoot().frameIndex).rotation());
    refs.rightFoot.position = kinDyn.frameTransform(model.rightFoot().frameIndex).translation();
    refs.rightFoot.rotation =
        projectToRotation(kinDyn.frameTransform(model.rightFoot().frameIndex).rotation());
    refs.comHeight = kinDyn.comPosition().z();
    refs.posture = kinDyn.jointPositions();
    refs.postureVelocity = Eigen::VectorXd::Zero(kinDyn.numJoints());
    refs.zmp = kinDyn.comPosition().head<2>();
    return refs;
}

double feasibilityMargin(const WrenchFeasibility& feasibility, const Vector6& wrench)
{
    return (feasibility.matrix * wrench - feasibility.upperBound).maxCoeff();
}

/// Re-derives the per-contact feasibility quantities straight from the local
/// wrench, independent of the row construction under test.
void checkContactWrench(const Eigen::Isometry3d& solePose,
                        const Vector6& worldWrench,
                        double mu,
                        double halfLength,
                        double halfWidth)
{
    const Eigen::Matrix3d toLocal = solePose.rotation().transpose();
    const Eigen::Vector3d force = toLocal * worldWrench.head<3>();
    const Eigen::Vector3d torque = toLocal * worldWrench.tail<3>();
    CHECK(force.z() >= 1.0 - 1e-9);
    CHECK(force.head<2>().norm() <= mu * force.z() + 1e-6);
    const double copX = -torque.y() / force.z();
    const double copY = torque.x() / force.z();
    CHECK(std::abs(copX) <= halfLength + 1e-6);
    CHECK(std::abs(copY) <= halfWidth + 1e-6);
}

/// Full per-tick verification of a Solved torque result against quantities
/// recomputed from the model: dynamics consistency, the reproduced zmp, the
/// wrench cones and the torque limits.
void checkTorqueInvariants(const KinDyn& kinDyn,
                           const TorqueReferences& refs,
                           const TorqueGains& gains,
                           const TorqueResult& result)
{
    const Model& model = kinDyn.model();
    const int joints = kinDyn.numJoints();

    REQUIRE(result.status == TorqueStatus::Solved);
    CHECK(result.dynamicsResidual <= 1e-6);
    CHECK((result.reproducedZmp - refs.zmp).norm() <= 1e-6);

    Eigen::VectorXd applied = Eigen::VectorXd::Zero(6 + joints);
    applied.segment(6, joints) = result.torques;
    if (refs.leftFoot.inContact)
    {
        applied += kinDyn.frameJacobian(model.leftFoot().frameIndex).transpose()
                   * result.leftWrench;
        checkContactWrench(kinDyn.frameTransform(model.leftFoot().frameIndex),
                           result.leftWrench, gains.frictionCoefficient,
                           0.5 * model.leftFoot().length, 0.5 * model.leftFoot().width);
    }
    if (refs.rightFoot.inContact)
    {
        applied += kinDyn.frameJacobian(model.rightFoot().frameIndex).transpose()
                   * result.rightWrench;
        checkContactWrench(kinDyn.frameTransform(model.rightFoot().frameIndex),
                           result.rightWrench, gains.frictionCoefficient,
                           0.5 * model.rightFoot().length, 0.5 * model.rightFoot().width);
    }

    // Forward consistency: the model integrated with (tau, f) reproduces the
    // commanded accelerations.
    const Eigen::VectorXd forward =
        kinDyn.massMatrix().ldlt().solve(applied - kinDyn.generalizedBias());
    const double scale = std::max(1.0, result.accelerations.lpNorm<Eigen::Infinity>());
    CHECK((forward - result.accelerations).lpNorm<Eigen::Infinity>() <= 1e-6 * scale);

    const Eigen::VectorXd torqueLimit = model.jointTorqueLimits();
    CHECK(((result.torques - torqueLimit).array() <= 1e-9).all());
    CHECK(((result.torques + torqueLimit).array() >= -1e-9).all());
}

/// Mirrors the controller's quadratic program so the active-set enumeration
/// oracle can solve the identical problem through an unrelated code path.
QpProblem assembleTorqueProblem(const KinDyn& kinDyn,
                                const TorqueReferences& refs,
                                const TorqueGains& gains)
{
    const Model& model = kinDyn.model();
    const int joints = kinDyn.numJoints();
    const int velocityDim = 6 + joints;

    struct Contact
    {
        int frameIndex;
        Eigen::Isometry3d pose;
        double length;
        double width;
    };
    std::vector<Contact> contacts;
    if (refs.leftFoot.inContact)
    {
        const FootDescription& foot = model.leftFoot();
        contacts.push_back({foot.frameIndex, kinDyn.frameTransform(foot.frameIndex),
                            foot.length, foot.width});
    }
    if (refs.rightFoot.inContact)
    {
        const FootDescription& foot = model.rightFoot();
        contacts.push_back({foot.frameIndex, kinDyn.frameTransform(foot.frameIndex),
                            foot.length, foot.width});
    }
    const int contactCount = static_cast<int>(contacts.size());
    const int variables = velocityDim + joints + 6 * contactCount;
    const int torqueOffset = velocityDim;
    const int wrenchOffset = velocityDim + joints;

    const int torsoFrame = model.frameIndex("torso");
    const Eigen::MatrixXd torsoJacobian = kinDyn.frameJacobian(torsoFrame).bottomRows<3>();
    const Eigen::Vector3d torsoTarget =
        TorqueController::rotationalPid(kinDyn.frameTransform(torsoFrame).rotation(),
                                        refs.torsoRotation,
                                        kinDyn.frameVelocity(torsoFrame).tail<3>(),
                                        refs.torsoAngularVelocity,
                                        refs.torsoAngularAcceleration, gains.attitudeCoupling,
                                        gains.attitudeDamping, gains.attitudeStiffness)
        - kinDyn.frameBiasAcceleration(torsoFrame).tail<3>();
    const Eigen::VectorXd postureTarget =
        -gains.postureDamping * (kinDyn.jointVelocities() - refs.postureVelocity)
        - gains.postureStiffness * (kinDyn.jointPositions() - refs.posture);

    QpProblem problem;
    problem.hessian = Eigen::MatrixXd::Zero(variables, variables);
    problem.gradient = Eigen::VectorXd::Zero(variables);
    problem.hessian.topLeftCorner(velocityDim, velocityDim) +=
        2.0 * gains.torsoWeight * torsoJacobian.transpose() * torsoJacobian;
    problem.gradient.head(velocityDim) -=
        2.0 * gains.torsoWeight * torsoJacobian.transpose() * torsoTarget;
    problem.hessian.block(6, 6, joints, joints).diagonal().array() += 2.0 * gains.postureWeight;
    problem.gradient.segment(6, joints) -= 2.0 * gains.postureWeight * postureTarget;
    problem.hessian.block(torqueOffset, torqueOffset, joints, joints).diagonal().array() +=
        2.0 * gains.torqueWeight;
    const double weightShare =
        kinDyn.totalMass() * model.gravity() / static_cast<double>(contactCount);
    for (int k = 0; k < contactCount; k++)
    {
        const int column = wrenchOffset + 6 * k;
        problem.hessian.block<6, 6>(column, column).diagonal() += 2.0 * gains.wrenchWeight;
        if (gains.wrenchAboutNominal)
        {
            Vector6 nominal = Vector6::Zero();
            nominal.head<3>() = weightShare * contacts[static_cast<size_t>(k)].pose.rotation().col(2);
            problem.gradient.segment<6>(column) -= 2.0 * gains.wrenchWeight.cwiseProduct(nominal);
        }
    }
    problem.hessian.diagonal().array() += 2.0 * 1e-8;

    const int equalityRows = velocityDim + 12 + 1 + 2;
    const int inequalityRows = contactCount * (gains.frictionFacets + 5) + joints;
    const int rows = equalityRows + inequalityRows;
    problem.constraintMatrix = Eigen::MatrixXd::Zero(rows, variables);
    problem.lowerBound = Eigen::VectorXd::Constant(rows, -kQpInfinity);
    problem.upperBound.resize(rows);

    int row = 0;
    problem.constraintMatrix.block(row, 0, velocityDim, velocityDim) = -kinDyn.massMatrix();
    problem.constraintMatrix.block(row + 6, torqueOffset, joints, joints) =
        Eigen::MatrixXd::Identity(joints, joints);
    for (int k = 0; k < contactCount; k++)
    {
        problem.constraintMatrix.block(row, wrenchOffset + 6 * k, velocityDim, 6) =
            kinDyn.frameJacobian(contacts[static_cast<size_t>(k)].frameIndex).transpose();
    }
    problem.lowerBound.segment(row, velocityDim) = kinDyn.generalizedBias();
    problem.upperBound.segment(row, velocityDim) = kinDyn.generalizedBias();
    row += velocityDim;

    const auto footRows = [&](const TorqueFootReference& reference, const FootDescription& foot) {
        Vector6 target = -kinDyn.frameBiasAcceleration(foot.frameIndex);
        if (!reference.inContact)
        {
            const Eigen::Isometry3d pose = kinDyn.frameTransform(foot.frameIndex);
            const Vector6 twist = kinDyn.frameVelocity(foot.frameIndex);
            target.head<3>() += TorqueController::linearPid(
                pose.translation(), reference.position, twist.head<3>(),
                reference.twist.head<3>(), reference.twistRate.head<3>(), gains.footStiffness,
                gains.footDamping);
            target.tail<3>() += TorqueController::rotationalPid(
                pose.rotation(), reference.rotation, twist.tail<3>(), reference.twist.tail<3>(),
                reference.twistRate.tail<3>(), gains.attitudeCoupling, gains.attitudeDamping,
                gains.attitudeStiffness);
        }
        problem.constraintMatrix.block(row, 0, 6, 6 + joints) =
            kinDyn.frameJacobian(foot.frameIndex);
        problem.lowerBound.segment<6>(row) = target;
        problem.upperBound.segment<6>(row) = target;
        row += 6;
    };
    footRows(refs.leftFoot, model.leftFoot());
    footRows(refs.rightFoot, model.rightFoot());

    const double heightTarget =
        refs.comHeightAcceleration
        - gains.comHeightDamping * (kinDyn.comVelocity().z() - refs.comHeightRate)
        - gains.comHeightStiffness * (kinDyn.comPosition().z() - refs.comHeight)
        - kinDyn.comBiasAcceleration().z();
    problem.constraintMatrix.block(row, 0, 1, velocityDim) = kinDyn.comJacobian().row(2);
    problem.lowerBound(row) = heightTarget;
    problem.upperBound(row) = heightTarget;
    row += 1;

    std::vector<Eigen::Isometry3d> solePoses;
    for (const Contact& contact : contacts)
    {
        solePoses.push_back(contact.pose);
    }
    problem.constraintMatrix.block(row, wrenchOffset, 2, 6 * contactCount) =
        zmpEqualityMatrix(solePoses, refs.zmp);
    problem.lowerBound.segment<2>(row).setZero();
    problem.upperBound.segment<2>(row).setZero();
    row += 2;

    for (int k = 0; k < contactCount; k++)
    {
        const Contact& contact = contacts[static_cast<size_t>(k)];
        const WrenchFeasibility feasibility =
            wrenchFeasibilityRows(contact.pose, gains.frictionCoefficient, gains.frictionFacets,
                                  contact.length, contact.width, gains.minNormalForce);
        const int count = static_cast<int>(feasibility.matrix.rows());
        problem.constraintMatrix.block(row, wrenchOffset + 6 * k, count, 6) = feasibility.matrix;
        problem.upperBound.segment(row, count) = feasibility.upperBound;
        row += count;
    }

    problem.constraintMatrix.block(row, torqueOffset, joints, joints) =
        Eigen::MatrixXd::Identity(joints, joints);
    problem.lowerBound.segment(row, joints) = -model.jointTorqueLimits();
    problem.upperBound.segment(row, joints) = model.jointTorqueLimits();
    return problem;
}

} // namespace

TEST_CASE("ik gains validation rejects bad settings")
{
    CHECK_NOTHROW(IkGains{}.validate());

    // Zero task weights stay legal; the regularizer keeps the program convex.
    IkGains zeroWeights;
    zeroWeights.torsoWeight = 0.0;
    zeroWeights.postureWeight = 0.0;
    CHECK_NOTHROW(zeroWeights.validate());

    IkGains bad;
    bad.torsoWeight = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = IkGains{};
    bad.postureGain = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = IkGains{};
    bad.footLinearGain.setZero();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = IkGains{};
    bad.comGain = -Eigen::Matrix3d::Identity();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = IkGains{};
    bad.footIntegralLimit.x() = -0.01;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = IkGains{};
    bad.jointVelocityBound = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(IkController(IkGains{}, 0.0), std::invalid_argument);
}

TEST_CASE("rotation error and the torso angular velocity law")
{
    // quarter turn about x: the skew part of the error has unit x component
    const Eigen::Matrix3d quarter = expSkew(Eigen::Vector3d(std::numbers::pi / 2.0, 0.0, 0.0));
    const Eigen::Vector3d error = IkController::rotationError(quarter, Eigen::Matrix3d::Identity());
    CHECK((error - Eigen::Vector3d(1.0, 0.0, 0.0)).norm() < 1e-12);
    const Eigen::Vector3d omega = IkController::desiredAngularVelocity(
        quarter, Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity());
    CHECK((omega - Eigen::Vector3d(-1.0, 0.0, 0.0)).norm() < 1e-12);

    // small rotation about z: first order in the angle
    const double delta = 1e-3;
    const Eigen::Matrix3d gain = 2.0 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d small = IkController::desiredAngularVelocity(
        rotationZ(delta), Eigen::Matrix3d::Identity(), gain);
    CHECK((small - Eigen::Vector3d(0.0, 0.0, -2.0 * delta)).norm() < 2.0 * delta * delta);

    // zero error
    const Eigen::Matrix3d any = expSkew(Eigen::Vector3d(0.3, -0.2, 0.5));
    CHECK(IkController::desiredAngularVelocity(any, any, gain).norm() < 1e-12);
}

TEST_CASE("ik holds a perfectly tracked stance still")
{
    KinDyn kinDyn(testModel());
    applyStance(kinDyn, bentStance());

    IkReferences refs;
    refs.comPosition = kinDyn.comPosition();
    refs.leftFoot.position =
        kinDyn.frameTransform(testModel().leftFoot().frameIndex).translation();
    refs.rightFoot.position =
        kinDyn.frameTransform(testModel().rightFoot().frameIndex).translation();
    refs.posture = kinDyn.jointPositions();

    IkController controller(IkGains{}, 0.01);
    const IkResult result = controller.solve(kinDyn, refs);
    REQUIRE(result.status == IkStatus::Solved);
    CHECK(result.generalizedVelocity.lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(result.comVelocityCommand.norm() == 0.0);
    CHECK(result.leftFootCommand.norm() == 0.0);
    CHECK(result.rightFootCommand.norm() == 0.0);
}

TEST_CASE("ik matches the equality constrained kkt oracle")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());
    const int joints = model.numJoints();
    const int variables = 6 + joints;
    const double timeStep = 0.01;

    const Eigen::Isometry3d rightPose = kinDyn.frameTransform(model.rightFoot().frameIndex);
    const Eigen::Matrix3d torsoRotation =
        kinDyn.frameTransform(model.frameIndex("torso")).rotation();

    IkReferences refs;
    refs.comPosition = kinDyn.comPosition() + Eigen::Vector3d(0.004, -0.003, 0.002);
    refs.comVelocity = Eigen::Vector3d(0.01, 0.02, -0.01);
    refs.leftFoot.position = kinDyn.frameTransform(model.leftFoot().frameIndex).translation();
    refs.rightFoot.inContact = false;
    refs.rightFoot.position = rightPose.translation() + Eigen::Vector3d(0.01, -0.005, 0.02);
    refs.rightFoot.rotation =
        expSkew(Eigen::Vector3d(0.03, -0.02, 0.04)) * projectToRotation(rightPose.rotation());
    refs.rightFoot.twist << 0.02, 0.01, 0.05, 0.01, -0.02, 0.03;
    refs.torsoRotation = expSkew(Eigen::Vector3d(0.02, 0.01, -0.03)) * torsoRotation;
    refs.posture = kinDyn.jointPositions();
    std::mt19937 rng(551);
    std::normal_distribution<double> gauss;
    for (int j = 0; j < joints; j++)
    {
        refs.posture(j) += 0.02 * gauss(rng);
    }

    const auto oracle = [&](const IkGains& gains) {
        // First tick of a fresh controller: the integrals hold one clamped
        // Euler step of the error.
        const Eigen::Vector3d comError = refs.comPosition - kinDyn.comPosition();
        const Eigen::Vector3d comIntegral =
            (timeStep * comError).cwiseMax(-gains.comIntegralLimit).cwiseMin(gains.comIntegralLimit);
        const Eigen::Vector3d comCommand = refs.comVelocity + gains.comGain * comError
                                           + gains.comIntegralGain * comIntegral;

        const Eigen::Vector3d footError = refs.rightFoot.position - rightPose.translation();
        const Eigen::Vector3d footIntegral = (timeStep * footError)
                                                 .cwiseMax(-gains.footIntegralLimit)
                                                 .cwiseMin(gains.footIntegralLimit);
        Vector6 rightCommand = refs.rightFoot.twist;
        rightCommand.head<3>() +=
            gains.footLinearGain * footError + gains.footIntegralGain * footIntegral;
        rightCommand.tail<3>() -=
            gains.footAngularGain * vee(rightPose.rotation() * refs.rightFoot.rotation.transpose());

        const Eigen::MatrixXd torsoJacobian =
            kinDyn.frameJacobian(model.frameIndex("torso")).bottomRows<3>();
        const Eigen::Vector3d torsoCommand =
            -gains.torsoAngularGain * vee(torsoRotation * refs.torsoRotation.transpose());
        const Eigen::VectorXd postureCommand =
            -gains.postureGain * (kinDyn.jointPositions() - refs.posture);

        Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(variables, variables);
        hessian += 2.0 * gains.torsoWeight * torsoJacobian.transpose() * torsoJacobian;
        hessian.bottomRightCorner(joints, joints).diagonal().array() += 2.0 * gains.postureWeight;
        hessian.diagonal().array() += 2.0 * 1e-8;
        Eigen::VectorXd gradient = Eigen::VectorXd::Zero(variables);
        gradient -= 2.0 * gains.torsoWeight * torsoJacobian.transpose() * torsoCommand;
        gradient.tail(joints) -= 2.0 * gains.postureWeight * postureCommand;

        Eigen::MatrixXd equality(15, variables);
        equality.topRows<3>() = kinDyn.comJacobian();
        equality.middleRows<6>(3) = kinDyn.frameJacobian(model.leftFoot().frameIndex);
        equality.bottomRows<6>() = kinDyn.frameJacobian(model.rightFoot().frameIndex);
        Eigen::VectorXd values(15);
        values.head<3>() = comCommand;
        values.segment<6>(3).setZero();
        values.tail<6>() = rightCommand;

        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(variables + 15, variables + 15);
        kkt.topLeftCorner(variables, variables) = hessian;
        kkt.bottomLeftCorner(15, variables) = equality;
        kkt.topRightCorner(variables, 15) = equality.transpose();
        Eigen::VectorXd rhs(variables + 15);
        rhs.head(variables) = -gradient;
        rhs.tail(15) = values;
        struct OracleResult
        {
            Eigen::VectorXd nu;
            Eigen::Vector3d comCommand;
            Vector6 rightCommand;
        };
        OracleResult out;
        out.nu = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs).head(variables);
        out.comCommand = comCommand;
        out.rightCommand = rightCommand;
        return out;
    };

    SUBCASE("default gains")
    {
        const IkGains gains;
        IkController controller(gains, timeStep);
        const IkResult result = controller.solve(kinDyn, refs);
        REQUIRE(result.status == IkStatus::Solved);
        // joint rate bounds stay far from active for these small errors
        CHECK(result.generalizedVelocity.tail(joints).lpNorm<Eigen::Infinity>() < 1.5);

        const auto expected = oracle(gains);
        CHECK((result.comVelocityCommand - expected.comCommand).norm() < 1e-12);
        CHECK((result.rightFootCommand - expected.rightCommand).norm() < 1e-12);
        CHECK(result.leftFootCommand.norm() == 0.0);
        CHECK((result.generalizedVelocity - expected.nu).lpNorm<Eigen::Infinity>() < 1e-6);
    }

    SUBCASE("zero torso weight drops the torso term")
    {
        IkGains gains;
        gains.torsoWeight = 0.0;
        IkController controller(gains, timeStep);
        const IkResult result = controller.solve(kinDyn, refs);
        REQUIRE(result.status == IkStatus::Solved);
        const auto expected = oracle(gains);
        CHECK((result.generalizedVelocity - expected.nu).lpNorm<Eigen::Infinity>() < 1e-8);
    }

    SUBCASE("posture weight never leaks into the hard tasks")
    {
        IkGains scaled;
        scaled.postureWeight *= 10.0;
        IkController base(IkGains{}, timeStep);
        IkController heavy(scaled, timeStep);
        const IkResult a = base.solve(kinDyn, refs);
        const IkResult b = heavy.solve(kinDyn, refs);
        REQUIRE(a.status == IkStatus::Solved);
        REQUIRE(b.status == IkStatus::Solved);

        const Eigen::MatrixXd comJacobian = kinDyn.comJacobian();
        const Eigen::MatrixXd leftJacobian = kinDyn.frameJacobian(model.leftFoot().frameIndex);
        const Eigen::MatrixXd rightJacobian = kinDyn.frameJacobian(model.rightFoot().frameIndex);
        CHECK((comJacobian * (a.generalizedVelocity - b.generalizedVelocity)).norm() < 1e-8);
        CHECK((leftJacobian * (a.generalizedVelocity - b.generalizedVelocity)).norm() < 1e-8);
        CHECK((rightJacobian * (a.generalizedVelocity - b.generalizedVelocity)).norm() < 1e-8);
        // while the redundancy resolution itself moves
        CHECK((a.generalizedVelocity - b.generalizedVelocity).lpNorm<Eigen::Infinity>() > 1e-6);
    }

    SUBCASE("two fresh controllers agree bit for bit")
    {
        IkController first(IkGains{}, timeStep);
        IkController second(IkGains{}, timeStep);
        const IkResult a = first.solve(kinDyn, refs);
        const IkResult b = second.solve(kinDyn, refs);
        REQUIRE(a.status == IkStatus::Solved);
        CHECK((a.generalizedVelocity - b.generalizedVelocity).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("ik joint rate bounds activate without breaking the tasks")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());
    const int joints = model.numJoints();

    IkReferences refs;
    refs.comPosition = kinDyn.comPosition();
    refs.leftFoot.position = kinDyn.frameTransform(model.leftFoot().frameIndex).translation();
    refs.rightFoot.position = kinDyn.frameTransform(model.rightFoot().frameIndex).translation();
    refs.posture = kinDyn.jointPositions() + Eigen::VectorXd::Constant(joints, 1.0);

    IkGains gains;
    gains.postureWeight = 50.0;
    gains.jointVelocityBound = 0.3;
    IkController controller(gains, 0.01);
    const IkResult result = controller.solve(kinDyn, refs);
    REQUIRE(result.status == IkStatus::Solved);

    const Eigen::VectorXd rates = result.generalizedVelocity.tail(joints);
    CHECK(rates.lpNorm<Eigen::Infinity>() <= 0.3 + 1e-9);
    int saturated = 0;
    for (int j = 0; j < joints; j++)
    {
        if (std::abs(rates(j)) >= 0.3 - 1e-6)
        {
            saturated++;
        }
    }
    CHECK(saturated >= 3);

    // the pinned tasks survive the saturation
    CHECK((kinDyn.comJacobian() * result.generalizedVelocity).norm() <= 1e-6);
    CHECK((kinDyn.frameJacobian(model.leftFoot().frameIndex) * result.generalizedVelocity)
              .lpNorm<Eigen::Infinity>()
          <= 1e-6);
    CHECK((kinDyn.frameJacobian(model.rightFoot().frameIndex) * result.generalizedVelocity)
              .lpNorm<Eigen::Infinity>()
          <= 1e-6);
}

TEST_CASE("ik integral states accumulate clamp and reset")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());

    IkReferences refs;
    refs.comPosition = kinDyn.comPosition();
    refs.leftFoot.position = kinDyn.frameTransform(model.leftFoot().frameIndex).translation();
    refs.rightFoot.inContact = false;
    refs.rightFoot.position = kinDyn.frameTransform(model.rightFoot().frameIndex).translation()
                              + Eigen::Vector3d(0.05, 0.0, 0.0);
    refs.rightFoot.rotation =
        projectToRotation(kinDyn.frameTransform(model.rightFoot().frameIndex).rotation());
    refs.posture = kinDyn.jointPositions();

    IkController controller(IkGains{}, 0.01);
    controller.solve(kinDyn, refs);
    // one Euler step of the constant 0.05 m error
    CHECK(controller.rightFootIntegral().x() == doctest::Approx(5e-4).epsilon(1e-12));
    CHECK(controller.comIntegral().norm() == 0.0);
    CHECK(controller.leftFootIntegral().norm() == 0.0);

    for (int tick = 0; tick < 99; tick++)
    {
        controller.solve(kinDyn, refs);
    }
    // 100 ticks accumulate 0.05 m s which saturates the 0.02 clamp
    CHECK(controller.rightFootIntegral().x() == 0.02);
    CHECK(controller.rightFootIntegral().y() == 0.0);

    // com error integrates and clamps on the negative side
    refs.comPosition = kinDyn.comPosition() + Eigen::Vector3d(-0.04, 0.0, 0.0);
    for (int tick = 0; tick < 100; tick++)
    {
        controller.solve(kinDyn, refs);
    }
    CHECK(controller.comIntegral().x() == -0.02);

    // regaining contact wipes the foot integral
    refs.rightFoot.inContact = true;
    controller.solve(kinDyn, refs);
    CHECK(controller.rightFootIntegral().norm() == 0.0);

    controller.reset();
    CHECK(controller.comIntegral().norm() == 0.0);
    CHECK(controller.leftFootIntegral().norm() == 0.0);
    CHECK(controller.rightFootIntegral().norm() == 0.0);
}

TEST_CASE("integrate joint positions clamps at the limits")
{
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(2, -0.6);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(2, 0.6);
    Eigen::VectorXd positions(2);
    positions << 0.5, -0.1;

    Eigen::VectorXd still = Eigen::VectorXd::Zero(2);
    CHECK((integrateJointPositions(positions, still, 0.01, lower, upper) - positions).norm()
          == 0.0);

    Eigen::VectorXd rate(2);
    rate << 1.0, -2.0;
    const Eigen::VectorXd stepped = integrateJointPositions(positions, rate, 0.01, lower, upper);
    CHECK(stepped(0) == doctest::Approx(0.51).epsilon(1e-14));
    CHECK(stepped(1) == doctest::Approx(-0.12).epsilon(1e-14));

    // saturation at the upper limit
    rate << 20.0, 0.0;
    CHECK(integrateJointPositions(positions, rate, 0.01, lower, upper)(0) == 0.6);

    CHECK_THROWS_AS(integrateJointPositions(positions, Eigen::VectorXd::Zero(3), 0.01, lower,
                                            upper),
                    std::invalid_argument);
}

TEST_CASE("torque gains validation rejects bad settings")
{
    CHECK_NOTHROW(TorqueGains{}.validate());

    TorqueGains bad;
    bad.torsoWeight = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.wrenchWeight(3) = -1e-4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.attitudeDamping = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.postureStiffness = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.footStiffness = -Eigen::Matrix3d::Identity();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.comHeightDamping = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.frictionCoefficient = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.frictionFacets = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = TorqueGains{};
    bad.minNormalForce = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("rotational pid matches its closed form")
{
    // zero error feeds the reference acceleration through
    const Eigen::Matrix3d attitude = expSkew(Eigen::Vector3d(0.2, -0.1, 0.3));
    const Eigen::Vector3d omega(0.4, -0.2, 0.1);
    const Eigen::Vector3d feedthrough(1.0, -2.0, 0.5);
    CHECK((TorqueController::rotationalPid(attitude, attitude, omega, omega, feedthrough, 1.0,
                                           10.0, 25.0)
           - feedthrough)
              .norm()
          < 1e-12);

    // a pure rate error excites both the damping and the coupling term
    const Eigen::Vector3d rateError(0.3, -0.1, 0.2);
    const Eigen::Vector3d out = TorqueController::rotationalPid(
        Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity(), rateError,
        Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 1.0, 10.0, 25.0);
    CHECK((out + (1.0 + 10.0) * rateError).norm() < 1e-14);

    // random inputs against a direct evaluation of the expression
    std::mt19937 rng(622);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; trial++)
    {
        const auto randomVector = [&]() {
            return Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        };
        const Eigen::Matrix3d rotation = expSkew(0.6 * randomVector());
        const Eigen::Matrix3d reference = expSkew(0.6 * randomVector());
        const Eigen::Vector3d velocity = randomVector();
        const Eigen::Vector3d velocityReference = randomVector();
        const Eigen::Vector3d acceleration = randomVector();
        const double c0 = 0.8;
        const double c1 = 7.0;
        const double c2 = 21.0;

        const Eigen::Matrix3d error = rotation * reference.transpose();
        const Eigen::Vector3d direct =
            acceleration - c0 * vee(skew(velocity) * error - error * skew(velocityReference))
            - c1 * (velocity - velocityReference) - c2 * vee(error);
        const Eigen::Vector3d law = TorqueController::rotationalPid(
            rotation, reference, velocity, velocityReference, acceleration, c0, c1, c2);
        CHECK((law - direct).norm() < 1e-10);
    }
}

TEST_CASE("linear pid matches its closed form")
{
    const Eigen::Vector3d feedthrough(0.1, 0.2, -0.3);
    CHECK((TorqueController::linearPid(Eigen::Vector3d::Ones(), Eigen::Vector3d::Ones(),
                                       Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                       feedthrough, 25.0 * Eigen::Matrix3d::Identity(),
                                       10.0 * Eigen::Matrix3d::Identity())
           - feedthrough)
              .norm()
          == 0.0);

    const Eigen::Vector3d positionError(0.02, -0.01, 0.04);
    CHECK((TorqueController::linearPid(positionError, Eigen::Vector3d::Zero(),
                                       Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                                       Eigen::Vector3d::Zero(),
                                       10.0 * Eigen::Matrix3d::Identity(),
                                       Eigen::Matrix3d::Zero())
           + 10.0 * positionError)
              .norm()
          < 1e-14);

    std::mt19937 rng(633);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; trial++)
    {
        const auto randomVector = [&]() {
            return Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        };
        const Eigen::Vector3d p = randomVector();
        const Eigen::Vector3d pRef = randomVector();
        const Eigen::Vector3d v = randomVector();
        const Eigen::Vector3d vRef = randomVector();
        const Eigen::Vector3d a = randomVector();
        Eigen::Matrix3d stiffness = Eigen::Matrix3d::Identity() * 12.0;
        stiffness(0, 1) = 1.5;
        Eigen::Matrix3d damping = Eigen::Matrix3d::Identity() * 4.0;
        const Eigen::Vector3d direct = a - damping * (v - vRef) - stiffness * (p - pRef);
        CHECK((TorqueController::linearPid(p, pRef, v, vRef, a, stiffness, damping) - direct)
                  .norm()
              < 1e-12);
    }
}

TEST_CASE("wrench feasibility rows sandwich the friction cone")
{
    const double mu = 1.0 / 3.0;
    const Eigen::Isometry3d flat = Eigen::Isometry3d::Identity();
    const WrenchFeasibility rows = wrenchFeasibilityRows(flat, mu, 8, 0.19, 0.09, 1.0);
    REQUIRE(rows.matrix.rows() == 13);

    Vector6 wrench = Vector6::Zero();
    wrench(2) = 300.0;
    CHECK(feasibilityMargin(rows, wrench) < 0.0); // strict interior

    wrench(0) = 30.0; // well inside the cone
    CHECK(feasibilityMargin(rows, wrench) < 0.0);
    wrench(0) = 150.0; // beyond mu fz = 100
    CHECK(feasibilityMargin(rows, wrench) > 0.0);
    wrench(0) = 0.0;

    wrench(3) = 12.0; // cop y = 0.04, inside the 0.045 half width
    CHECK(feasibilityMargin(rows, wrench) < 0.0);
    wrench(3) = 20.0; // cop y = 0.0667, outside
    CHECK(feasibilityMargin(rows, wrench) > 0.0);
    wrench(3) = 0.0;

    wrench(4) = -28.0; // cop x = 0.0933, inside the 0.095 half length
    CHECK(feasibilityMargin(rows, wrench) < 0.0);
    wrench(4) = -30.0; // cop x = 0.1, outside
    CHECK(feasibilityMargin(rows, wrench) > 0.0);
    wrench(4) = 0.0;

    wrench(2) = 0.5; // below the normal force floor
    CHECK(feasibilityMargin(rows, wrench) > 0.0);

    // The octagon is inscribed in the true cone: along every direction the
    // admissible tangential force tops out between mu fz cos(pi/8) and mu fz.
    const double fz = 200.0;
    std::mt19937 rng(644);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int trial = 0; trial < 50; trial++)
    {
        const double theta = angle(rng);
        double tightest = std::numeric_limits<double>::max();
        for (int k = 0; k < 8; k++)
        {
            const double facetAngle = 2.0 * std::numbers::pi * k / 8.0;
            const double along = std::cos(theta - facetAngle);
            if (along > 1e-12)
            {
                tightest =
                    std::min(tightest, mu * std::cos(std::numbers::pi / 8.0) * fz / along);
            }
        }
        CHECK(tightest <= mu * fz + 1e-9);
        CHECK(tightest >= mu * fz * std::cos(std::numbers::pi / 8.0) - 1e-9);

        // and the boundary wrench indeed sits on the row boundary
        Vector6 boundary = Vector6::Zero();
        boundary(0) = tightest * std::cos(theta);
        boundary(1) = tightest * std::sin(theta);
        boundary(2) = fz;
        CHECK(std::abs(feasibilityMargin(rows, boundary)) < 1e-9);
    }

    // Rotating the sole and expressing the same physical wrench in world
    // coordinates leaves every margin unchanged.
    Eigen::Isometry3d rotated = Eigen::Isometry3d::Identity();
    rotated.linear() = expSkew(Eigen::Vector3d(0.3, -0.2, 0.8));
    rotated.translation() = Eigen::Vector3d(0.4, -0.1, 0.2);
    const WrenchFeasibility rotatedRows = wrenchFeasibilityRows(rotated, mu, 8, 0.19, 0.09, 1.0);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; trial++)
    {
        Vector6 local;
        for (int i = 0; i < 6; i++)
        {
            local(i) = gauss(rng);
        }
        local(2) = 150.0 + 20.0 * gauss(rng);
        local.head<3>() = 30.0 * local.head<3>().normalized() + Eigen::Vector3d(0, 0, local(2));
        Vector6 world;
        world.head<3>() = rotated.rotation() * local.head<3>();
        world.tail<3>() = rotated.rotation() * local.tail<3>();
        const double flatMargin = feasibilityMargin(rows, local);
        const double rotatedMargin = feasibilityMargin(rotatedRows, world);
        CHECK(std::abs(flatMargin - rotatedMargin) < 1e-10);
    }
}

TEST_CASE("zmp equality rows reproduce the global zmp")
{
    SUBCASE("pure normal wrench at the foot center")
    {
        Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
        pose.translation() = Eigen::Vector3d(0.1, 0.05, 0.0);
        const Eigen::MatrixXd rows = zmpEqualityMatrix({pose}, Eigen::Vector2d(0.1, 0.05));
        Vector6 wrench = Vector6::Zero();
        wrench(2) = 300.0;
        CHECK((rows * wrench).norm() == 0.0);
    }

    SUBCASE("single support solutions round trip through the oracle")
    {
        std::mt19937 rng(655);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        for (int trial = 0; trial < 20; trial++)
        {
            Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
            // arbitrary sole orientation: one contact has no coplanarity mate
            pose.linear() = expSkew(Eigen::Vector3d(0.2 * uniform(rng), 0.2 * uniform(rng),
                                                    0.8 * uniform(rng)));
            pose.translation() =
                Eigen::Vector3d(0.3 * uniform(rng), 0.3 * uniform(rng), 0.1 * uniform(rng));
            const Eigen::Vector2d target = pose.translation().head<2>()
                                           + Eigen::Vector2d(0.03 * uniform(rng),
                                                             0.02 * uniform(rng));

            const Eigen::MatrixXd rows = zmpEqualityMatrix({pose}, target);
            Vector6 nominal = Vector6::Zero();
            nominal.head<3>() = 300.0 * pose.rotation().col(2);
            nominal.tail<3>() = pose.rotation() * Eigen::Vector3d(uniform(rng), uniform(rng),
                                                                  2.0 * uniform(rng));
            // project the nominal wrench onto the null space of the two rows
            const Eigen::Matrix2d gram = (rows * rows.transpose());
            const Vector6 solution =
                nominal - rows.transpose() * gram.ldlt().solve(rows * nominal);
            REQUIRE((rows * solution).norm() < 1e-9);

            SoleWrench contact;
            contact.solePose = pose;
            contact.wrench.head<3>() = pose.rotation().transpose() * solution.head<3>();
            contact.wrench.tail<3>() = pose.rotation().transpose() * solution.tail<3>();
            REQUIRE(contact.wrench(2) > 50.0);
            const auto zmp = globalZmp({contact}, 1.0);
            REQUIRE(zmp.has_value());
            CHECK((*zmp - target).norm() < 1e-9);
        }
    }

    SUBCASE("double support symmetry")
    {
        Eigen::Isometry3d left = Eigen::Isometry3d::Identity();
        left.translation() = Eigen::Vector3d(0.0, 0.08, 0.0);
        Eigen::Isometry3d right = Eigen::Isometry3d::Identity();
        right.translation() = Eigen::Vector3d(0.0, -0.08, 0.0);
        const Eigen::MatrixXd rows =
            zmpEqualityMatrix({left, right}, Eigen::Vector2d(0.0, 0.0));
        Eigen::VectorXd stacked = Eigen::VectorXd::Zero(12);
        stacked(2) = 150.0;
        stacked(8) = 150.0;
        CHECK((rows * stacked).norm() == 0.0);
    }

    SUBCASE("double support solutions reproduce the target")
    {
        std::mt19937 rng(666);
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        Eigen::Isometry3d left = Eigen::Isometry3d::Identity();
        left.linear() = rotationZ(0.2);
        left.translation() = Eigen::Vector3d(0.05, 0.09, 0.0);
        Eigen::Isometry3d right = Eigen::Isometry3d::Identity();
        right.linear() = rotationZ(-0.15);
        right.translation() = Eigen::Vector3d(-0.02, -0.07, 0.0);
        for (int trial = 0; trial < 20; trial++)
        {
            const Eigen::Vector2d target(0.02 * uniform(rng), 0.05 * uniform(rng));
            const Eigen::MatrixXd rows = zmpEqualityMatrix({left, right}, target);
            Eigen::VectorXd nominal = Eigen::VectorXd::Zero(12);
            nominal(2) = 140.0 + 40.0 * uniform(rng);
            nominal(8) = 140.0 + 40.0 * uniform(rng);
            nominal(5) = 2.0 * uniform(rng);  // torque about z
            nominal(11) = 2.0 * uniform(rng);
            const Eigen::Matrix2d gram = rows * rows.transpose();
            const Eigen::VectorXd solution =
                nominal - rows.transpose() * gram.ldlt().solve(rows * nominal);
            REQUIRE((rows * solution).norm() < 1e-9);

            std::vector<SoleWrench> contacts(2);
            contacts[0].solePose = left;
            contacts[0].wrench.head<3>() = left.rotation().transpose() * solution.head<3>();
            contacts[0].wrench.tail<3>() = left.rotation().transpose() * solution.segment<3>(3);
            contacts[1].solePose = right;
            contacts[1].wrench.head<3>() = right.rotation().transpose() * solution.segment<3>(6);
            contacts[1].wrench.tail<3>() = right.rotation().transpose() * solution.tail<3>();
            REQUIRE(contacts[0].wrench(2) > 50.0);
            REQUIRE(contacts[1].wrench(2) > 50.0);
            const auto zmp = globalZmp(contacts, 1.0);
            REQUIRE(zmp.has_value());
            CHECK((*zmp - target).norm() < 1e-9);
        }
    }
}

TEST_CASE("standing torque qp balances gravity")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());

    const TorqueGains gains;
    const TorqueReferences refs = holdingReferences(kinDyn);
    TorqueController controller(gains);
    const TorqueResult result = controller.solve(kinDyn, refs);

    checkTorqueInvariants(kinDyn, refs, gains, result);
    CHECK(result.accelerations.lpNorm<Eigen::Infinity>() < 1e-2);

    // the com height row pins the vertical acceleration, so the stance
    // carries exactly the robot weight
    const double weight = kinDyn.totalMass() * model.gravity();
    const double carried = result.leftWrench(2) + result.rightWrench(2);
    CHECK(std::abs(carried - weight) < 1e-6 * weight);
    // symmetric stance with the zmp under the com splits the load evenly
    CHECK(std::abs(result.leftWrench(2) - result.rightWrench(2)) < 1e-3 * weight);
}

TEST_CASE("torque qp tracks a swing foot while keeping the invariants")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());

    const TorqueGains gains;
    TorqueReferences refs = holdingReferences(kinDyn);
    const Eigen::Isometry3d rightPose = kinDyn.frameTransform(model.rightFoot().frameIndex);
    refs.rightFoot.inContact = false;
    refs.rightFoot.position = rightPose.translation() + Eigen::Vector3d(0.02, 0.0, 0.03);
    refs.rightFoot.twist << 0.05, 0.0, 0.1, 0.0, 0.0, 0.0;
    refs.rightFoot.twistRate << 0.2, 0.0, -0.1, 0.0, 0.0, 0.0;
    refs.zmp = kinDyn.frameTransform(model.leftFoot().frameIndex).translation().head<2>();

    TorqueController controller(gains);
    const TorqueResult result = controller.solve(kinDyn, refs);
    checkTorqueInvariants(kinDyn, refs, gains, result);

    // the swing task rows hold exactly: recompute the demanded acceleration
    Vector6 target = -kinDyn.frameBiasAcceleration(model.rightFoot().frameIndex);
    target.head<3>() += TorqueController::linearPid(
        rightPose.translation(), refs.rightFoot.position, Eigen::Vector3d::Zero(),
        refs.rightFoot.twist.head<3>(), refs.rightFoot.twistRate.head<3>(), gains.footStiffness,
        gains.footDamping);
    target.tail<3>() += TorqueController::rotationalPid(
        rightPose.rotation(), refs.rightFoot.rotation, Eigen::Vector3d::Zero(),
        refs.rightFoot.twist.tail<3>(), refs.rightFoot.twistRate.tail<3>(),
        gains.attitudeCoupling, gains.attitudeDamping, gains.attitudeStiffness);
    const Vector6 achieved =
        kinDyn.frameJacobian(model.rightFoot().frameIndex) * result.accelerations;
    CHECK((achieved - target).lpNorm<Eigen::Infinity>() <= 1e-6);

    // single support carries the whole weight on the left sole
    const double weight = kinDyn.totalMass() * model.gravity();
    CHECK(std::abs(result.leftWrench(2) - weight) < 1e-6 * weight);
    CHECK(result.rightWrench.norm() == 0.0);
}

TEST_CASE("perturbed stances keep every per tick invariant")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    const Stance nominal = bentStance();
    const int joints = model.numJoints();

    std::mt19937 rng(688);
    std::normal_distribution<double> gauss;
    const TorqueGains gains;
    for (int trial = 0; trial < 10; trial++)
    {
        Stance stance = nominal;
        for (int j = 0; j < joints; j++)
        {
            stance.jointPositions(j) += 0.04 * gauss(rng);
        }
        stance.basePose.translation().z() += 0.01 * gauss(rng);
        Vector6 baseVelocity;
        Eigen::VectorXd jointVelocities(joints);
        for (int k = 0; k < 6; k++)
        {
            baseVelocity(k) = 0.05 * gauss(rng);
        }
        for (int j = 0; j < joints; j++)
        {
            jointVelocities(j) = 0.1 * gauss(rng);
        }
        kinDyn.setState(stance.basePose, stance.jointPositions, baseVelocity, jointVelocities);

        TorqueReferences refs = holdingReferences(kinDyn);
        refs.posture = nominal.jointPositions;
        refs.zmp = Eigen::Vector2d(-0.01, 0.0);

        TorqueController controller(gains);
        const TorqueResult result = controller.solve(kinDyn, refs);
        checkTorqueInvariants(kinDyn, refs, gains, result);
    }
}

TEST_CASE("heavier tangential wrench weights pull the forces towards nominal")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    // a slightly twisted stance needs lateral forces to hold the tilted soles
    Stance stance = bentStance();
    std::mt19937 rng(699);
    std::normal_distribution<double> gauss;
    for (int j = 0; j < model.numJoints(); j++)
    {
        stance.jointPositions(j) += 0.03 * gauss(rng);
    }
    kinDyn.setState(stance.basePose, stance.jointPositions, Vector6::Zero(),
                    Eigen::VectorXd::Zero(model.numJoints()));

    TorqueReferences refs = holdingReferences(kinDyn);
    refs.zmp = kinDyn.comPosition().head<2>() + Eigen::Vector2d(0.01, 0.0);

    // the x y wrench cost penalizes the squared deviation from the nominal
    // weight share along the sole normal; scaling that weight must shrink
    // exactly this deviation, never increase it
    const double weightShare = 0.5 * kinDyn.totalMass() * model.gravity();
    const Eigen::Vector2d leftNominal =
        weightShare
        * kinDyn.frameTransform(model.leftFoot().frameIndex).rotation().col(2).head<2>();
    const Eigen::Vector2d rightNominal =
        weightShare
        * kinDyn.frameTransform(model.rightFoot().frameIndex).rotation().col(2).head<2>();

    double previous = std::numeric_limits<double>::max();
    bool first = true;
    for (const double weight : {1e-3, 1e-1, 10.0})
    {
        TorqueGains gains;
        gains.wrenchWeight(0) = weight;
        gains.wrenchWeight(1) = weight;
        TorqueController controller(gains);
        const TorqueResult result = controller.solve(kinDyn, refs);
        REQUIRE(result.status == TorqueStatus::Solved);
        const double deviation =
            (result.leftWrench.head<2>() - leftNominal).squaredNorm()
            + (result.rightWrench.head<2>() - rightNominal).squaredNorm();
        if (first)
        {
            CHECK(deviation > 1e-4); // the scenario genuinely fights the nominal
            first = false;
        }
        CHECK(deviation <= previous + 1e-9);
        previous = deviation;
    }
}

TEST_CASE("zmp references outside the stance hull are reported")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());

    TorqueReferences refs = holdingReferences(kinDyn);
    refs.zmp = Eigen::Vector2d(1.0, 0.0);
    TorqueController controller{TorqueGains{}};
    const TorqueResult result = controller.solve(kinDyn, refs);
    CHECK(result.status == TorqueStatus::ZmpReferenceInfeasible);
    CHECK(!result.diagnosis.empty());
    CHECK(result.torques.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("torque qp matches the active set enumeration oracle")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());

    SUBCASE("interior optimum")
    {
        const TorqueGains gains;
        const TorqueReferences refs = holdingReferences(kinDyn);
        TorqueController controller(gains);
        const TorqueResult result = controller.solve(kinDyn, refs);
        REQUIRE(result.status == TorqueStatus::Solved);

        const QpProblem problem = assembleTorqueProblem(kinDyn, refs, gains);
        const auto enumerated = testsupport::solveQpByEnumeration(problem);
        REQUIRE(enumerated.has_value());

        const int velocityDim = 6 + model.numJoints();
        const double tol = 1e-5 * std::max(1.0, enumerated->primal.lpNorm<Eigen::Infinity>());
        CHECK((enumerated->primal.head(velocityDim) - result.accelerations)
                  .lpNorm<Eigen::Infinity>()
              < tol);
        CHECK((enumerated->primal.segment(velocityDim, model.numJoints()) - result.torques)
                  .lpNorm<Eigen::Infinity>()
              < tol);
        CHECK((enumerated->primal.segment<6>(velocityDim + model.numJoints())
               - result.leftWrench)
                  .lpNorm<Eigen::Infinity>()
              < tol);
        CHECK((enumerated->primal.tail<6>() - result.rightWrench).lpNorm<Eigen::Infinity>()
              < tol);
    }

    SUBCASE("an active normal force floor")
    {
        // shifting the zmp towards the left foot starves the right one; with
        // sole torques priced out of reshaping the pressure points, the load
        // must move through the normal forces and the raised floor binds
        TorqueGains gains;
        gains.minNormalForce = 120.0;
        gains.wrenchWeight(3) = 10.0;
        gains.wrenchWeight(4) = 10.0;
        TorqueReferences refs = holdingReferences(kinDyn);
        refs.zmp = Eigen::Vector2d(kinDyn.comPosition().x(), 0.04);
        TorqueController controller(gains);
        const TorqueResult result = controller.solve(kinDyn, refs);
        REQUIRE(result.status == TorqueStatus::Solved);
        CHECK(result.rightWrench(2) == doctest::Approx(120.0).epsilon(1e-6));

        const QpProblem problem = assembleTorqueProblem(kinDyn, refs, gains);
        const auto enumerated = testsupport::solveQpByEnumeration(problem);
        REQUIRE(enumerated.has_value());
        const double tol = 1e-5 * std::max(1.0, enumerated->primal.lpNorm<Eigen::Infinity>());
        CHECK((enumerated->primal.head(6 + model.numJoints()) - result.accelerations)
                  .lpNorm<Eigen::Infinity>()
              < tol);
        CHECK((enumerated->primal.tail<6>() - result.rightWrench).lpNorm<Eigen::Infinity>()
              < tol);
    }
}

TEST_CASE("torque controller is deterministic")
{
    const Model& model = testModel();
    KinDyn kinDyn(model);
    applyStance(kinDyn, bentStance());
    const TorqueReferences refs = holdingReferences(kinDyn);

    TorqueController first{TorqueGains{}};
    TorqueController second{TorqueGains{}};
    const TorqueResult a = first.solve(kinDyn, refs);
    const TorqueResult b = second.solve(kinDyn, refs);
    REQUIRE(a.status == TorqueStatus::Solved);
    CHECK((a.torques - b.torques).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.accelerations - b.accelerations).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.leftWrench - b.leftWrench).lpNorm<Eigen::Infinity>() == 0.0);
}
