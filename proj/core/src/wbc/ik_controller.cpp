#include <dcmwalk/wbc/ik_controller.hpp>

#include <sstream>
#include <stdexcept>

#include <dcmwalk/math_utils.hpp>

namespace dcmwalk
{

namespace
{

double minSymmetricEigenvalue(const Eigen::Matrix3d& matrix)
{
    const Eigen::Matrix3d symmetric = 0.5 * (matrix + matrix.transpose());
    return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(symmetric).eigenvalues().minCoeff();
}

void requirePositiveDefinite(const Eigen::Matrix3d& matrix, const char* name)
{
    if (minSymmetricEigenvalue(matrix) <= 0.0)
    {
        throw std::invalid_argument(std::string("IkGains: ") + name
                                    + " must be positive definite");
    }
}

void requireRotation(const Eigen::Matrix3d& rotation, const char* name)
{
    if (!isRotationMatrix(rotation, 1e-9))
    {
        throw std::invalid_argument(std::string("IkController: ") + name
                                    + " reference is not a rotation");
    }
}

Eigen::Vector3d clamped(const Eigen::Vector3d& value, const Eigen::Vector3d& limit)
{
    return value.cwiseMax(-limit).cwiseMin(limit);
}

} // namespace

void IkGains::validate() const
{
    if (torsoWeight < 0.0 || postureWeight < 0.0)
    {
        throw std::invalid_argument("IkGains: task weights must be non-negative");
    }
    if (!(postureGain > 0.0))
    {
        throw std::invalid_argument("IkGains: posture gain must be positive");
    }
    requirePositiveDefinite(footLinearGain, "foot linear gain");
    requirePositiveDefinite(footIntegralGain, "foot integral gain");
    requirePositiveDefinite(footAngularGain, "foot angular gain");
    requirePositiveDefinite(torsoAngularGain, "torso angular gain");
    requirePositiveDefinite(comGain, "com gain");
    requirePositiveDefinite(comIntegralGain, "com integral gain");
    if ((footIntegralLimit.array() < 0.0).any() || (comIntegralLimit.array() < 0.0).any())
    {
        throw std::invalid_argument("IkGains: integral limits must be non-negative");
    }
    if (!(jointVelocityBound > 0.0))
    {
        throw std::invalid_argument("IkGains: joint velocity bound must be positive");
    }
}

IkController::IkController(const IkGains& gains, double timeStep, std::string torsoFrame)
    : m_gains(gains)
    , m_timeStep(timeStep)
    , m_torsoFrame(std::move(torsoFrame))
{
    m_gains.validate();
    if (!(timeStep > 0.0))
    {
        throw std::invalid_argument("IkController: time step must be positive");
    }
}

Eigen::Vector3d IkController::rotationError(const Eigen::Matrix3d& rotation,
                                            const Eigen::Matrix3d& reference)
{
    return vee(rotation * reference.transpose());
}

Eigen::Vector3d IkController::desiredAngularVelocity(const Eigen::Matrix3d& rotation,
                                                     const Eigen::Matrix3d& reference,
                                                     const Eigen::Matrix3d& gain)
{
    return -gain * rotationError(rotation, reference);
}

IkResult IkController::solve(const KinDyn& kinDyn, const IkReferences& references)
{
    const Model& model = kinDyn.model();
    const int joints = kinDyn.numJoints();
    const int variables = 6 + joints;

    if (references.posture.size() != joints)
    {
        throw std::invalid_argument("IkController: posture reference has the wrong size");
    }
    requireRotation(references.torsoRotation, "torso");
    requireRotation(references.leftFoot.rotation, "left foot");
    requireRotation(references.rightFoot.rotation, "right foot");

    // Com command with a clamped error integral.
    const Eigen::Vector3d comError = references.comPosition - kinDyn.comPosition();
    m_comIntegral = clamped(m_comIntegral + m_timeStep * comError, m_gains.comIntegralLimit);
    const Eigen::Vector3d comCommand = references.comVelocity + m_gains.comGain * comError
                                       + m_gains.comIntegralGain * m_comIntegral;

    // Foot commands: stance feet are pinned, the swing foot tracks its
    // reference. The integral state restarts whenever a foot regains contact.
    const auto footCommand = [&](const IkFootReference& reference, int frameIndex,
                                 Eigen::Vector3d& integral) -> Eigen::Matrix<double, 6, 1> {
        if (reference.inContact)
        {
            integral.setZero();
            return Eigen::Matrix<double, 6, 1>::Zero();
        }
        const Eigen::Isometry3d pose = kinDyn.frameTransform(frameIndex);
        const Eigen::Vector3d positionError = reference.position - pose.translation();
        integral = clamped(integral + m_timeStep * positionError, m_gains.footIntegralLimit);

        Eigen::Matrix<double, 6, 1> command = reference.twist;
        command.head<3>() +=
            m_gains.footLinearGain * positionError + m_gains.footIntegralGain * integral;
        command.tail<3>() +=
            desiredAngularVelocity(pose.rotation(), reference.rotation, m_gains.footAngularGain);
        return command;
    };

    const int leftFrame = model.leftFoot().frameIndex;
    const int rightFrame = model.rightFoot().frameIndex;
    const Eigen::Matrix<double, 6, 1> leftCommand =
        footCommand(references.leftFoot, leftFrame, m_leftFootIntegral);
    const Eigen::Matrix<double, 6, 1> rightCommand =
        footCommand(references.rightFoot, rightFrame, m_rightFootIntegral);

    // Soft tasks: torso attitude (angular rows only) and posture.
    const int torsoFrame = model.frameIndex(m_torsoFrame);
    const Eigen::MatrixXd torsoJacobian =
        kinDyn.frameJacobian(torsoFrame).bottomRows<3>();
    const Eigen::Vector3d torsoCommand = desiredAngularVelocity(
        kinDyn.frameTransform(torsoFrame).rotation(), references.torsoRotation,
        m_gains.torsoAngularGain);
    const Eigen::VectorXd postureCommand =
        -m_gains.postureGain * (kinDyn.jointPositions() - references.posture);

    QpProblem problem;
    problem.hessian = Eigen::MatrixXd::Zero(variables, variables);
    problem.hessian += 2.0 * m_gains.torsoWeight * torsoJacobian.transpose() * torsoJacobian;
    problem.hessian.bottomRightCorner(joints, joints).diagonal().array() +=
        2.0 * m_gains.postureWeight;
    problem.hessian.diagonal().array() += 2.0 * 1e-8;

    problem.gradient = Eigen::VectorXd::Zero(variables);
    problem.gradient -= 2.0 * m_gains.torsoWeight * torsoJacobian.transpose() * torsoCommand;
    problem.gradient.tail(joints) -= 2.0 * m_gains.postureWeight * postureCommand;

    const int rows = 3 + 12 + joints;
    problem.constraintMatrix = Eigen::MatrixXd::Zero(rows, variables);
    problem.lowerBound.resize(rows);
    problem.upperBound.resize(rows);

    problem.constraintMatrix.topRows<3>() = kinDyn.comJacobian();
    problem.lowerBound.head<3>() = comCommand;
    problem.upperBound.head<3>() = comCommand;

    problem.constraintMatrix.middleRows<6>(3) = kinDyn.frameJacobian(leftFrame);
    problem.lowerBound.segment<6>(3) = leftCommand;
    problem.upperBound.segment<6>(3) = leftCommand;

    problem.constraintMatrix.middleRows<6>(9) = kinDyn.frameJacobian(rightFrame);
    problem.lowerBound.segment<6>(9) = rightCommand;
    problem.upperBound.segment<6>(9) = rightCommand;

    const Eigen::VectorXd rateBound =
        model.jointVelocityLimits().cwiseMin(m_gains.jointVelocityBound);
    problem.constraintMatrix.bottomRows(joints).rightCols(joints) =
        Eigen::MatrixXd::Identity(joints, joints);
    problem.lowerBound.tail(joints) = -rateBound;
    problem.upperBound.tail(joints) = rateBound;

    const QpSolution solution = solveQp(problem, QpSettings{}, m_warmStart);

    IkResult result;
    result.iterations = solution.iterations;
    result.polished = solution.polished;
    result.comVelocityCommand = comCommand;
    result.leftFootCommand = leftCommand;
    result.rightFootCommand = rightCommand;
    result.generalizedVelocity = Eigen::VectorXd::Zero(variables);

    if (solution.status == QpStatus::Solved)
    {
        result.status = IkStatus::Solved;
        result.generalizedVelocity = solution.primal;
        m_warmStart = QpWarmStart{solution.primal, solution.dual};
        return result;
    }

    result.status =
        solution.status == QpStatus::MaxIterations ? IkStatus::Failed : IkStatus::Infeasible;
    m_warmStart.reset();

    // Name the rows that drive the failure so the caller can log something
    // more useful than a bare status.
    const double peak = solution.dual.size() > 0 ? solution.dual.cwiseAbs().maxCoeff() : 0.0;
    std::ostringstream message;
    message << "ik qp " << statusString(solution.status) << "; suspect rows:";
    for (Eigen::Index i = 0; i < solution.dual.size(); i++)
    {
        if (std::abs(solution.dual(i)) < 0.5 * peak || peak == 0.0)
        {
            continue;
        }
        if (i < 3)
        {
            message << " com[" << i << "]";
        }
        else if (i < 9)
        {
            message << " left_foot[" << i - 3 << "]";
        }
        else if (i < 15)
        {
            message << " right_foot[" << i - 9 << "]";
        }
        else
        {
            message << " rate_bound[" << model.joint(static_cast<int>(i) - 15).name << "]";
        }
    }
    result.diagnosis = message.str();
    return result;
}

void IkController::reset()
{
    m_comIntegral.setZero();
    m_leftFootIntegral.setZero();
    m_rightFootIntegral.setZero();
    m_warmStart.reset();
}

Eigen::VectorXd integrateJointPositions(const Eigen::VectorXd& positions,
                                        const Eigen::VectorXd& velocities,
                                        double timeStep,
                                        const Eigen::VectorXd& lowerLimits,
                                        const Eigen::VectorXd& upperLimits)
{
    if (velocities.size() != positions.size() || lowerLimits.size() != positions.size()
        || upperLimits.size() != positions.size())
    {
        throw std::invalid_argument("integrateJointPositions: size mismatch");
    }
    return (positions + timeStep * velocities).cwiseMax(lowerLimits).cwiseMin(upperLimits);
}

} // namespace dcmwalk
