#include <dcmwalk/wbc/torque_controller.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <dcmwalk/control/support_polygon.hpp>
#include <dcmwalk/math_utils.hpp>
#include <dcmwalk/rigidbody/zmp.hpp>

namespace dcmwalk
{

namespace
{

void requirePositiveDefinite(const Eigen::Matrix3d& matrix, const char* name)
{
    const Eigen::Matrix3d symmetric = 0.5 * (matrix + matrix.transpose());
    if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(symmetric).eigenvalues().minCoeff() <= 0.0)
    {
        throw std::invalid_argument(std::string("TorqueGains: ") + name
                                    + " must be positive definite");
    }
}

void requireRotation(const Eigen::Matrix3d& rotation, const char* name)
{
    if (!isRotationMatrix(rotation, 1e-9))
    {
        throw std::invalid_argument(std::string("TorqueController: ") + name
                                    + " reference is not a rotation");
    }
}

} // namespace

void TorqueGains::validate() const
{
    if (torsoWeight < 0.0 || postureWeight < 0.0 || torqueWeight < 0.0
        || (wrenchWeight.array() < 0.0).any())
    {
        throw std::invalid_argument("TorqueGains: task weights must be non-negative");
    }
    if (!(attitudeCoupling > 0.0) || !(attitudeDamping > 0.0) || !(attitudeStiffness > 0.0))
    {
        throw std::invalid_argument("TorqueGains: attitude pid gains must be positive");
    }
    if (!(postureStiffness > 0.0) || !(postureDamping > 0.0))
    {
        throw std::invalid_argument("TorqueGains: posture gains must be positive");
    }
    requirePositiveDefinite(footStiffness, "foot stiffness");
    requirePositiveDefinite(footDamping, "foot damping");
    if (!(comHeightStiffness > 0.0) || !(comHeightDamping > 0.0))
    {
        throw std::invalid_argument("TorqueGains: com height gains must be positive");
    }
    if (!(frictionCoefficient > 0.0))
    {
        throw std::invalid_argument("TorqueGains: friction coefficient must be positive");
    }
    if (frictionFacets < 3)
    {
        throw std::invalid_argument("TorqueGains: friction pyramid needs at least three facets");
    }
    if (!(minNormalForce > 0.0))
    {
        throw std::invalid_argument("TorqueGains: minimum normal force must be positive");
    }
}

WrenchFeasibility wrenchFeasibilityRows(const Eigen::Isometry3d& solePose,
                                        double frictionCoefficient,
                                        int facets,
                                        double soleLength,
                                        double soleWidth,
                                        double minNormalForce)
{
    const int rows = facets + 4 + 1;
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(rows, 6);
    Eigen::VectorXd upper = Eigen::VectorXd::Zero(rows);

    // Inner pyramid: the polygonal cross section's corners touch the true
    // cone, so every admissible wrench satisfies |f_t| <= mu f_z exactly.
    const double reduced =
        frictionCoefficient * std::cos(std::numbers::pi / static_cast<double>(facets));
    for (int k = 0; k < facets; k++)
    {
        const double angle = 2.0 * std::numbers::pi * k / static_cast<double>(facets);
        local(k, 0) = std::cos(angle);
        local(k, 1) = std::sin(angle);
        local(k, 2) = -reduced;
    }

    // Local cop (-ty/fz, tx/fz) inside the sole rectangle.
    const double halfLength = 0.5 * soleLength;
    const double halfWidth = 0.5 * soleWidth;
    local(facets + 0, 4) = -1.0;
    local(facets + 0, 2) = -halfLength;
    local(facets + 1, 4) = 1.0;
    local(facets + 1, 2) = -halfLength;
    local(facets + 2, 3) = 1.0;
    local(facets + 2, 2) = -halfWidth;
    local(facets + 3, 3) = -1.0;
    local(facets + 3, 2) = -halfWidth;

    local(facets + 4, 2) = -1.0;
    upper(facets + 4) = -minNormalForce;

    // The rows act on the sole frame wrench; fold in the world-to-sole
    // rotation so callers can constrain world wrenches directly.
    const Eigen::Matrix3d toLocal = solePose.rotation().transpose();
    WrenchFeasibility feasibility;
    feasibility.matrix.resize(rows, 6);
    feasibility.matrix.leftCols<3>() = local.leftCols<3>() * toLocal;
    feasibility.matrix.rightCols<3>() = local.rightCols<3>() * toLocal;
    feasibility.upperBound = upper;
    return feasibility;
}

Eigen::MatrixXd zmpEqualityMatrix(const std::vector<Eigen::Isometry3d>& solePoses,
                                  const Eigen::Vector2d& zmpTarget)
{
    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(2, 6 * static_cast<Eigen::Index>(solePoses.size()));
    for (std::size_t k = 0; k < solePoses.size(); k++)
    {
        const Eigen::Matrix3d rotation = solePoses[k].rotation();
        const Eigen::Vector3d position = solePoses[k].translation();
        const Eigen::Vector3d normal = rotation.col(2);

        // Denominator-free center of pressure: sum_k fz_k (p_k - r) +
        // (R e_z x tau_local)_xy = 0 with fz the sole normal force.
        const Eigen::Index column = static_cast<Eigen::Index>(6 * k);
        matrix.block<1, 3>(0, column) = (position.x() - zmpTarget.x()) * normal.transpose();
        matrix.block<1, 3>(1, column) = (position.y() - zmpTarget.y()) * normal.transpose();

        const Eigen::Matrix3d torqueMap =
            rotation * skew(Eigen::Vector3d::UnitZ()) * rotation.transpose();
        matrix.block<2, 3>(0, column + 3) = torqueMap.topRows<2>();
    }
    return matrix;
}

TorqueController::TorqueController(const TorqueGains& gains, std::string torsoFrame)
    : m_gains(gains)
    , m_torsoFrame(std::move(torsoFrame))
{
    m_gains.validate();
}

Eigen::Vector3d TorqueController::rotationalPid(const Eigen::Matrix3d& rotation,
                                                const Eigen::Matrix3d& rotationReference,
                                                const Eigen::Vector3d& angularVelocity,
                                                const Eigen::Vector3d& angularVelocityReference,
                                                const Eigen::Vector3d& angularAccelerationReference,
                                                double c0,
                                                double c1,
                                                double c2)
{
    const Eigen::Matrix3d error = rotation * rotationReference.transpose();
    return angularAccelerationReference
           - c0 * vee(skew(angularVelocity) * error - error * skew(angularVelocityReference))
           - c1 * (angularVelocity - angularVelocityReference) - c2 * vee(error);
}

Eigen::Vector3d TorqueController::linearPid(const Eigen::Vector3d& position,
                                            const Eigen::Vector3d& positionReference,
                                            const Eigen::Vector3d& velocity,
                                            const Eigen::Vector3d& velocityReference,
                                            const Eigen::Vector3d& accelerationReference,
                                            const Eigen::Matrix3d& stiffness,
                                            const Eigen::Matrix3d& damping)
{
    return accelerationReference - damping * (velocity - velocityReference)
           - stiffness * (position - positionReference);
}

TorqueResult TorqueController::solve(const KinDyn& kinDyn, const TorqueReferences& references)
{
    const Model& model = kinDyn.model();
    const int joints = kinDyn.numJoints();
    const int velocityDim = 6 + joints;

    if (references.posture.size() != joints || references.postureVelocity.size() != joints)
    {
        throw std::invalid_argument("TorqueController: posture reference has the wrong size");
    }
    requireRotation(references.torsoRotation, "torso");
    requireRotation(references.leftFoot.rotation, "left foot");
    requireRotation(references.rightFoot.rotation, "right foot");
    if (!references.leftFoot.inContact && !references.rightFoot.inContact)
    {
        throw std::invalid_argument("TorqueController: at least one foot must be in contact");
    }

    struct Contact
    {
        const char* name = "";
        int frameIndex = -1;
        Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
        double length = 0.0;
        double width = 0.0;
    };
    std::vector<Contact> contacts;
    if (references.leftFoot.inContact)
    {
        const FootDescription& foot = model.leftFoot();
        contacts.push_back({"left", foot.frameIndex, kinDyn.frameTransform(foot.frameIndex),
                            foot.length, foot.width});
    }
    if (references.rightFoot.inContact)
    {
        const FootDescription& foot = model.rightFoot();
        contacts.push_back({"right", foot.frameIndex, kinDyn.frameTransform(foot.frameIndex),
                            foot.length, foot.width});
    }

    TorqueResult result;
    result.accelerations = Eigen::VectorXd::Zero(velocityDim);
    result.torques = Eigen::VectorXd::Zero(joints);

    // The zmp equality only has solutions with the reference inside the hull
    // of the stance soles; report that separately so the caller can project.
    std::vector<Eigen::Vector2d> corners;
    for (const Contact& contact : contacts)
    {
        const FootDescription& foot = model.foot(contact.name);
        for (const Eigen::Vector3d& corner : foot.corners())
        {
            corners.push_back((contact.pose * corner).head<2>());
        }
    }
    const SupportPolygon hull = SupportPolygon::fromPoints(corners);
    if (!hull.contains(references.zmp, 1e-9))
    {
        result.status = TorqueStatus::ZmpReferenceInfeasible;
        std::ostringstream message;
        message << "zmp reference " << hull.margin(references.zmp) << " m outside the stance hull";
        result.diagnosis = message.str();
        return result;
    }

    const int contactCount = static_cast<int>(contacts.size());
    const int variables = velocityDim + joints + 6 * contactCount;
    const int torqueOffset = velocityDim;
    const int wrenchOffset = velocityDim + joints;

    // Task targets.
    const int torsoFrame = model.frameIndex(m_torsoFrame);
    const Eigen::MatrixXd torsoJacobian = kinDyn.frameJacobian(torsoFrame).bottomRows<3>();
    const Eigen::Vector3d torsoBias = kinDyn.frameBiasAcceleration(torsoFrame).tail<3>();
    const Eigen::Vector3d torsoTarget =
        rotationalPid(kinDyn.frameTransform(torsoFrame).rotation(), references.torsoRotation,
                      kinDyn.frameVelocity(torsoFrame).tail<3>(),
                      references.torsoAngularVelocity, references.torsoAngularAcceleration,
                      m_gains.attitudeCoupling, m_gains.attitudeDamping, m_gains.attitudeStiffness)
        - torsoBias;

    const Eigen::VectorXd postureTarget =
        -m_gains.postureDamping * (kinDyn.jointVelocities() - references.postureVelocity)
        - m_gains.postureStiffness * (kinDyn.jointPositions() - references.posture);

    // Cost over u = (nuDot, tau, wrenches).
    QpProblem problem;
    problem.hessian = Eigen::MatrixXd::Zero(variables, variables);
    problem.gradient = Eigen::VectorXd::Zero(variables);

    problem.hessian.topLeftCorner(velocityDim, velocityDim) +=
        2.0 * m_gains.torsoWeight * torsoJacobian.transpose() * torsoJacobian;
    problem.gradient.head(velocityDim) -=
        2.0 * m_gains.torsoWeight * torsoJacobian.transpose() * torsoTarget;

    problem.hessian.block(6, 6, joints, joints).diagonal().array() +=
        2.0 * m_gains.postureWeight;
    problem.gradient.segment(6, joints) -= 2.0 * m_gains.postureWeight * postureTarget;

    problem.hessian.block(torqueOffset, torqueOffset, joints, joints).diagonal().array() +=
        2.0 * m_gains.torqueWeight;

    const double weightShare =
        kinDyn.totalMass() * model.gravity() / static_cast<double>(contactCount);
    for (int k = 0; k < contactCount; k++)
    {
        const int column = wrenchOffset + 6 * k;
        problem.hessian.block<6, 6>(column, column).diagonal() += 2.0 * m_gains.wrenchWeight;
        if (m_gains.wrenchAboutNominal)
        {
            Eigen::Matrix<double, 6, 1> nominal = Eigen::Matrix<double, 6, 1>::Zero();
            nominal.head<3>() = weightShare * contacts[static_cast<size_t>(k)].pose.rotation().col(2);
            problem.gradient.segment<6>(column) -= 2.0 * m_gains.wrenchWeight.cwiseProduct(nominal);
        }
    }
    problem.hessian.diagonal().array() += 2.0 * 1e-8;

    // Equalities: dynamics, both feet, com height, zmp.
    const int equalityRows = velocityDim + 12 + 1 + 2;
    const int inequalityRows = 0 + contactCount * (m_gains.frictionFacets + 5) + joints;
    const int rows = equalityRows + inequalityRows;

    problem.constraintMatrix = Eigen::MatrixXd::Zero(rows, variables);
    problem.lowerBound = Eigen::VectorXd::Constant(rows, -kQpInfinity);
    problem.upperBound.resize(rows);

    int row = 0;

    // -M nuDot + B tau + sum J^T f = h.
    problem.constraintMatrix.block(row, 0, velocityDim, velocityDim) = -kinDyn.massMatrix();
    problem.constraintMatrix.block(row + 6, torqueOffset, joints, joints) =
        Eigen::MatrixXd::Identity(joints, joints);
    for (int k = 0; k < contactCount; k++)
    {
        problem.constraintMatrix.block(row, wrenchOffset + 6 * k, velocityDim, 6) =
            kinDyn.frameJacobian(contacts[static_cast<size_t>(k)].frameIndex).transpose();
    }
    const Eigen::VectorXd bias = kinDyn.generalizedBias();
    problem.lowerBound.segment(row, velocityDim) = bias;
    problem.upperBound.segment(row, velocityDim) = bias;
    row += velocityDim;

    // Foot acceleration tasks, stance feet pinned.
    const auto footRows = [&](const TorqueFootReference& reference, const FootDescription& foot) {
        const Eigen::MatrixXd jacobian = kinDyn.frameJacobian(foot.frameIndex);
        const Eigen::Matrix<double, 6, 1> frameBias =
            kinDyn.frameBiasAcceleration(foot.frameIndex);
        Eigen::Matrix<double, 6, 1> target = -frameBias;
        if (!reference.inContact)
        {
            const Eigen::Isometry3d pose = kinDyn.frameTransform(foot.frameIndex);
            const Eigen::Matrix<double, 6, 1> twist = kinDyn.frameVelocity(foot.frameIndex);
            target.head<3>() +=
                linearPid(pose.translation(), reference.position, twist.head<3>(),
                          reference.twist.head<3>(), reference.twistRate.head<3>(),
                          m_gains.footStiffness, m_gains.footDamping);
            target.tail<3>() += rotationalPid(
                pose.rotation(), reference.rotation, twist.tail<3>(), reference.twist.tail<3>(),
                reference.twistRate.tail<3>(), m_gains.attitudeCoupling, m_gains.attitudeDamping,
                m_gains.attitudeStiffness);
        }
        problem.constraintMatrix.block(row, 0, 6, velocityDim) = jacobian;
        problem.lowerBound.segment<6>(row) = target;
        problem.upperBound.segment<6>(row) = target;
        row += 6;
    };
    footRows(references.leftFoot, model.leftFoot());
    footRows(references.rightFoot, model.rightFoot());

    // Com height acceleration.
    const double heightTarget =
        references.comHeightAcceleration
        - m_gains.comHeightDamping * (kinDyn.comVelocity().z() - references.comHeightRate)
        - m_gains.comHeightStiffness * (kinDyn.comPosition().z() - references.comHeight)
        - kinDyn.comBiasAcceleration().z();
    problem.constraintMatrix.block(row, 0, 1, velocityDim) = kinDyn.comJacobian().row(2);
    problem.lowerBound(row) = heightTarget;
    problem.upperBound(row) = heightTarget;
    row += 1;

    // Global zmp equality over the stacked wrenches.
    std::vector<Eigen::Isometry3d> solePoses;
    for (const Contact& contact : contacts)
    {
        solePoses.push_back(contact.pose);
    }
    problem.constraintMatrix.block(row, wrenchOffset, 2, 6 * contactCount) =
        zmpEqualityMatrix(solePoses, references.zmp);
    problem.lowerBound.segment<2>(row).setZero();
    problem.upperBound.segment<2>(row).setZero();
    row += 2;

    // Wrench feasibility per contact.
    for (int k = 0; k < contactCount; k++)
    {
        const Contact& contact = contacts[static_cast<size_t>(k)];
        const WrenchFeasibility feasibility =
            wrenchFeasibilityRows(contact.pose, m_gains.frictionCoefficient,
                                  m_gains.frictionFacets, contact.length, contact.width,
                                  m_gains.minNormalForce);
        const int count = static_cast<int>(feasibility.matrix.rows());
        problem.constraintMatrix.block(row, wrenchOffset + 6 * k, count, 6) = feasibility.matrix;
        problem.upperBound.segment(row, count) = feasibility.upperBound;
        row += count;
    }

    // Torque limits.
    const Eigen::VectorXd torqueLimit = model.jointTorqueLimits();
    problem.constraintMatrix.block(row, torqueOffset, joints, joints) =
        Eigen::MatrixXd::Identity(joints, joints);
    problem.lowerBound.segment(row, joints) = -torqueLimit;
    problem.upperBound.segment(row, joints) = torqueLimit;
    row += joints;

    const QpSolution solution = solveQp(problem, QpSettings{}, m_warmStart);
    result.iterations = solution.iterations;
    result.polished = solution.polished;

    if (solution.status == QpStatus::Solved)
    {
        result.status = TorqueStatus::Solved;
        m_warmStart = QpWarmStart{solution.primal, solution.dual};

        result.accelerations = solution.primal.head(velocityDim);
        result.torques = solution.primal.segment(torqueOffset, joints);

        // Normal-force weighted average of the per-sole pressure points; the
        // same quantity globalZmp reports, evaluated without its coplanarity
        // screen so marginally tilted stance soles stay diagnosable.
        Eigen::Vector2d weightedCop = Eigen::Vector2d::Zero();
        double normalForceSum = 0.0;
        for (int k = 0; k < contactCount; k++)
        {
            const Contact& contact = contacts[static_cast<size_t>(k)];
            const Eigen::Matrix<double, 6, 1> worldWrench =
                solution.primal.segment<6>(wrenchOffset + 6 * k);
            if (contact.name[0] == 'l')
            {
                result.leftWrench = worldWrench;
            }
            else
            {
                result.rightWrench = worldWrench;
            }

            const Eigen::Matrix3d toLocal = contact.pose.rotation().transpose();
            Eigen::Matrix<double, 6, 1> soleWrench;
            soleWrench.head<3>() = toLocal * worldWrench.head<3>();
            soleWrench.tail<3>() = toLocal * worldWrench.tail<3>();
            if (const auto cop = localZmp(soleWrench, 0.5 * m_gains.minNormalForce))
            {
                const Eigen::Vector3d world =
                    contact.pose * Eigen::Vector3d(cop->x(), cop->y(), 0.0);
                weightedCop += soleWrench(2) * world.head<2>();
                normalForceSum += soleWrench(2);
            }
        }
        if (normalForceSum > 0.0)
        {
            result.reproducedZmp = weightedCop / normalForceSum;
        }

        result.dynamicsResidual =
            (problem.constraintMatrix.topRows(velocityDim) * solution.primal - bias)
                .lpNorm<Eigen::Infinity>();
        return result;
    }

    result.status =
        solution.status == QpStatus::MaxIterations ? TorqueStatus::Failed : TorqueStatus::Infeasible;
    m_warmStart.reset();

    const double peak = solution.dual.size() > 0 ? solution.dual.cwiseAbs().maxCoeff() : 0.0;
    std::ostringstream message;
    message << "torque qp " << statusString(solution.status) << "; suspect rows:";
    const int footStart = velocityDim;
    const int heightRow = velocityDim + 12;
    const int zmpStart = heightRow + 1;
    const int wrenchStart = zmpStart + 2;
    const int torqueStart = wrenchStart + contactCount * (m_gains.frictionFacets + 5);
    for (Eigen::Index i = 0; i < solution.dual.size(); i++)
    {
        if (peak == 0.0 || std::abs(solution.dual(i)) < 0.5 * peak)
        {
            continue;
        }
        const int index = static_cast<int>(i);
        if (index < footStart)
        {
            message << " dynamics[" << index << "]";
        }
        else if (index < heightRow)
        {
            message << (index < footStart + 6 ? " left_foot[" : " right_foot[")
                    << (index - footStart) % 6 << "]";
        }
        else if (index < zmpStart)
        {
            message << " com_height";
        }
        else if (index < wrenchStart)
        {
            message << " zmp[" << index - zmpStart << "]";
        }
        else if (index < torqueStart)
        {
            const int local = index - wrenchStart;
            const int contact = local / (m_gains.frictionFacets + 5);
            message << " wrench_" << contacts[static_cast<size_t>(contact)].name << "["
                    << local % (m_gains.frictionFacets + 5) << "]";
        }
        else
        {
            message << " torque[" << model.joint(index - torqueStart).name << "]";
        }
    }
    result.diagnosis = message.str();
    return result;
}

} // namespace dcmwalk
