#include <dcmwalk/estimation/legged_odometry.hpp>

#include <stdexcept>

#include <dcmwalk/math_utils.hpp>

namespace dcmwalk
{

LeggedOdometry::LeggedOdometry(const Model& model, const OdometrySettings& settings)
    : m_model(&model)
    , m_settings(settings)
    , m_kinDyn(model)
    , m_leftTrigger(settings.schmitt)
    , m_rightTrigger(settings.schmitt)
    , m_jointPositions(Eigen::VectorXd::Zero(model.numJoints()))
{
}

int LeggedOdometry::soleFrame(Side side) const
{
    return side == Side::Left ? m_model->leftFoot().frameIndex
                              : m_model->rightFoot().frameIndex;
}

void LeggedOdometry::reset(const Eigen::VectorXd& jointPositions,
                           const Eigen::Isometry3d& basePose,
                           ContactState leftState,
                           ContactState rightState)
{
    if (jointPositions.size() != m_model->numJoints())
    {
        throw std::invalid_argument("LeggedOdometry: joint positions have the wrong size");
    }
    m_leftTrigger.reset(leftState);
    m_rightTrigger.reset(rightState);
    m_jointPositions = jointPositions;
    m_fixedSide = m_settings.initialFixedSide;

    const ContactState fixedState =
        m_fixedSide == Side::Left ? leftState : rightState;
    if (fixedState != ContactState::Active)
    {
        throw std::invalid_argument("LeggedOdometry: the initial fixed sole must be active");
    }

    m_kinDyn.setState(basePose, jointPositions, Eigen::Matrix<double, 6, 1>::Zero(),
                      Eigen::VectorXd::Zero(jointPositions.size()));
    m_worldFromFixed = m_kinDyn.frameTransform(soleFrame(m_fixedSide));
    m_worldFromFixed.linear() = projectToRotation(m_worldFromFixed.linear());
    m_hasFixedFrame = true;
    m_basePose = basePose;
    m_switchCount = 0;
}

void LeggedOdometry::anchorTo(Side side)
{
    // Compose through the relative sole transform at the switch instant; the
    // base pose is continuous across the handover by construction.
    m_kinDyn.setState(Eigen::Isometry3d::Identity(), m_jointPositions,
                      Eigen::Matrix<double, 6, 1>::Zero(),
                      Eigen::VectorXd::Zero(m_jointPositions.size()));
    const Eigen::Isometry3d baseFromOld = m_kinDyn.frameTransform(soleFrame(m_fixedSide));
    const Eigen::Isometry3d baseFromNew = m_kinDyn.frameTransform(soleFrame(side));
    m_worldFromFixed = m_worldFromFixed * baseFromOld.inverse() * baseFromNew;
    m_worldFromFixed.linear() = projectToRotation(m_worldFromFixed.linear());
    m_fixedSide = side;
    m_switchCount++;
}

void LeggedOdometry::advance(const Eigen::VectorXd& jointPositions,
                             double leftNormalForce,
                             double rightNormalForce,
                             double timestamp)
{
    if (jointPositions.size() != m_model->numJoints())
    {
        throw std::invalid_argument("LeggedOdometry: joint positions have the wrong size");
    }
    m_jointPositions = jointPositions;
    m_leftTrigger.update(leftNormalForce, timestamp);
    m_rightTrigger.update(rightNormalForce, timestamp);

    if (m_hasFixedFrame)
    {
        const ContactState fixedState = m_fixedSide == Side::Left ? m_leftTrigger.state()
                                                                  : m_rightTrigger.state();
        if (fixedState == ContactState::Inactive)
        {
            const Side other = oppositeSide(m_fixedSide);
            const ContactState otherState = other == Side::Left ? m_leftTrigger.state()
                                                                : m_rightTrigger.state();
            if (otherState == ContactState::Active)
            {
                anchorTo(other);
            }
            else
            {
                m_hasFixedFrame = false;
            }
        }
    }

    if (m_hasFixedFrame)
    {
        m_kinDyn.setState(Eigen::Isometry3d::Identity(), m_jointPositions,
                          Eigen::Matrix<double, 6, 1>::Zero(),
                          Eigen::VectorXd::Zero(m_jointPositions.size()));
        const Eigen::Isometry3d baseFromFixed =
            m_kinDyn.frameTransform(soleFrame(m_fixedSide));
        m_basePose = m_worldFromFixed * baseFromFixed.inverse();
    }
}

const Eigen::Isometry3d& LeggedOdometry::basePose() const
{
    if (!m_hasFixedFrame)
    {
        throw std::runtime_error("LeggedOdometry: no active contact to anchor the base");
    }
    return m_basePose;
}

Eigen::Matrix<double, 6, 1>
LeggedOdometry::baseVelocity(const Eigen::VectorXd& jointVelocities)
{
    if (!m_hasFixedFrame)
    {
        throw std::runtime_error("LeggedOdometry: no active contact to anchor the base");
    }
    if (jointVelocities.size() != m_model->numJoints())
    {
        throw std::invalid_argument("LeggedOdometry: joint velocities have the wrong size");
    }
    m_kinDyn.setState(m_basePose, m_jointPositions, Eigen::Matrix<double, 6, 1>::Zero(),
                      Eigen::VectorXd::Zero(m_jointPositions.size()));
    const Eigen::MatrixXd jacobian = m_kinDyn.frameJacobian(soleFrame(m_fixedSide));
    const Eigen::Matrix<double, 6, 6> baseBlock = jacobian.leftCols<6>();

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(baseBlock);
    const double smallest = svd.singularValues().minCoeff();
    if (smallest <= 0.0
        || svd.singularValues().maxCoeff() / smallest > 1e12)
    {
        throw std::runtime_error("LeggedOdometry: fixed sole base Jacobian is singular");
    }
    return baseBlock.partialPivLu().solve(-jacobian.rightCols(jointVelocities.size())
                                          * jointVelocities);
}

} // namespace dcmwalk
