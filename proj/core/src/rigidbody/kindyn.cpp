#include <dcmwalk/rigidbody/kindyn.hpp>

#include <dcmwalk/math_utils.hpp>

namespace dcmwalk
{

namespace
{

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// Motion cross product in Pluecker (linear; angular) coordinates.
Matrix6 crossMotion(const Vector6& v)
{
    Matrix6 m = Matrix6::Zero();
    const Eigen::Matrix3d sw = skew(v.tail<3>());
    m.topLeftCorner<3, 3>() = sw;
    m.topRightCorner<3, 3>() = skew(v.head<3>());
    m.bottomRightCorner<3, 3>() = sw;
    return m;
}

/// Force cross product, dual of crossMotion.
Matrix6 crossForce(const Vector6& v)
{
    Matrix6 m = Matrix6::Zero();
    const Eigen::Matrix3d sw = skew(v.tail<3>());
    m.topLeftCorner<3, 3>() = sw;
    m.bottomLeftCorner<3, 3>() = skew(v.head<3>());
    m.bottomRightCorner<3, 3>() = sw;
    return m;
}

} // namespace

KinDyn::KinDyn(Model model) : m_model(std::move(model))
{
    m_totalMass = m_model.totalMass();
    m_parentJoint.assign(static_cast<size_t>(m_model.numLinks()), -1);
    for (int j = 0; j < m_model.numJoints(); j++)
    {
        m_parentJoint[static_cast<size_t>(m_model.joint(j).childLink)] = j;
    }
    m_linkStates.resize(static_cast<size_t>(m_model.numLinks()));
    m_dofScrews.resize(6, velocityDimension());
    m_worldAxis.resize(static_cast<size_t>(m_model.numJoints()));
    m_worldAxisPoint.resize(static_cast<size_t>(m_model.numJoints()));
    m_jointPositions = Eigen::VectorXd::Zero(m_model.numJoints());
    m_jointVelocities = Eigen::VectorXd::Zero(m_model.numJoints());
    setState(Eigen::Isometry3d::Identity(), m_jointPositions, Vector6::Zero(), m_jointVelocities);
}

void KinDyn::setState(const Eigen::Isometry3d& basePose,
                      const Eigen::VectorXd& jointPositions,
                      const Vector6& baseVelocity,
                      const Eigen::VectorXd& jointVelocities)
{
    const int n = m_model.numJoints();
    if (jointPositions.size() != n || jointVelocities.size() != n)
    {
        throw std::invalid_argument("KinDyn::setState: joint vector size mismatch");
    }
    m_basePose = basePose;
    m_jointPositions = jointPositions;
    m_baseVelocity = baseVelocity;
    m_jointVelocities = jointVelocities;

    // Forward pass: frames, screws, velocities, bias accelerations, all in
    // world Pluecker coordinates about the world origin.
    m_linkStates[0].transform = basePose;

    const Eigen::Vector3d pBase = basePose.translation();
    for (int k = 0; k < 3; k++)
    {
        m_dofScrews.col(k).setZero();
        m_dofScrews(k, k) = 1.0;
        m_dofScrews.col(3 + k).setZero();
        m_dofScrews.col(3 + k).head<3>() = pBase.cross(Eigen::Vector3d::Unit(k));
        m_dofScrews(3 + k, 3 + k) = 1.0;
    }

    const Eigen::Vector3d vBase = baseVelocity.head<3>();
    const Eigen::Vector3d omegaBase = baseVelocity.tail<3>();
    m_linkStates[0].velocity.head<3>() = vBase + pBase.cross(omegaBase);
    m_linkStates[0].velocity.tail<3>() = omegaBase;
    m_linkStates[0].biasAcceleration.head<3>() = vBase.cross(omegaBase);
    m_linkStates[0].biasAcceleration.tail<3>().setZero();

    for (int j = 0; j < n; j++)
    {
        const JointDescription& joint = m_model.joint(j);
        const LinkState& parent = m_linkStates[static_cast<size_t>(joint.parentLink)];
        LinkState& child = m_linkStates[static_cast<size_t>(joint.childLink)];

        const Eigen::Isometry3d preJoint = parent.transform * joint.originTransform;
        child.transform =
            preJoint * Eigen::Isometry3d(Eigen::AngleAxisd(m_jointPositions(j), joint.axis));

        const Eigen::Vector3d axisWorld = child.transform.linear() * joint.axis;
        const Eigen::Vector3d axisPoint = child.transform.translation();
        m_worldAxis[static_cast<size_t>(j)] = axisWorld;
        m_worldAxisPoint[static_cast<size_t>(j)] = axisPoint;

        Vector6 screw;
        screw.head<3>() = axisPoint.cross(axisWorld);
        screw.tail<3>() = axisWorld;
        m_dofScrews.col(6 + j) = screw;

        const Vector6 jointVelocity = screw * m_jointVelocities(j);
        child.velocity = parent.velocity + jointVelocity;
        child.biasAcceleration =
            parent.biasAcceleration + crossMotion(child.velocity) * jointVelocity;
    }

    for (int l = 0; l < m_model.numLinks(); l++)
    {
        const LinkDescription& link = m_model.link(l);
        LinkState& state = m_linkStates[static_cast<size_t>(l)];
        state.worldCom = state.transform * link.comOffset;

        const Eigen::Matrix3d r = state.transform.linear();
        const Eigen::Matrix3d inertiaWorld = r * link.inertiaAtCom * r.transpose();
        const Eigen::Matrix3d c = skew(state.worldCom);
        state.spatialInertia.topLeftCorner<3, 3>() =
            link.mass * Eigen::Matrix3d::Identity();
        state.spatialInertia.topRightCorner<3, 3>() = -link.mass * c;
        state.spatialInertia.bottomLeftCorner<3, 3>() = link.mass * c;
        state.spatialInertia.bottomRightCorner<3, 3>() = inertiaWorld - link.mass * c * c;
    }
}

Eigen::VectorXd KinDyn::generalizedVelocity() const
{
    Eigen::VectorXd nu(velocityDimension());
    nu.head<6>() = m_baseVelocity;
    nu.tail(m_model.numJoints()) = m_jointVelocities;
    return nu;
}

Eigen::Isometry3d KinDyn::linkTransform(int linkIndex) const
{
    return m_linkStates.at(static_cast<size_t>(linkIndex)).transform;
}

Eigen::Isometry3d KinDyn::frameTransform(int frameIndex) const
{
    const FrameDescription& frame = m_model.frame(frameIndex);
    return m_linkStates.at(static_cast<size_t>(frame.parentLink)).transform * frame.offset;
}

Eigen::Isometry3d KinDyn::frameTransform(const std::string& frameName) const
{
    const int index = m_model.frameIndex(frameName);
    if (index < 0)
    {
        throw std::invalid_argument("KinDyn: unknown frame '" + frameName + "'");
    }
    return frameTransform(index);
}

Vector6 KinDyn::frameVelocity(int frameIndex) const
{
    const FrameDescription& frame = m_model.frame(frameIndex);
    const LinkState& state = m_linkStates.at(static_cast<size_t>(frame.parentLink));
    const Eigen::Vector3d p = frameTransform(frameIndex).translation();

    Vector6 velocity;
    velocity.head<3>() = state.velocity.head<3>() + state.velocity.tail<3>().cross(p);
    velocity.tail<3>() = state.velocity.tail<3>();
    return velocity;
}

Eigen::MatrixXd KinDyn::frameJacobian(int frameIndex) const
{
    const FrameDescription& frame = m_model.frame(frameIndex);
    const Eigen::Vector3d p = frameTransform(frameIndex).translation();

    Eigen::MatrixXd jacobian = Eigen::MatrixXd::Zero(6, velocityDimension());
    const auto addColumn = [&](int dof) {
        const Vector6& screw = m_dofScrews.col(dof);
        jacobian.col(dof).head<3>() = screw.head<3>() + screw.tail<3>().cross(p);
        jacobian.col(dof).tail<3>() = screw.tail<3>();
    };
    for (int k = 0; k < 6; k++)
    {
        addColumn(k);
    }
    int link = frame.parentLink;
    while (m_parentJoint[static_cast<size_t>(link)] >= 0)
    {
        const int j = m_parentJoint[static_cast<size_t>(link)];
        addColumn(6 + j);
        link = m_model.joint(j).parentLink;
    }
    return jacobian;
}

Eigen::MatrixXd KinDyn::frameJacobian(const std::string& frameName) const
{
    const int index = m_model.frameIndex(frameName);
    if (index < 0)
    {
        throw std::invalid_argument("KinDyn: unknown frame '" + frameName + "'");
    }
    return frameJacobian(index);
}

Vector6 KinDyn::frameBiasAcceleration(int frameIndex) const
{
    const FrameDescription& frame = m_model.frame(frameIndex);
    const LinkState& state = m_linkStates.at(static_cast<size_t>(frame.parentLink));
    const Eigen::Vector3d p = frameTransform(frameIndex).translation();

    const Eigen::Vector3d omega = state.velocity.tail<3>();
    const Eigen::Vector3d vPoint = state.velocity.head<3>() + omega.cross(p);
    const Eigen::Vector3d omegaDot = state.biasAcceleration.tail<3>();

    Vector6 bias;
    bias.head<3>() = state.biasAcceleration.head<3>() + omegaDot.cross(p) + omega.cross(vPoint);
    bias.tail<3>() = omegaDot;
    return bias;
}

Eigen::Vector3d KinDyn::comPosition() const
{
    Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        weighted += m_model.link(l).mass * m_linkStates[static_cast<size_t>(l)].worldCom;
    }
    return weighted / m_totalMass;
}

Eigen::Vector3d KinDyn::comVelocity() const
{
    Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        const LinkState& state = m_linkStates[static_cast<size_t>(l)];
        const Eigen::Vector3d vCom =
            state.velocity.head<3>() + state.velocity.tail<3>().cross(state.worldCom);
        weighted += m_model.link(l).mass * vCom;
    }
    return weighted / m_totalMass;
}

Eigen::MatrixXd KinDyn::comJacobian() const
{
    Eigen::MatrixXd jacobian = Eigen::MatrixXd::Zero(3, velocityDimension());
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        const double ratio = m_model.link(l).mass / m_totalMass;
        const Eigen::Vector3d& c = m_linkStates[static_cast<size_t>(l)].worldCom;

        const auto addColumn = [&](int dof) {
            const Vector6& screw = m_dofScrews.col(dof);
            jacobian.col(dof).head<3>() += ratio * (screw.head<3>() + screw.tail<3>().cross(c));
        };
        for (int k = 0; k < 6; k++)
        {
            addColumn(k);
        }
        int link = l;
        while (m_parentJoint[static_cast<size_t>(link)] >= 0)
        {
            const int j = m_parentJoint[static_cast<size_t>(link)];
            addColumn(6 + j);
            link = m_model.joint(j).parentLink;
        }
    }
    return jacobian;
}

Eigen::Vector3d KinDyn::comBiasAcceleration() const
{
    // Mass weighted bias acceleration of every link com point; the link data
    // is stored in Pluecker coordinates about the world origin.
    Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        const LinkState& state = m_linkStates[static_cast<size_t>(l)];
        const Eigen::Vector3d& c = state.worldCom;
        const Eigen::Vector3d omega = state.velocity.tail<3>();
        const Eigen::Vector3d pointVelocity = state.velocity.head<3>() + omega.cross(c);
        const Eigen::Vector3d pointBias = state.biasAcceleration.head<3>()
                                          + state.biasAcceleration.tail<3>().cross(c)
                                          + omega.cross(pointVelocity);
        weighted += m_model.link(l).mass * pointBias;
    }
    return weighted / m_totalMass;
}

Eigen::MatrixXd KinDyn::massMatrix() const
{
    const int n = m_model.numJoints();
    const int dim = velocityDimension();

    // Composite rigid body pass: accumulate subtree inertias towards the base.
    std::vector<Matrix6> composite(static_cast<size_t>(m_model.numLinks()));
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        composite[static_cast<size_t>(l)] = m_linkStates[static_cast<size_t>(l)].spatialInertia;
    }
    for (int l = m_model.numLinks() - 1; l >= 1; l--)
    {
        const int j = m_parentJoint[static_cast<size_t>(l)];
        composite[static_cast<size_t>(m_model.joint(j).parentLink)] +=
            composite[static_cast<size_t>(l)];
    }

    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(dim, dim);
    const auto baseScrews = m_dofScrews.leftCols<6>();
    mass.topLeftCorner<6, 6>() = baseScrews.transpose() * composite[0] * baseScrews;

    for (int j = 0; j < n; j++)
    {
        const int childLink = m_model.joint(j).childLink;
        const Vector6 force = composite[static_cast<size_t>(childLink)] * m_dofScrews.col(6 + j);

        int link = childLink;
        while (m_parentJoint[static_cast<size_t>(link)] >= 0)
        {
            const int a = m_parentJoint[static_cast<size_t>(link)];
            const double value = m_dofScrews.col(6 + a).dot(force);
            mass(6 + j, 6 + a) = value;
            mass(6 + a, 6 + j) = value;
            link = m_model.joint(a).parentLink;
        }
        const Eigen::Matrix<double, 6, 1> baseBlock = baseScrews.transpose() * force;
        mass.block<6, 1>(0, 6 + j) = baseBlock;
        mass.block<1, 6>(6 + j, 0) = baseBlock.transpose();
    }
    return mass;
}

Eigen::VectorXd KinDyn::projectToGeneralized(
    const std::vector<Vector6>& linkForces) const
{
    // Backward accumulation of subtree wrenches, then projection on the screws.
    std::vector<Vector6> composite = linkForces;
    for (int l = m_model.numLinks() - 1; l >= 1; l--)
    {
        const int j = m_parentJoint[static_cast<size_t>(l)];
        composite[static_cast<size_t>(m_model.joint(j).parentLink)] +=
            composite[static_cast<size_t>(l)];
    }

    Eigen::VectorXd generalized(velocityDimension());
    generalized.head<6>() = m_dofScrews.leftCols<6>().transpose() * composite[0];
    for (int j = 0; j < m_model.numJoints(); j++)
    {
        const int childLink = m_model.joint(j).childLink;
        generalized(6 + j) =
            m_dofScrews.col(6 + j).dot(composite[static_cast<size_t>(childLink)]);
    }
    return generalized;
}

Eigen::VectorXd KinDyn::generalizedBias() const
{
    // Newton-Euler at zero generalized acceleration. Gravity enters as a
    // uniform upward base acceleration, the usual trick.
    Vector6 gravityAcceleration = Vector6::Zero();
    gravityAcceleration(2) = m_model.gravity();

    std::vector<Vector6> forces(static_cast<size_t>(m_model.numLinks()));
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        const LinkState& state = m_linkStates[static_cast<size_t>(l)];
        const Vector6 acceleration = state.biasAcceleration + gravityAcceleration;
        forces[static_cast<size_t>(l)] = state.spatialInertia * acceleration
                                         + crossForce(state.velocity)
                                               * (state.spatialInertia * state.velocity);
    }
    return projectToGeneralized(forces);
}

Eigen::VectorXd KinDyn::gravityBias() const
{
    Vector6 gravityAcceleration = Vector6::Zero();
    gravityAcceleration(2) = m_model.gravity();

    std::vector<Vector6> forces(static_cast<size_t>(m_model.numLinks()));
    for (int l = 0; l < m_model.numLinks(); l++)
    {
        forces[static_cast<size_t>(l)] =
            m_linkStates[static_cast<size_t>(l)].spatialInertia * gravityAcceleration;
    }
    return projectToGeneralized(forces);
}

} // namespace dcmwalk
