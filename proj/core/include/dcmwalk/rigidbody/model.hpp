#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace dcmwalk
{

struct LinkDescription
{
    std::string name;
    double mass = 0.0;
    Eigen::Vector3d comOffset = Eigen::Vector3d::Zero(); ///< in the link frame
    Eigen::Matrix3d inertiaAtCom = Eigen::Matrix3d::Zero(); ///< in the link frame, about the com
};

/// Revolute joint connecting parentLink to childLink. The joint frame
/// coincides with the child link frame; at zero position the child frame is
/// placed at originTransform relative to the parent link frame.
struct JointDescription
{
    std::string name;
    int parentLink = -1;
    int childLink = -1;
    Eigen::Isometry3d originTransform = Eigen::Isometry3d::Identity();
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ(); ///< in the child link frame
    double positionLower = -3.14;
    double positionUpper = 3.14;
    double velocityLimit = 10.0;
    double torqueLimit = 100.0;
};

/// Named frame rigidly attached to a link.
struct FrameDescription
{
    std::string name;
    int parentLink = -1;
    Eigen::Isometry3d offset = Eigen::Isometry3d::Identity();
};

/// Rectangular sole centered on a frame, x forward, y left.
struct FootDescription
{
    std::string side;      ///< "left" or "right"
    std::string frameName;
    int frameIndex = -1;
    double length = 0.0;   ///< along x
    double width = 0.0;    ///< along y

    /// Corner positions in the sole frame, z = 0.
    std::vector<Eigen::Vector3d> corners() const
    {
        const double hx = 0.5 * length;
        const double hy = 0.5 * width;
        return {{hx, hy, 0.0}, {hx, -hy, 0.0}, {-hx, -hy, 0.0}, {-hx, hy, 0.0}};
    }
};

/**
 * Kinematic tree of a floating base robot. Link 0 is the floating base; every
 * other link is reached through exactly one revolute joint, and joints are
 * ordered so that a joint's parent link always precedes its child link.
 */
class Model
{
public:
    /// Parses a structured text model file. Throws TextFormatError with a
    /// file:line anchor on malformed input.
    static Model loadFromFile(const std::string& path);

    const std::string& name() const { return m_name; }
    double gravity() const { return m_gravity; }

    int numLinks() const { return static_cast<int>(m_links.size()); }
    int numJoints() const { return static_cast<int>(m_joints.size()); }
    int numFrames() const { return static_cast<int>(m_frames.size()); }

    const LinkDescription& link(int index) const { return m_links.at(static_cast<size_t>(index)); }
    const JointDescription& joint(int index) const
    {
        return m_joints.at(static_cast<size_t>(index));
    }
    const FrameDescription& frame(int index) const
    {
        return m_frames.at(static_cast<size_t>(index));
    }

    int linkIndex(const std::string& name) const;
    int jointIndex(const std::string& name) const;
    int frameIndex(const std::string& name) const;

    const FootDescription& leftFoot() const { return m_leftFoot; }
    const FootDescription& rightFoot() const { return m_rightFoot; }
    const FootDescription& foot(const std::string& side) const;

    double totalMass() const;

    std::vector<std::string> jointNames() const;
    Eigen::VectorXd jointPositionLower() const;
    Eigen::VectorXd jointPositionUpper() const;
    Eigen::VectorXd jointVelocityLimits() const;
    Eigen::VectorXd jointTorqueLimits() const;

    /// Builds a model from parts; used by the loader and by tests.
    Model(std::string name,
          double gravity,
          std::vector<LinkDescription> links,
          std::vector<JointDescription> joints,
          std::vector<FrameDescription> frames,
          FootDescription leftFoot,
          FootDescription rightFoot);

private:
    void validateTree() const;

    std::string m_name;
    double m_gravity = 9.81;
    std::vector<LinkDescription> m_links;
    std::vector<JointDescription> m_joints;
    std::vector<FrameDescription> m_frames;
    FootDescription m_leftFoot;
    FootDescription m_rightFoot;
};

} // namespace dcmwalk
