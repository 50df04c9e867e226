#include <dcmwalk/rigidbody/model.hpp>

#include <set>

#include <dcmwalk/math_utils.hpp>
#include <dcmwalk/text/structured_text.hpp>

namespace dcmwalk
{

Model::Model(std::string name,
             double gravity,
             std::vector<LinkDescription> links,
             std::vector<JointDescription> joints,
             std::vector<FrameDescription> frames,
             FootDescription leftFoot,
             FootDescription rightFoot)
    : m_name(std::move(name))
    , m_gravity(gravity)
    , m_links(std::move(links))
    , m_joints(std::move(joints))
    , m_frames(std::move(frames))
    , m_leftFoot(std::move(leftFoot))
    , m_rightFoot(std::move(rightFoot))
{
    validateTree();
}

void Model::validateTree() const
{
    if (m_links.empty())
    {
        throw std::invalid_argument("Model: at least the base link is required");
    }
    std::set<int> childLinks;
    for (size_t j = 0; j < m_joints.size(); j++)
    {
        const JointDescription& joint = m_joints[j];
        if (joint.parentLink < 0 || joint.parentLink >= numLinks() || joint.childLink <= 0
            || joint.childLink >= numLinks())
        {
            throw std::invalid_argument("Model: joint '" + joint.name
                                        + "' references an unknown link");
        }
        if (joint.parentLink >= joint.childLink)
        {
            throw std::invalid_argument("Model: joint '" + joint.name
                                        + "' must connect a parent that precedes its child");
        }
        if (!childLinks.insert(joint.childLink).second)
        {
            throw std::invalid_argument("Model: link '" + m_links[joint.childLink].name
                                        + "' has more than one inbound joint");
        }
        if (joint.axis.norm() < 1e-9)
        {
            throw std::invalid_argument("Model: joint '" + joint.name + "' has a zero axis");
        }
        if (joint.positionLower > joint.positionUpper)
        {
            throw std::invalid_argument("Model: joint '" + joint.name
                                        + "' has crossed position limits");
        }
    }
    for (int l = 1; l < numLinks(); l++)
    {
        if (childLinks.count(l) == 0)
        {
            throw std::invalid_argument("Model: link '" + m_links[l].name
                                        + "' is not connected to the tree");
        }
    }
    for (const FrameDescription& frame : m_frames)
    {
        if (frame.parentLink < 0 || frame.parentLink >= numLinks())
        {
            throw std::invalid_argument("Model: frame '" + frame.name
                                        + "' references an unknown link");
        }
    }
    for (const FootDescription* foot : {&m_leftFoot, &m_rightFoot})
    {
        if (foot->frameIndex < 0 || foot->frameIndex >= numFrames())
        {
            throw std::invalid_argument("Model: foot '" + foot->side
                                        + "' references an unknown frame");
        }
        if (foot->length <= 0.0 || foot->width <= 0.0)
        {
            throw std::invalid_argument("Model: foot '" + foot->side
                                        + "' must have positive length and width");
        }
    }
}

int Model::linkIndex(const std::string& name) const
{
    for (int i = 0; i < numLinks(); i++)
    {
        if (m_links[static_cast<size_t>(i)].name == name)
        {
            return i;
        }
    }
    return -1;
}

int Model::jointIndex(const std::string& name) const
{
    for (int i = 0; i < numJoints(); i++)
    {
        if (m_joints[static_cast<size_t>(i)].name == name)
        {
            return i;
        }
    }
    return -1;
}

int Model::frameIndex(const std::string& name) const
{
    for (int i = 0; i < numFrames(); i++)
    {
        if (m_frames[static_cast<size_t>(i)].name == name)
        {
            return i;
        }
    }
    return -1;
}

const FootDescription& Model::foot(const std::string& side) const
{
    if (side == "left")
    {
        return m_leftFoot;
    }
    if (side == "right")
    {
        return m_rightFoot;
    }
    throw std::invalid_argument("Model: unknown foot side '" + side + "'");
}

double Model::totalMass() const
{
    double mass = 0.0;
    for (const LinkDescription& link : m_links)
    {
        mass += link.mass;
    }
    return mass;
}

std::vector<std::string> Model::jointNames() const
{
    std::vector<std::string> names;
    names.reserve(m_joints.size());
    for (const JointDescription& joint : m_joints)
    {
        names.push_back(joint.name);
    }
    return names;
}

Eigen::VectorXd Model::jointPositionLower() const
{
    Eigen::VectorXd v(numJoints());
    for (int i = 0; i < numJoints(); i++)
    {
        v(i) = m_joints[static_cast<size_t>(i)].positionLower;
    }
    return v;
}

Eigen::VectorXd Model::jointPositionUpper() const
{
    Eigen::VectorXd v(numJoints());
    for (int i = 0; i < numJoints(); i++)
    {
        v(i) = m_joints[static_cast<size_t>(i)].positionUpper;
    }
    return v;
}

Eigen::VectorXd Model::jointVelocityLimits() const
{
    Eigen::VectorXd v(numJoints());
    for (int i = 0; i < numJoints(); i++)
    {
        v(i) = m_joints[static_cast<size_t>(i)].velocityLimit;
    }
    return v;
}

Eigen::VectorXd Model::jointTorqueLimits() const
{
    Eigen::VectorXd v(numJoints());
    for (int i = 0; i < numJoints(); i++)
    {
        v(i) = m_joints[static_cast<size_t>(i)].torqueLimit;
    }
    return v;
}

namespace
{

Eigen::Isometry3d transformFromEntries(const TextNode& node)
{
    Eigen::Isometry3d transform = Eigen::Isometry3d::Identity();
    if (node.hasEntry("origin"))
    {
        transform.translation() = node.vec3Entry("origin");
    }
    if (node.hasEntry("rpy"))
    {
        const Eigen::Vector3d rpy = node.vec3Entry("rpy");
        transform.linear() = rotationFromRpy(rpy.x(), rpy.y(), rpy.z());
    }
    return transform;
}

Eigen::Matrix3d inertiaFromEntry(const TextNode& node)
{
    const std::vector<double> values = node.numberListEntry("inertia");
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
    if (values.size() == 3)
    {
        inertia.diagonal() << values[0], values[1], values[2];
    }
    else if (values.size() == 6)
    {
        // xx yy zz xy xz yz
        inertia(0, 0) = values[0];
        inertia(1, 1) = values[1];
        inertia(2, 2) = values[2];
        inertia(0, 1) = inertia(1, 0) = values[3];
        inertia(0, 2) = inertia(2, 0) = values[4];
        inertia(1, 2) = inertia(2, 1) = values[5];
    }
    else
    {
        throw TextFormatError(node.location()
                              + ": 'inertia' expects 3 (diagonal) or 6 (xx yy zz xy xz yz) values");
    }
    return inertia;
}

FootDescription footFromNode(const TextNode& node, const std::vector<FrameDescription>& frames)
{
    FootDescription foot;
    foot.side = node.label;
    foot.frameName = node.stringEntry("frame");
    foot.length = node.scalarEntry("length");
    foot.width = node.scalarEntry("width");
    for (size_t i = 0; i < frames.size(); i++)
    {
        if (frames[i].name == foot.frameName)
        {
            foot.frameIndex = static_cast<int>(i);
        }
    }
    if (foot.frameIndex < 0)
    {
        throw TextFormatError(node.location() + ": unknown frame '" + foot.frameName + "'");
    }
    return foot;
}

} // namespace

Model Model::loadFromFile(const std::string& path)
{
    const TextNode root = parseStructuredTextFile(path);

    const std::string name = root.stringEntryOr("model", "unnamed");
    const double gravity = root.scalarEntryOr("gravity", 9.81);

    std::vector<LinkDescription> links;
    for (const TextNode* node : root.childrenOfType("link"))
    {
        if (node->label.empty())
        {
            throw TextFormatError(node->location() + ": link needs a name label");
        }
        LinkDescription link;
        link.name = node->label;
        link.mass = node->scalarEntry("mass");
        if (link.mass <= 0.0)
        {
            throw TextFormatError(node->location() + ": mass must be positive");
        }
        link.comOffset = node->hasEntry("com") ? node->vec3Entry("com") : Eigen::Vector3d::Zero();
        link.inertiaAtCom = inertiaFromEntry(*node);
        links.push_back(link);
    }

    const auto linkIndexByName = [&links](const std::string& linkName) {
        for (size_t i = 0; i < links.size(); i++)
        {
            if (links[i].name == linkName)
            {
                return static_cast<int>(i);
            }
        }
        return -1;
    };

    std::vector<JointDescription> joints;
    for (const TextNode* node : root.childrenOfType("joint"))
    {
        if (node->label.empty())
        {
            throw TextFormatError(node->location() + ": joint needs a name label");
        }
        JointDescription joint;
        joint.name = node->label;
        joint.parentLink = linkIndexByName(node->stringEntry("parent"));
        joint.childLink = linkIndexByName(node->stringEntry("child"));
        if (joint.parentLink < 0 || joint.childLink < 0)
        {
            throw TextFormatError(node->location() + ": unknown parent or child link");
        }
        joint.originTransform = transformFromEntries(*node);
        joint.axis = node->vec3Entry("axis").normalized();
        if (node->hasEntry("position_limits"))
        {
            const Eigen::Vector2d limits = node->vec2Entry("position_limits");
            joint.positionLower = limits(0);
            joint.positionUpper = limits(1);
        }
        joint.velocityLimit = node->scalarEntryOr("velocity_limit", 10.0);
        joint.torqueLimit = node->scalarEntryOr("torque_limit", 100.0);
        joints.push_back(joint);
    }

    std::vector<FrameDescription> frames;
    for (const TextNode* node : root.childrenOfType("frame"))
    {
        if (node->label.empty())
        {
            throw TextFormatError(node->location() + ": frame needs a name label");
        }
        FrameDescription frame;
        frame.name = node->label;
        frame.parentLink = linkIndexByName(node->stringEntry("parent"));
        if (frame.parentLink < 0)
        {
            throw TextFormatError(node->location() + ": unknown parent link");
        }
        frame.offset = transformFromEntries(*node);
        frames.push_back(frame);
    }

    const TextNode* left = root.findChild("foot", "left");
    const TextNode* right = root.findChild("foot", "right");
    if (left == nullptr || right == nullptr)
    {
        throw TextFormatError(root.file + ":1: model needs 'foot left' and 'foot right' blocks");
    }

    FootDescription leftFoot = footFromNode(*left, frames);
    FootDescription rightFoot = footFromNode(*right, frames);
    try
    {
        return Model(name, gravity, std::move(links), std::move(joints), std::move(frames),
                     std::move(leftFoot), std::move(rightFoot));
    }
    catch (const std::invalid_argument& error)
    {
        throw TextFormatError(root.file + ":1: " + error.what());
    }
}

} // namespace dcmwalk
