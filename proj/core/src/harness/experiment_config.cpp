#include <dcmwalk/harness/experiment_config.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace dcmwalk
{

namespace
{

std::string lowered(std::string text)
{
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return text;
}

Eigen::Matrix2d gain2(const TextNode& node, const std::string& key, const Eigen::Matrix2d& fallback)
{
    return node.hasEntry(key) ? (node.scalarEntry(key) * Eigen::Matrix2d::Identity()).eval()
                              : fallback;
}

Eigen::Matrix3d gain3(const TextNode& node, const std::string& key, const Eigen::Matrix3d& fallback)
{
    return node.hasEntry(key) ? (node.scalarEntry(key) * Eigen::Matrix3d::Identity()).eval()
                              : fallback;
}

Side parseSide(const TextNode& node, const std::string& key)
{
    const std::string name = lowered(node.stringEntry(key));
    if (name == "left")
        return Side::Left;
    if (name == "right")
        return Side::Right;
    throw TextFormatError(node.location() + ": unknown side '" + name + "' for " + key);
}

void loadPlanner(const TextNode& node, PlannerSettings& p)
{
    p.timeStep = node.scalarEntryOr("time_step", p.timeStep);
    p.speed = node.scalarEntryOr("speed", p.speed);
    p.turningRate = node.scalarEntryOr("turning_rate", p.turningRate);
    p.duration = node.scalarEntryOr("duration", p.duration);
    p.startupTime = node.scalarEntryOr("startup_time", p.startupTime);
    p.settleTime = node.scalarEntryOr("settle_time", p.settleTime);
    p.minStepDuration = node.scalarEntryOr("min_step_duration", p.minStepDuration);
    p.maxStepDuration = node.scalarEntryOr("max_step_duration", p.maxStepDuration);
    p.minStepLength = node.scalarEntryOr("min_step_length", p.minStepLength);
    p.maxStepLength = node.scalarEntryOr("max_step_length", p.maxStepLength);
    p.feetDistance = node.scalarEntryOr("feet_distance", p.feetDistance);
    p.swingApex = node.scalarEntryOr("swing_apex", p.swingApex);
    p.doubleSupportRatio = node.scalarEntryOr("double_support_ratio", p.doubleSupportRatio);
    p.comHeight = node.scalarEntryOr("com_height", p.comHeight);
    p.gravity = node.scalarEntryOr("gravity", p.gravity);
    if (node.hasEntry("first_swing"))
        p.firstSwing = parseSide(node, "first_swing");
}

void loadIk(const TextNode& node, IkGains& g)
{
    g.torsoWeight = node.scalarEntryOr("torso_weight", g.torsoWeight);
    g.postureWeight = node.scalarEntryOr("posture_weight", g.postureWeight);
    g.postureGain = node.scalarEntryOr("posture_gain", g.postureGain);
    g.footLinearGain = gain3(node, "foot_linear_gain", g.footLinearGain);
    g.footIntegralGain = gain3(node, "foot_integral_gain", g.footIntegralGain);
    g.footAngularGain = gain3(node, "foot_angular_gain", g.footAngularGain);
    g.torsoAngularGain = gain3(node, "torso_angular_gain", g.torsoAngularGain);
    g.comGain = gain3(node, "com_gain", g.comGain);
    g.comIntegralGain = gain3(node, "com_integral_gain", g.comIntegralGain);
    if (node.hasEntry("foot_integral_limit"))
        g.footIntegralLimit = Eigen::Vector3d::Constant(node.scalarEntry("foot_integral_limit"));
    if (node.hasEntry("com_integral_limit"))
        g.comIntegralLimit = Eigen::Vector3d::Constant(node.scalarEntry("com_integral_limit"));
    g.jointVelocityBound = node.scalarEntryOr("joint_velocity_bound", g.jointVelocityBound);
}

void loadTorque(const TextNode& node, TorqueGains& g)
{
    g.torsoWeight = node.scalarEntryOr("torso_weight", g.torsoWeight);
    g.postureWeight = node.scalarEntryOr("posture_weight", g.postureWeight);
    g.torqueWeight = node.scalarEntryOr("torque_weight", g.torqueWeight);
    if (node.hasEntry("wrench_weight"))
    {
        const std::vector<double> values = node.numberListEntry("wrench_weight");
        if (values.size() == 1)
            g.wrenchWeight.setConstant(values.front());
        else if (values.size() == 6)
            g.wrenchWeight = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(values.data());
        else
            throw TextFormatError(node.location() + ": wrench_weight wants 1 or 6 numbers");
    }
    g.wrenchAboutNominal = node.boolEntryOr("wrench_about_nominal", g.wrenchAboutNominal);
    g.attitudeCoupling = node.scalarEntryOr("attitude_coupling", g.attitudeCoupling);
    g.attitudeDamping = node.scalarEntryOr("attitude_damping", g.attitudeDamping);
    g.attitudeStiffness = node.scalarEntryOr("attitude_stiffness", g.attitudeStiffness);
    g.postureStiffness = node.scalarEntryOr("posture_stiffness", g.postureStiffness);
    g.postureDamping = node.scalarEntryOr("posture_damping", g.postureDamping);
    g.footStiffness = gain3(node, "foot_stiffness", g.footStiffness);
    g.footDamping = gain3(node, "foot_damping", g.footDamping);
    g.comHeightStiffness = node.scalarEntryOr("com_height_stiffness", g.comHeightStiffness);
    g.comHeightDamping = node.scalarEntryOr("com_height_damping", g.comHeightDamping);
    g.frictionCoefficient = node.scalarEntryOr("friction_coefficient", g.frictionCoefficient);
    if (node.hasEntry("friction_facets"))
        g.frictionFacets = node.intEntry("friction_facets");
    g.minNormalForce = node.scalarEntryOr("min_normal_force", g.minNormalForce);
}

DisturbanceEvent loadDisturbance(const TextNode& node)
{
    DisturbanceEvent event;
    event.time = node.scalarEntry("time");
    const std::string target = lowered(node.stringEntryOr("target", "dcm"));
    if (target == "dcm")
        event.target = DisturbanceEvent::Target::Dcm;
    else if (target == "zmp")
        event.target = DisturbanceEvent::Target::MeasuredZmp;
    else
        throw TextFormatError(node.location() + ": unknown disturbance target '" + target + "'");
    event.offset = node.vec2Entry("offset");
    return event;
}

} // namespace

void SimulationSettings::validate() const
{
    if (!(velocityLag > 0.0))
        throw std::invalid_argument("simulation: velocity_lag must be positive");
    if (!(zmpNoiseStd >= 0.0))
        throw std::invalid_argument("simulation: zmp_noise_std must be nonnegative");
    if (!(fallThreshold > 0.0))
        throw std::invalid_argument("simulation: fall_threshold must be positive");
    if (!(contactForce > 0.0))
        throw std::invalid_argument("simulation: contact_force must be positive");
}

void ExperimentConfig::validate() const
{
    planner.validate();
    dcmGains.validate();
    zmpComGains.validate(planner.timeConstant());
    mpc.validate();
    ikGains.validate();
    torqueGains.validate();
    schmitt.validate();
    simulation.validate();

    if (std::abs(mpc.timeStep - planner.timeStep) > 1e-12)
        throw std::invalid_argument("mpc time step must match the planner time step");
    if (simulation.contactForce <= schmitt.onThreshold)
        throw std::invalid_argument("contact_force must exceed the contact on_threshold");
    for (const DisturbanceEvent& event : disturbances)
    {
        if (!(event.time >= 0.0))
            throw std::invalid_argument("disturbance times must be nonnegative");
        if (!event.offset.allFinite())
            throw std::invalid_argument("disturbance offsets must be finite");
    }
}

std::string ExperimentConfig::architectureName() const
{
    std::string name = simplified == SimplifiedLayer::Instantaneous ? "inst" : "mpc";
    name += 'x';
    switch (wholeBody)
    {
    case WholeBodyLayer::Position:
        name += "pos";
        break;
    case WholeBodyLayer::Velocity:
        name += "vel";
        break;
    case WholeBodyLayer::TorqueOpenLoop:
        name += "trq";
        break;
    }
    return name;
}

ExperimentConfig ExperimentConfig::fromFile(const std::string& path)
{
    return fromNode(parseStructuredTextFile(path));
}

ExperimentConfig ExperimentConfig::fromNode(const TextNode& root)
{
    ExperimentConfig config;
    config.modelPath = root.stringEntryOr("model", config.modelPath);
    if (root.hasEntry("seed"))
        config.seed = static_cast<std::uint64_t>(root.intEntry("seed"));
    if (root.hasEntry("architecture"))
    {
        const auto [simplified, wholeBody] = parseArchitecture(root.stringEntry("architecture"));
        config.simplified = simplified;
        config.wholeBody = wholeBody;
    }
    if (root.hasEntry("plant"))
    {
        const std::string plant = lowered(root.stringEntry("plant"));
        if (plant == "lipm")
            config.plant = PlantType::LipmOnly;
        else if (plant == "kinematic")
            config.plant = PlantType::KinematicFullBody;
        else
            throw TextFormatError(root.location() + ": unknown plant '" + plant + "'");
    }

    if (const TextNode* node = root.findChild("planner"))
        loadPlanner(*node, config.planner);

    if (const TextNode* node = root.findChild("dcm_control"))
    {
        config.dcmGains.proportional = gain2(*node, "proportional", config.dcmGains.proportional);
        config.dcmGains.integral = gain2(*node, "integral", config.dcmGains.integral);
        if (node->hasEntry("integral_limit"))
            config.dcmGains.integralLimit
                = Eigen::Vector2d::Constant(node->scalarEntry("integral_limit"));
    }

    if (const TextNode* node = root.findChild("zmp_com"))
    {
        config.zmpComGains.zmp = gain2(*node, "zmp_gain", config.zmpComGains.zmp);
        config.zmpComGains.com = gain2(*node, "com_gain", config.zmpComGains.com);
    }

    if (const TextNode* node = root.findChild("mpc"))
    {
        if (node->hasEntry("horizon"))
            config.mpc.horizon = node->intEntry("horizon");
        config.mpc.stateWeight = gain2(*node, "state_weight", config.mpc.stateWeight);
        config.mpc.terminalWeight = gain2(*node, "terminal_weight", config.mpc.terminalWeight);
        config.mpc.inputRateWeight = gain2(*node, "input_rate_weight", config.mpc.inputRateWeight);
    }

    if (const TextNode* node = root.findChild("ik"))
        loadIk(*node, config.ikGains);

    if (const TextNode* node = root.findChild("torque"))
        loadTorque(*node, config.torqueGains);

    if (const TextNode* node = root.findChild("contact"))
    {
        config.schmitt.onThreshold = node->scalarEntryOr("on_threshold", config.schmitt.onThreshold);
        config.schmitt.offThreshold
            = node->scalarEntryOr("off_threshold", config.schmitt.offThreshold);
        config.schmitt.onDwell = node->scalarEntryOr("on_dwell", config.schmitt.onDwell);
        config.schmitt.offDwell = node->scalarEntryOr("off_dwell", config.schmitt.offDwell);
    }

    if (const TextNode* node = root.findChild("simulation"))
    {
        config.simulation.velocityLag
            = node->scalarEntryOr("velocity_lag", config.simulation.velocityLag);
        config.simulation.zmpNoiseStd
            = node->scalarEntryOr("zmp_noise_std", config.simulation.zmpNoiseStd);
        config.simulation.fallThreshold
            = node->scalarEntryOr("fall_threshold", config.simulation.fallThreshold);
        config.simulation.contactForce
            = node->scalarEntryOr("contact_force", config.simulation.contactForce);
    }

    for (const TextNode* node : root.childrenOfType("disturbance"))
        config.disturbances.push_back(loadDisturbance(*node));

    config.mpc.timeStep = config.planner.timeStep;
    config.validate();
    return config;
}

std::pair<SimplifiedLayer, WholeBodyLayer> parseArchitecture(const std::string& name)
{
    const std::string low = lowered(name);
    SimplifiedLayer simplified;
    std::string rest;
    if (low.rfind("instx", 0) == 0)
    {
        simplified = SimplifiedLayer::Instantaneous;
        rest = low.substr(5);
    }
    else if (low.rfind("mpcx", 0) == 0)
    {
        simplified = SimplifiedLayer::Predictive;
        rest = low.substr(4);
    }
    else
        throw std::invalid_argument("unknown architecture '" + name
                                    + "', expected <inst|mpc>x<pos|vel|trq>");

    WholeBodyLayer wholeBody;
    if (rest == "pos")
        wholeBody = WholeBodyLayer::Position;
    else if (rest == "vel")
        wholeBody = WholeBodyLayer::Velocity;
    else if (rest == "trq")
        wholeBody = WholeBodyLayer::TorqueOpenLoop;
    else
        throw std::invalid_argument("unknown architecture '" + name
                                    + "', expected <inst|mpc>x<pos|vel|trq>");

    return {simplified, wholeBody};
}

} // namespace dcmwalk
