#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <dcmwalk/control/instantaneous_dcm.hpp>
#include <dcmwalk/control/mpc_dcm.hpp>
#include <dcmwalk/control/zmp_com.hpp>
#include <dcmwalk/estimation/schmitt_trigger.hpp>
#include <dcmwalk/planner/walking_plan.hpp>
#include <dcmwalk/text/structured_text.hpp>
#include <dcmwalk/wbc/ik_controller.hpp>
#include <dcmwalk/wbc/torque_controller.hpp>

namespace dcmwalk
{

enum class SimplifiedLayer
{
    Instantaneous,
    Predictive
};

enum class WholeBodyLayer
{
    Position,
    Velocity,
    TorqueOpenLoop
};

enum class PlantType
{
    LipmOnly,
    KinematicFullBody
};

struct DisturbanceEvent
{
    enum class Target
    {
        Dcm,
        MeasuredZmp
    };

    double time = 0.0;
    Target target = Target::Dcm;
    Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

struct SimulationSettings
{
    double velocityLag = 0.03;    ///< first order lag of the velocity plant (s)
    double zmpNoiseStd = 0.0;     ///< additive noise on the measured zmp (m)
    double fallThreshold = 0.3;   ///< dcm error norm declaring a fall (m)
    double contactForce = 200.0;  ///< scripted normal force on loaded soles (N)

    void validate() const;
};

/**
 * Full description of one benchmark run: the architecture cell, the plant,
 * and every module's gain block. A fixed (config, seed) pair determines the
 * produced log byte for byte.
 */
struct ExperimentConfig
{
    std::string modelPath = "models/mini_biped.model";
    std::uint64_t seed = 1;

    SimplifiedLayer simplified = SimplifiedLayer::Instantaneous;
    WholeBodyLayer wholeBody = WholeBodyLayer::Position;
    PlantType plant = PlantType::KinematicFullBody;

    PlannerSettings planner;
    DcmGains dcmGains;
    ZmpComGains zmpComGains;
    MpcSettings mpc;
    IkGains ikGains;
    TorqueGains torqueGains;
    SchmittSettings schmitt;
    SimulationSettings simulation;
    std::vector<DisturbanceEvent> disturbances;

    void validate() const;

    /// Short cell name, e.g. "instxpos" or "mpcxtrq".
    std::string architectureName() const;

    static ExperimentConfig fromFile(const std::string& path);
    static ExperimentConfig fromNode(const TextNode& root);
};

/// Parses "<inst|mpc>x<pos|vel|trq>"; throws std::invalid_argument otherwise.
std::pair<SimplifiedLayer, WholeBodyLayer> parseArchitecture(const std::string& name);

} // namespace dcmwalk
