#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include <dcmwalk/planner/dcm_trajectory.hpp>
#include <dcmwalk/planner/footstep.hpp>
#include <dcmwalk/planner/swing_trajectory.hpp>

namespace dcmwalk
{

/// Thrown when no step duration within the configured bounds yields an
/// admissible step length for the requested speed.
class PlanInfeasible : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct PlannerSettings
{
    double timeStep = 0.01;

    double speed = 0.15;       ///< forward speed of the guiding unicycle (m/s)
    double turningRate = 0.0;  ///< unicycle turn rate (rad/s)
    double duration = 10.0;    ///< total plan horizon (s)

    double startupTime = 1.0;  ///< double support before the first step
    double settleTime = 1.0;   ///< minimum rest after the last step

    double minStepDuration = 0.5;
    double maxStepDuration = 1.2;
    double minStepLength = 0.0;
    double maxStepLength = 0.28;
    double feetDistance = 0.16;  ///< lateral distance between sole centers
    double swingApex = 0.03;

    /// Double support duration as a fraction of the shorter adjacent step.
    double doubleSupportRatio = 0.2;

    double comHeight = 0.53;
    double gravity = 9.81;
    Side firstSwing = Side::Left;

    double timeConstant() const { return std::sqrt(comHeight / gravity); }

    /// Throws std::invalid_argument on inconsistent values.
    void validate() const;
};

/// Duration and unicycle travel of one step. Candidate durations are tried on
/// a 0.1 s grid starting at the minimum; the first whose travel fits the
/// length bounds wins.
struct StepTiming
{
    double duration = 0.0;
    double length = 0.0;
};

StepTiming chooseStepTiming(const PlannerSettings& settings);

/// Footstep sequence for a straight or turning walk. The first two entries
/// are the current stance poses (first swing side first); the remaining
/// entries alternate sides, tracking the unicycle offset laterally by half
/// the feet distance. The last step closes the gait with the feet abreast.
std::vector<Footstep> planFootsteps(const PlannerSettings& settings,
                                    const Eigen::Vector2d& leftPosition,
                                    const Eigen::Vector2d& rightPosition);

enum class SupportPhase
{
    DoubleSupport,
    SingleSupportLeft,
    SingleSupportRight
};

inline const char* phaseName(SupportPhase phase)
{
    switch (phase)
    {
    case SupportPhase::SingleSupportLeft:
        return "ss_left";
    case SupportPhase::SingleSupportRight:
        return "ss_right";
    default:
        return "ds";
    }
}

struct FootReference
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
    double yaw = 0.0;
    double yawRate = 0.0;
    bool contact = true;
};

/// Complete sampled walk: footsteps, the zmp epoch sequence behind the dcm
/// reference, and per-sample reference arrays at the planner time step.
struct WalkingPlan
{
    double timeStep = 0.01;
    double timeConstant = 0.0;
    double comHeight = 0.0;

    std::vector<Footstep> footsteps;
    std::vector<DcmEpoch> epochs;
    std::vector<double> windowHalfWidths;

    std::vector<double> time;
    std::vector<Eigen::Vector2d> dcm;
    std::vector<Eigen::Vector2d> dcmVelocity;
    std::vector<Eigen::Vector2d> zmp;
    std::vector<Eigen::Vector2d> com;
    std::vector<Eigen::Vector2d> comVelocity;
    std::vector<FootReference> leftFoot;
    std::vector<FootReference> rightFoot;
    std::vector<SupportPhase> phase;

    std::size_t samples() const { return time.size(); }
};

/// Plans footsteps, the dcm/zmp reference and the swing arcs for a walk
/// starting from the given sole centers, then tabulates everything at the
/// planner time step. The com reference integrates the stable pendulum mode
/// from the midpoint of the initial feet.
WalkingPlan planWalk(const PlannerSettings& settings,
                     const Eigen::Vector2d& leftPosition,
                     const Eigen::Vector2d& rightPosition);

/// Convenience overload starting from feet abreast at the origin.
WalkingPlan planWalk(const PlannerSettings& settings);

} // namespace dcmwalk
