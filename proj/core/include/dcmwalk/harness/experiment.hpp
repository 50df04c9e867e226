#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <dcmwalk/harness/experiment_config.hpp>
#include <dcmwalk/harness/metrics.hpp>
#include <dcmwalk/harness/tick_log.hpp>
#include <dcmwalk/planner/walking_plan.hpp>
#include <dcmwalk/rigidbody/model.hpp>
#include <dcmwalk/wbc/ik_controller.hpp>

namespace dcmwalk
{

/// Rest configuration produced by the kinematic settle prelude: flat soles at
/// the requested stance width and the com vertically above their midpoint at
/// the pendulum height.
struct RestPosture
{
    Eigen::Isometry3d basePose = Eigen::Isometry3d::Identity();
    Eigen::VectorXd jointPositions;
};

/// Runs the velocity level controller on a standing robot until the soles sit
/// at (0, +-feetDistance/2, 0) and the com at (0, 0, comHeight). Throws
/// std::runtime_error when the posture does not converge.
RestPosture settleRestPosture(const Model& model,
                              const IkGains& gains,
                              double comHeight,
                              double feetDistance,
                              double timeStep);

struct ExperimentResult
{
    int exitCode = 0; ///< 0 completed, 2 fell
    bool fell = false;
    double fallTime = 0.0;
    WalkingPlan plan;
    ControlTickLog log;
    Metrics metrics;
};

/// Plans the walk described by the config and closes the loop tick by tick.
ExperimentResult runExperiment(const Model& model, const ExperimentConfig& config);

/// One line per footstep: side, position, yaw, impact time, step duration.
std::string formatFootsteps(const std::vector<Footstep>& footsteps);

/// Writes log.csv, metrics.txt and footsteps.txt into an existing directory.
void exportResult(const ExperimentResult& result, const std::string& directory);

} // namespace dcmwalk
