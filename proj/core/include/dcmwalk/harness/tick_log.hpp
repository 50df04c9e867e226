#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcmwalk
{

/// Everything recorded about one control tick. References come from the plan,
/// measurements from the simulated plant and the estimator, commands from the
/// two control layers.
struct TickRecord
{
    double time = 0.0;
    int phase = 0; ///< SupportPhase as an integer
    int contactLeft = 1;
    int contactRight = 1;

    Eigen::Vector2d dcmReference = Eigen::Vector2d::Zero();
    Eigen::Vector2d dcmVelocityReference = Eigen::Vector2d::Zero();
    Eigen::Vector2d zmpReference = Eigen::Vector2d::Zero();
    Eigen::Vector2d comReference = Eigen::Vector2d::Zero();
    Eigen::Vector2d comVelocityReference = Eigen::Vector2d::Zero();
    Eigen::Vector3d leftFootReference = Eigen::Vector3d::Zero();
    Eigen::Vector3d rightFootReference = Eigen::Vector3d::Zero();

    Eigen::Vector2d dcm = Eigen::Vector2d::Zero();
    Eigen::Vector2d com = Eigen::Vector2d::Zero();
    Eigen::Vector2d comVelocity = Eigen::Vector2d::Zero();
    Eigen::Vector3d leftFoot = Eigen::Vector3d::Zero();
    Eigen::Vector3d rightFoot = Eigen::Vector3d::Zero();
    Eigen::Vector2d measuredZmp = Eigen::Vector2d::Zero();

    Eigen::Vector2d commandedZmp = Eigen::Vector2d::Zero();
    Eigen::Vector2d comVelocityCommand = Eigen::Vector2d::Zero();

    int simplifiedStatus = 0; ///< 0 solved, 1 infeasible, 2 failed
    int simplifiedIterations = 0;
    int wholeBodyStatus = 0;
    int wholeBodyIterations = 0;
    int fallback = 0; ///< 1 when the zmp had to be projected into the polygon

    Eigen::Vector3d estimatedBase = Eigen::Vector3d::Zero();
    int estimatorSwitches = 0;

    Eigen::VectorXd torques;         ///< per joint, inverse dynamics or QP output
    Eigen::VectorXd jointVelocities; ///< per joint, rates the plant integrated
    Eigen::VectorXd commands;        ///< mode dependent, named by commandNames
};

/// Sampled log of one run. Serializes to csv with shortest round trip number
/// formatting, so equal logs compare byte for byte and a read back log equals
/// the written one exactly.
struct ControlTickLog
{
    int schemaVersion = 1;
    double timeStep = 0.01;
    int numJoints = 0;
    std::vector<std::string> commandNames;
    std::vector<TickRecord> records;
};

std::string writeCsv(const ControlTickLog& log);
void writeCsvFile(const ControlTickLog& log, const std::string& path);

ControlTickLog readCsv(const std::string& content);
ControlTickLog readCsvFile(const std::string& path);

} // namespace dcmwalk
