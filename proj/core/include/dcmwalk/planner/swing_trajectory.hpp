#pragma once

#include <Eigen/Dense>

namespace dcmwalk
{

struct SwingSample
{
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
    double yaw = 0.0;
    double yawRate = 0.0;
};

/**
 * Foot flight arc between two flat footprints. Horizontal motion and yaw are
 * cubics with zero boundary rates; the height is two cubics meeting at the
 * apex above the midpoint, zero velocity at lift off, apex and touch down.
 * Before startTime the sample rests on the start pose, after endTime on the
 * goal, so the trajectory is also usable as a constant stance reference.
 */
class SwingTrajectory
{
public:
    SwingTrajectory(const Eigen::Vector2d& startPosition,
                    double startYaw,
                    const Eigen::Vector2d& goalPosition,
                    double goalYaw,
                    double startTime,
                    double endTime,
                    double apexHeight);

    SwingSample evaluate(double time) const;

    double startTime() const { return m_startTime; }
    double endTime() const { return m_endTime; }

private:
    Eigen::Vector2d m_start;
    Eigen::Vector2d m_goal;
    double m_startYaw = 0.0;
    double m_goalYaw = 0.0;
    double m_startTime = 0.0;
    double m_endTime = 0.0;
    double m_apexHeight = 0.0;
};

} // namespace dcmwalk
