#include <dcmwalk/planner/swing_trajectory.hpp>

#include <stdexcept>

namespace dcmwalk
{

namespace
{

struct CubicSample
{
    double value = 0.0;
    double rate = 0.0;
    double curvature = 0.0;
};

/// Cubic from (0, a) to (1, b) with zero boundary rates, rescaled to [t0, t1].
CubicSample restToRestCubic(double a, double b, double t0, double t1, double time)
{
    const double h = t1 - t0;
    const double u = (time - t0) / h;
    const double u2 = u * u;

    CubicSample sample;
    sample.value = a + (b - a) * (3.0 * u2 - 2.0 * u2 * u);
    sample.rate = (b - a) * (6.0 * u - 6.0 * u2) / h;
    sample.curvature = (b - a) * (6.0 - 12.0 * u) / (h * h);
    return sample;
}

} // namespace

SwingTrajectory::SwingTrajectory(const Eigen::Vector2d& startPosition,
                                 double startYaw,
                                 const Eigen::Vector2d& goalPosition,
                                 double goalYaw,
                                 double startTime,
                                 double endTime,
                                 double apexHeight)
    : m_start(startPosition)
    , m_goal(goalPosition)
    , m_startYaw(startYaw)
    , m_goalYaw(goalYaw)
    , m_startTime(startTime)
    , m_endTime(endTime)
    , m_apexHeight(apexHeight)
{
    if (endTime <= startTime)
    {
        throw std::invalid_argument("SwingTrajectory: end time must follow start time");
    }
    if (apexHeight < 0.0)
    {
        throw std::invalid_argument("SwingTrajectory: apex height must be non-negative");
    }
}

SwingSample SwingTrajectory::evaluate(double time) const
{
    SwingSample sample;
    if (time <= m_startTime)
    {
        sample.position << m_start, 0.0;
        sample.yaw = m_startYaw;
        return sample;
    }
    if (time >= m_endTime)
    {
        sample.position << m_goal, 0.0;
        sample.yaw = m_goalYaw;
        return sample;
    }

    for (int axis = 0; axis < 2; axis++)
    {
        const CubicSample c =
            restToRestCubic(m_start(axis), m_goal(axis), m_startTime, m_endTime, time);
        sample.position(axis) = c.value;
        sample.velocity(axis) = c.rate;
        sample.acceleration(axis) = c.curvature;
    }

    const double midTime = 0.5 * (m_startTime + m_endTime);
    const CubicSample z = time < midTime
                              ? restToRestCubic(0.0, m_apexHeight, m_startTime, midTime, time)
                              : restToRestCubic(m_apexHeight, 0.0, midTime, m_endTime, time);
    sample.position.z() = z.value;
    sample.velocity.z() = z.rate;
    sample.acceleration.z() = z.curvature;

    const CubicSample yaw = restToRestCubic(m_startYaw, m_goalYaw, m_startTime, m_endTime, time);
    sample.yaw = yaw.value;
    sample.yawRate = yaw.rate;
    return sample;
}

} // namespace dcmwalk
