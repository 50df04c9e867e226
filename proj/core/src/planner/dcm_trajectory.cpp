#include <dcmwalk/planner/dcm_trajectory.hpp>

#include <cmath>
#include <stdexcept>

namespace dcmwalk
{

DcmTrajectory::DcmTrajectory(std::vector<DcmEpoch> epochs,
                             double timeConstant,
                             std::vector<double> windowHalfWidths)
    : m_epochs(std::move(epochs))
    , m_timeConstant(timeConstant)
    , m_windowHalfWidths(std::move(windowHalfWidths))
{
    if (m_epochs.empty())
    {
        throw std::invalid_argument("DcmTrajectory: at least one epoch required");
    }
    if (m_timeConstant <= 0.0)
    {
        throw std::invalid_argument("DcmTrajectory: time constant must be positive");
    }
    if (m_windowHalfWidths.size() + 1 != m_epochs.size())
    {
        throw std::invalid_argument("DcmTrajectory: one blend window per interior boundary "
                                    "expected");
    }
    for (size_t i = 0; i + 1 < m_epochs.size(); i++)
    {
        const double boundary = m_epochs[i].startTime + m_epochs[i].duration;
        if (std::abs(boundary - m_epochs[i + 1].startTime) > 1e-9)
        {
            throw std::invalid_argument("DcmTrajectory: epochs must tile the time axis");
        }
        const double half = m_windowHalfWidths[i];
        if (half < 0.0 || half > 0.5 * m_epochs[i].duration
            || half > 0.5 * m_epochs[i + 1].duration)
        {
            throw std::invalid_argument("DcmTrajectory: blend window does not fit its epochs");
        }
        if (i > 0 && m_windowHalfWidths[i - 1] + half > m_epochs[i].duration + 1e-12)
        {
            throw std::invalid_argument("DcmTrajectory: blend windows overlap inside an epoch");
        }
    }
    m_initialDcm = backwardRecursion(m_epochs, m_timeConstant);
}

std::vector<Eigen::Vector2d> DcmTrajectory::backwardRecursion(const std::vector<DcmEpoch>& epochs,
                                                              double timeConstant)
{
    std::vector<Eigen::Vector2d> initial(epochs.size());
    // The trajectory comes to rest on the last epoch's zmp.
    initial.back() = epochs.back().zmp;
    for (size_t i = epochs.size() - 1; i-- > 0;)
    {
        const Eigen::Vector2d endOfStep = initial[i + 1];
        const double decay = std::exp(-epochs[i].duration / timeConstant);
        initial[i] = epochs[i].zmp + decay * (endOfStep - epochs[i].zmp);
    }
    return initial;
}

double DcmTrajectory::startTime() const
{
    return m_epochs.front().startTime;
}

double DcmTrajectory::endTime() const
{
    return m_epochs.back().startTime + m_epochs.back().duration;
}

DcmSample DcmTrajectory::evaluateEpoch(size_t index, double time) const
{
    const DcmEpoch& epoch = m_epochs[index];
    const double elapsed = time - epoch.startTime;
    const Eigen::Vector2d offset =
        std::exp(elapsed / m_timeConstant) * (m_initialDcm[index] - epoch.zmp);

    DcmSample sample;
    sample.position = epoch.zmp + offset;
    sample.velocity = offset / m_timeConstant;
    return sample;
}

DcmSample DcmTrajectory::evaluate(double time) const
{
    // Clamp outside the planned horizon: constant before the start, at rest on
    // the final zmp after the end.
    if (time <= startTime())
    {
        return evaluateEpoch(0, startTime());
    }
    if (time >= endTime())
    {
        DcmSample sample;
        sample.position = m_epochs.back().zmp;
        return sample;
    }

    size_t index = 0;
    while (index + 1 < m_epochs.size() && time >= m_epochs[index + 1].startTime)
    {
        index++;
    }

    // Blend window around the boundary behind or ahead of the current sample.
    const auto boundaryWindow = [&](size_t boundary) -> double {
        return m_windowHalfWidths[boundary];
    };
    size_t blendBoundary = m_epochs.size(); // invalid
    if (index + 1 < m_epochs.size())
    {
        const double boundaryTime = m_epochs[index + 1].startTime;
        if (time >= boundaryTime - boundaryWindow(index))
        {
            blendBoundary = index;
        }
    }
    if (blendBoundary == m_epochs.size() && index > 0)
    {
        const double boundaryTime = m_epochs[index].startTime;
        if (time < boundaryTime + boundaryWindow(index - 1))
        {
            blendBoundary = index - 1;
        }
    }

    if (blendBoundary == m_epochs.size())
    {
        return evaluateEpoch(index, time);
    }

    const double boundaryTime = m_epochs[blendBoundary + 1].startTime;
    const double half = boundaryWindow(blendBoundary);
    if (half <= 0.0)
    {
        return evaluateEpoch(index, time);
    }
    const double t0 = boundaryTime - half;
    const double t1 = boundaryTime + half;
    const DcmSample s0 = evaluateEpoch(blendBoundary, t0);
    const DcmSample s1 = evaluateEpoch(blendBoundary + 1, t1);

    // Cubic Hermite between the window edge states.
    const double h = t1 - t0;
    const double u = (time - t0) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;

    DcmSample sample;
    sample.position = (2.0 * u3 - 3.0 * u2 + 1.0) * s0.position
                      + (u3 - 2.0 * u2 + u) * h * s0.velocity
                      + (-2.0 * u3 + 3.0 * u2) * s1.position + (u3 - u2) * h * s1.velocity;
    sample.velocity = ((6.0 * u2 - 6.0 * u) * s0.position / h
                       + (3.0 * u2 - 4.0 * u + 1.0) * s0.velocity
                       + (-6.0 * u2 + 6.0 * u) * s1.position / h
                       + (3.0 * u2 - 2.0 * u) * s1.velocity);
    return sample;
}

Eigen::Vector2d DcmTrajectory::impliedZmp(double time) const
{
    const DcmSample sample = evaluate(time);
    return sample.position - m_timeConstant * sample.velocity;
}

} // namespace dcmwalk
