#include <dcmwalk/harness/metrics.hpp>

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <system_error>

namespace dcmwalk
{

namespace
{

constexpr double kMinTravel = 0.01; ///< m, below this the cost of transport is meaningless

std::string formatNumber(double value)
{
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc())
        throw std::runtime_error("metrics: number formatting failed");
    return std::string(buffer, result.ptr);
}

} // namespace

Metrics computeMetrics(const ControlTickLog& log,
                       const std::vector<Footstep>& footsteps,
                       double totalMass,
                       double gravity)
{
    if (!(totalMass > 0.0) || !(gravity > 0.0))
        throw std::invalid_argument("metrics: mass and gravity must be positive");

    Metrics metrics;
    metrics.samples = static_cast<int>(log.records.size());
    if (!log.records.empty())
        metrics.duration = log.records.back().time - log.records.front().time + log.timeStep;

    const TickRecord* previous = nullptr;
    for (const TickRecord& record : log.records)
    {
        metrics.maxDcmError
            = std::max(metrics.maxDcmError, (record.dcm - record.dcmReference).norm());
        metrics.maxComError
            = std::max(metrics.maxComError, (record.com - record.comReference).norm());
        metrics.maxZmpError
            = std::max(metrics.maxZmpError, (record.measuredZmp - record.zmpReference).norm());
        metrics.maxFootError
            = std::max({metrics.maxFootError,
                        (record.leftFoot - record.leftFootReference).norm(),
                        (record.rightFoot - record.rightFootReference).norm()});
        if (previous != nullptr)
            metrics.comDistance += (record.com - previous->com).norm();
        for (Eigen::Index j = 0; j < record.torques.size(); ++j)
            metrics.positiveWork
                += std::max(record.torques[j] * record.jointVelocities[j], 0.0) * log.timeStep;
        previous = &record;
    }

    if (metrics.comDistance >= kMinTravel)
        metrics.specificEnergeticCost
            = metrics.positiveWork / (totalMass * gravity * metrics.comDistance);

    // Stride rate between the first and last impact of the side stepping
    // first; same side strides are insensitive to the lateral stance offset.
    std::vector<const Footstep*> impacts;
    for (const Footstep& step : footsteps)
        if (step.impactTime > 0.0)
            impacts.push_back(&step);
    if (impacts.size() >= 2)
    {
        const Side lead = impacts.front()->side;
        const Footstep* first = nullptr;
        const Footstep* last = nullptr;
        for (const Footstep* step : impacts)
        {
            if (step->side != lead)
                continue;
            if (first == nullptr)
                first = step;
            last = step;
        }
        if (first != nullptr && last != nullptr && last->impactTime > first->impactTime)
            metrics.walkingVelocity = (last->position - first->position).norm()
                                      / (last->impactTime - first->impactTime);
    }

    return metrics;
}

std::string formatMetrics(const Metrics& metrics)
{
    std::string out;
    const auto line = [&out](const std::string& key, const std::string& value) {
        out += key;
        out += ' ';
        out += value;
        out += '\n';
    };
    line("samples", std::to_string(metrics.samples));
    line("duration", formatNumber(metrics.duration));
    line("max_dcm_error", formatNumber(metrics.maxDcmError));
    line("max_com_error", formatNumber(metrics.maxComError));
    line("max_zmp_error", formatNumber(metrics.maxZmpError));
    line("max_foot_error", formatNumber(metrics.maxFootError));
    line("com_distance", formatNumber(metrics.comDistance));
    line("positive_work", formatNumber(metrics.positiveWork));
    if (metrics.walkingVelocity)
        line("walking_velocity", formatNumber(*metrics.walkingVelocity));
    if (metrics.specificEnergeticCost)
        line("specific_energetic_cost", formatNumber(*metrics.specificEnergeticCost));
    line("fell", metrics.fell ? "1" : "0");
    line("fall_time", formatNumber(metrics.fallTime));
    return out;
}

} // namespace dcmwalk
