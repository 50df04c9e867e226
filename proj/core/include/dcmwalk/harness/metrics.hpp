#pragma once

#include <optional>
#include <string>
#include <vector>

#include <dcmwalk/harness/tick_log.hpp>
#include <dcmwalk/planner/footstep.hpp>

namespace dcmwalk
{

/// Comparison numbers of one run: tracking maxima, the energetic cost of
/// transport and the realized walking velocity.
struct Metrics
{
    int samples = 0;
    double duration = 0.0;

    double maxDcmError = 0.0;  ///< measured vs reference dcm (m)
    double maxComError = 0.0;  ///< measured vs reference com (m)
    double maxZmpError = 0.0;  ///< measured vs reference zmp (m)
    double maxFootError = 0.0; ///< sole position vs reference, both feet (m)

    double comDistance = 0.0;  ///< planar path length of the measured com (m)
    double positiveWork = 0.0; ///< sum of positive joint power times dt (J)

    /// Mean same side stride rate from the footstep impacts; empty when the
    /// plan holds fewer than two impacts of the leading side.
    std::optional<double> walkingVelocity;

    /// positiveWork / (mass g comDistance); empty for near stationary runs.
    std::optional<double> specificEnergeticCost;

    bool fell = false;
    double fallTime = 0.0;
};

Metrics computeMetrics(const ControlTickLog& log,
                       const std::vector<Footstep>& footsteps,
                       double totalMass,
                       double gravity = 9.81);

/// Deterministic key value rendering used for metrics.txt.
std::string formatMetrics(const Metrics& metrics);

} // namespace dcmwalk
